/*
 * Copyright 2026 The provscope Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "provscope/ingest.hpp"

namespace provscope::graph {

using ingest::LogRecord;

// Dense, contiguous vertex index.
struct NodeId {
    std::uint32_t index = 0;

    friend constexpr auto operator<=>(NodeId, NodeId) = default;
};

enum class EdgeKind : std::uint8_t {
    Sequential,          // chain order of one user's distinct timestamps
    Causal,              // parent process -> child, directional
    ConcurrentAttach,    // same-timestamp log -> chain node of that timestamp
    ConcurrentInternal,  // between logs of one same-timestamp group
};

std::string_view to_string(EdgeKind kind) noexcept;

struct Edge {
    NodeId src;
    NodeId dst;
    EdgeKind kind;
};

// One adjacency entry. reverse is set only on the child's view of a Causal
// edge, pointing back at the parent.
struct Adjacent {
    NodeId node;
    EdgeKind kind;
    bool reverse = false;
};

// Log provenance graph. Append-only; one writer, then any number of readers.
//
// Per user the records form a main chain with one node per distinct
// timestamp. A record whose timestamp equals the chain node's timestamp is a
// concurrent log: it attaches to that chain node and connects to every other
// concurrent log of the same timestamp. Records naming a parent process get a
// directional edge from the most recent 4688/4689 node of the same user whose
// ProcessName (or, failing that, BaseFileName) equals the parent name.
class ProvGraph {
public:
    // Inserts rec under the construction rules. Records of one user must
    // arrive in non-decreasing timestamp order; build_graph guarantees this.
    NodeId add_log(LogRecord rec);

    // Low-level primitives for fixtures and loaders: no rules applied.
    NodeId add_node(LogRecord rec);
    void connect(NodeId src, NodeId dst, EdgeKind kind);

    // Adjacency in insertion order. Throws LookupError for unknown ids.
    std::span<const Adjacent> neighbors(NodeId v) const;
    const LogRecord& record(NodeId v) const;
    bool contains(NodeId v) const noexcept { return v.index < records_.size(); }

    std::size_t node_count() const noexcept { return records_.size(); }
    std::size_t edge_count() const noexcept { return edges_.size(); }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    std::size_t count_edges(EdgeKind kind) const noexcept;

    // Chain node of the user's latest distinct timestamp.
    std::optional<NodeId> chain_tail(const std::string& user) const;

    // "src dst kind" per line.
    void write_edge_list(std::ostream& out) const;
    // node_id,user_id,timestamp,event_id,process_name,base_file_name,logon_type,parent_process_name,source_line
    void write_node_table(std::ostream& out) const;

private:
    struct UserState {
        NodeId chain_node;
        std::int64_t chain_timestamp = 0;
        std::vector<NodeId> concurrent;  // logs sharing chain_timestamp, excluding chain_node
        std::unordered_map<std::string, NodeId> spawn_by_process;
        std::unordered_map<std::string, NodeId> spawn_by_base;
    };

    void check(NodeId v) const;

    std::vector<LogRecord> records_;
    std::vector<std::vector<Adjacent>> adjacency_;
    std::vector<Edge> edges_;
    std::unordered_map<std::string, UserState> users_;
};

// Event ids that can be the parent end of a causal edge.
bool is_process_event(std::int32_t event_id) noexcept;

struct BuiltGraph {
    ProvGraph graph;
    std::vector<std::size_t> record_of_node;  // input index of each node
    std::vector<NodeId> node_of_record;       // inverse mapping
};

// Stable-sorts records by timestamp (resolving per-user out-of-order
// arrival) and folds add_log over them.
BuiltGraph build_graph(std::span<const LogRecord> records);

} // namespace provscope::graph

template <>
struct std::hash<provscope::graph::NodeId> {
    std::size_t operator()(provscope::graph::NodeId id) const noexcept { return std::hash<std::uint32_t>{}(id.index); }
};
