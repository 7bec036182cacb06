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

#include "provscope/provgraph.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

#include "provscope/error.hpp"

namespace provscope::graph {

std::string_view to_string(EdgeKind kind) noexcept {
    switch (kind) {
    case EdgeKind::Sequential: return "sequential";
    case EdgeKind::Causal: return "causal";
    case EdgeKind::ConcurrentAttach: return "concurrent_attach";
    case EdgeKind::ConcurrentInternal: return "concurrent_internal";
    }
    return "unknown";
}

bool is_process_event(std::int32_t event_id) noexcept { return event_id == 4688 || event_id == 4689; }

void ProvGraph::check(NodeId v) const {
    if (!contains(v)) throw LookupError("unknown node id " + std::to_string(v.index));
}

NodeId ProvGraph::add_node(LogRecord rec) {
    const NodeId id{static_cast<std::uint32_t>(records_.size())};
    records_.push_back(std::move(rec));
    adjacency_.emplace_back();
    return id;
}

void ProvGraph::connect(NodeId src, NodeId dst, EdgeKind kind) {
    check(src);
    check(dst);
    if (src == dst) throw ConfigError("self-loop on node " + std::to_string(src.index));
    edges_.push_back({src, dst, kind});
    adjacency_[src.index].push_back({dst, kind, false});
    adjacency_[dst.index].push_back({src, kind, kind == EdgeKind::Causal});
}

NodeId ProvGraph::add_log(LogRecord rec) {
    const std::string user = rec.user_id;
    const std::int64_t ts = rec.timestamp;
    const std::int32_t event_id = rec.event_id;
    const std::string parent = rec.parent_process_name;
    const std::string process = rec.process_name;
    const std::string base = rec.base_file_name;

    const NodeId id = add_node(std::move(rec));

    auto [it, inserted] = users_.try_emplace(user);
    UserState& state = it->second;
    if (inserted) {
        state.chain_node = id;
        state.chain_timestamp = ts;
    } else if (ts != state.chain_timestamp) {
        // next distinct timestamp extends the main chain
        connect(state.chain_node, id, EdgeKind::Sequential);
        state.chain_node = id;
        state.chain_timestamp = ts;
        state.concurrent.clear();
    } else {
        // same timestamp: hang off the chain node, link to earlier peers
        connect(state.chain_node, id, EdgeKind::ConcurrentAttach);
        for (NodeId peer : state.concurrent) connect(peer, id, EdgeKind::ConcurrentInternal);
        state.concurrent.push_back(id);
    }

    // parent process link
    if (!parent.empty()) {
        std::optional<NodeId> source;
        if (auto p = state.spawn_by_process.find(parent); p != state.spawn_by_process.end()) {
            source = p->second;
        } else if (auto b = state.spawn_by_base.find(parent); b != state.spawn_by_base.end()) {
            source = b->second;
        }
        if (source && *source != id) connect(*source, id, EdgeKind::Causal);
    }
    if (is_process_event(event_id)) {
        state.spawn_by_process[process] = id;
        if (!base.empty()) state.spawn_by_base[base] = id;
    }
    return id;
}

std::span<const Adjacent> ProvGraph::neighbors(NodeId v) const {
    check(v);
    return adjacency_[v.index];
}

const LogRecord& ProvGraph::record(NodeId v) const {
    check(v);
    return records_[v.index];
}

std::size_t ProvGraph::count_edges(EdgeKind kind) const noexcept {
    return static_cast<std::size_t>(
        std::count_if(edges_.begin(), edges_.end(), [kind](const Edge& e) { return e.kind == kind; }));
}

std::optional<NodeId> ProvGraph::chain_tail(const std::string& user) const {
    auto it = users_.find(user);
    if (it == users_.end()) return std::nullopt;
    return it->second.chain_node;
}

void ProvGraph::write_edge_list(std::ostream& out) const {
    for (const auto& e : edges_) out << e.src.index << ' ' << e.dst.index << ' ' << to_string(e.kind) << '\n';
}

namespace {

void write_csv_field(std::ostream& out, const std::string& value) {
    if (value.find_first_of(",\"\n") == std::string::npos) {
        out << value;
        return;
    }
    out << '"';
    for (char c : value) {
        if (c == '"') out << '"';
        out << c;
    }
    out << '"';
}

} // namespace

void ProvGraph::write_node_table(std::ostream& out) const {
    out << "node_id,user_id,timestamp,event_id,process_name,base_file_name,logon_type,parent_process_name,source_line\n";
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const auto& r = records_[i];
        out << i << ',';
        write_csv_field(out, r.user_id);
        out << ',' << r.timestamp << ',' << r.event_id << ',';
        write_csv_field(out, r.process_name);
        out << ',';
        write_csv_field(out, r.base_file_name);
        out << ',';
        write_csv_field(out, r.logon_type);
        out << ',';
        write_csv_field(out, r.parent_process_name);
        out << ',' << r.source_line << '\n';
    }
}

BuiltGraph build_graph(std::span<const LogRecord> records) {
    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return records[a].timestamp < records[b].timestamp; });

    BuiltGraph built;
    built.record_of_node.reserve(records.size());
    built.node_of_record.resize(records.size());
    for (std::size_t idx : order) {
        const NodeId id = built.graph.add_log(records[idx]);
        built.record_of_node.push_back(idx);
        built.node_of_record[idx] = id;
    }
    return built;
}

} // namespace provscope::graph
