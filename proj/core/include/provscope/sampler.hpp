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

#include <cstdint>
#include <optional>
#include <vector>

#include "provscope/provgraph.hpp"

namespace provscope::sampler {

using graph::NodeId;
using graph::ProvGraph;

struct RwrConfig {
    std::uint32_t walk_length = 40;  // K
    std::uint32_t hop_limit = 3;     // n
    double restart_probability = 0.15;
    std::uint64_t seed = 42;

    // Throws ConfigError.
    void validate() const;
};

struct NeighborSample {
    NodeId target;
    std::vector<NodeId> samples;  // exactly walk_length entries, repetition allowed
    bool degenerate = false;      // target had no neighbors; samples are copies of it
};

// Random walk with restart from v. The walker moves to a uniformly random
// adjacency entry of its current node. Before each move it returns to v when
// it is already n steps deep, or with probability restart_probability. Every
// visited node other than v is appended until K samples exist.
//
// Each target draws from its own SplitMix64 stream seeded with
// derive_seed(cfg.seed, v.index), so results do not depend on the order in
// which targets are sampled.
NeighborSample sample(const ProvGraph& g, NodeId v, const RwrConfig& cfg);

// Allocation-free variant reusing out.samples.
void sample_into(const ProvGraph& g, NodeId v, const RwrConfig& cfg, NeighborSample& out);

// Sampling without random walks: the direct neighbors of v in adjacency
// order, repeated cyclically to fill `length` slots.
NeighborSample direct_window(const ProvGraph& g, NodeId v, std::uint32_t length);
void direct_window_into(const ProvGraph& g, NodeId v, std::uint32_t length, NeighborSample& out);

// Exact BFS distance on the undirected view; nullopt when unreachable.
std::optional<std::uint32_t> hop_distance(const ProvGraph& g, NodeId u, NodeId v);

// BFS ball: every node within `radius` hops of v, excluding v.
std::vector<NodeId> hop_ball(const ProvGraph& g, NodeId v, std::uint32_t radius);

} // namespace provscope::sampler
