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

#include "provscope/sampler.hpp"

#include <cmath>
#include <deque>
#include <unordered_map>

#include "provscope/error.hpp"
#include "provscope/rng.hpp"

namespace provscope::sampler {

void RwrConfig::validate() const {
    if (walk_length < 1) throw ConfigError("walk length must be >= 1");
    if (hop_limit < 1) throw ConfigError("hop limit must be >= 1");
    if (!(restart_probability >= 0.0 && restart_probability < 1.0)) {
        throw ConfigError("restart probability must lie in [0, 1)");
    }
}

void sample_into(const ProvGraph& g, NodeId v, const RwrConfig& cfg, NeighborSample& out) {
    const auto start = g.neighbors(v);
    out.target = v;
    out.samples.clear();
    out.samples.reserve(cfg.walk_length);

    if (start.empty()) {
        out.degenerate = true;
        out.samples.assign(cfg.walk_length, v);
        return;
    }
    out.degenerate = false;

    SplitMix64 rng(derive_seed(cfg.seed, v.index));
    NodeId current = v;
    std::uint32_t depth = 0;
    while (out.samples.size() < cfg.walk_length) {
        if (depth > 0 && (depth >= cfg.hop_limit || rng.uniform() < cfg.restart_probability)) {
            current = v;
            depth = 0;
        }
        const auto adj = g.neighbors(current);
        current = adj[rng.below(adj.size())].node;
        ++depth;
        if (current != v) out.samples.push_back(current);
    }
}

NeighborSample sample(const ProvGraph& g, NodeId v, const RwrConfig& cfg) {
    NeighborSample out;
    sample_into(g, v, cfg, out);
    return out;
}

void direct_window_into(const ProvGraph& g, NodeId v, std::uint32_t length, NeighborSample& out) {
    const auto adj = g.neighbors(v);
    out.target = v;
    out.samples.clear();
    out.samples.reserve(length);
    out.degenerate = adj.empty();
    if (adj.empty()) {
        out.samples.assign(length, v);
        return;
    }
    for (std::uint32_t i = 0; i < length; ++i) out.samples.push_back(adj[i % adj.size()].node);
}

NeighborSample direct_window(const ProvGraph& g, NodeId v, std::uint32_t length) {
    NeighborSample out;
    direct_window_into(g, v, length, out);
    return out;
}

std::optional<std::uint32_t> hop_distance(const ProvGraph& g, NodeId u, NodeId v) {
    g.neighbors(u);
    g.neighbors(v);
    if (u == v) return 0;

    std::unordered_map<std::uint32_t, std::uint32_t> dist;
    std::deque<NodeId> frontier{u};
    dist.emplace(u.index, 0);
    while (!frontier.empty()) {
        const NodeId cur = frontier.front();
        frontier.pop_front();
        const std::uint32_t d = dist[cur.index];
        for (const auto& a : g.neighbors(cur)) {
            if (dist.contains(a.node.index)) continue;
            if (a.node == v) return d + 1;
            dist.emplace(a.node.index, d + 1);
            frontier.push_back(a.node);
        }
    }
    return std::nullopt;
}

std::vector<NodeId> hop_ball(const ProvGraph& g, NodeId v, std::uint32_t radius) {
    std::unordered_map<std::uint32_t, std::uint32_t> dist{{v.index, 0}};
    std::deque<NodeId> frontier{v};
    std::vector<NodeId> ball;
    while (!frontier.empty()) {
        const NodeId cur = frontier.front();
        frontier.pop_front();
        const std::uint32_t d = dist[cur.index];
        if (d == radius) continue;
        for (const auto& a : g.neighbors(cur)) {
            if (dist.contains(a.node.index)) continue;
            dist.emplace(a.node.index, d + 1);
            ball.push_back(a.node);
            frontier.push_back(a.node);
        }
    }
    return ball;
}

} // namespace provscope::sampler
