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
// Acceptance harness: one PASS/FAIL line per criterion, exit 7 on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../support/oracles.hpp"
#include "provscope/detector.hpp"
#include "provscope/error.hpp"
#include "provscope/fda.hpp"
#include "provscope/model_file.hpp"
#include "provscope/pipeline.hpp"
#include "provscope/provgraph.hpp"
#include "provscope/sampler.hpp"
#include "provscope/synthgen.hpp"

using namespace provscope;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (ok) return;
        if (pass) detail = what;
        pass = false;
    }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a) {
    char buf[96];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// 1 -------------------------------------------------------------------------
Outcome dft_oracle() {
    Outcome o;
    const auto t0 = Clock::now();
    std::mt19937_64 rng(20260101);
    std::uniform_int_distribution<std::size_t> len(2, 64);
    std::uniform_real_distribution<double> val(-10.0, 10.0);
    double worst = 0.0;
    for (int trial = 0; trial < 1000 && o.pass; ++trial) {
        std::vector<double> x(len(rng));
        for (auto& v : x) v = val(rng);
        const auto got = fda::dft_column(x);
        const auto want = oracle::naive_dft(x);
        o.require(got.size() == x.size(), "dft length mismatch");
        if (!o.pass) break;
        double scale = 0.0;
        for (const auto& w : want) scale = std::max(scale, std::abs(w));
        const std::size_t n = x.size();
        double energy_t = 0.0, energy_f = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double rel = std::abs(got[k] - want[k]) / std::max(scale, 1e-300);
            worst = std::max(worst, rel);
            o.require(rel <= 1e-9, "oracle mismatch at n=" + std::to_string(n));
            o.require(std::abs(got[k] - std::conj(got[(n - k) % n])) <= 1e-9 * std::max(scale, 1.0),
                      "conjugate symmetry broken at n=" + std::to_string(n));
            energy_t += x[k] * x[k];
            energy_f += std::norm(got[k]);
        }
        o.require(std::abs(energy_f / static_cast<double>(n) - energy_t) <= 1e-9 * std::max(energy_t, 1.0),
                  "Parseval violated at n=" + std::to_string(n));
    }
    const double secs = seconds_since(t0);
    o.require(secs < 10.0, "runtime " + fmt("%.2f s", secs));
    if (o.pass) o.detail = "1000 vectors, max rel err " + fmt("%.2e", worst) + ", " + fmt("%.2f s", secs);
    return o;
}

// 2 -------------------------------------------------------------------------
Outcome feature_shape() {
    Outcome o;
    constexpr std::size_t fields = 5;
    std::mt19937_64 rng(7);
    std::normal_distribution<double> val;
    for (std::size_t n = 2; n <= 256 && o.pass; ++n) {
        fda::FdaConfig cfg;
        cfg.window = static_cast<std::uint32_t>(n);
        fda::SampleMatrix m;
        m.resize(n, fields);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < fields; ++c) m.at(r, c) = val(rng);
        const auto f = fda::to_feature(m, cfg);
        o.require(f.size() == fields * (n / 2 + 1), "length " + std::to_string(f.size()) + " at window " +
                                                        std::to_string(n));
        o.require(fda::feature_length(fields, n) == f.size(), "feature_length disagrees at " + std::to_string(n));
    }
    o.require(fda::feature_length(fields, 40) == 105, "window 40 does not give 105");
    if (o.pass) o.detail = "window 40 -> 105; law holds for windows 2..256";
    return o;
}

// 3 -------------------------------------------------------------------------
Outcome graph_rules() {
    Outcome o;
    auto profile = synth::BehaviorProfile::default_benign();
    profile.concurrency = 0.2;  // enough same-timestamp groups to exercise the rules
    const auto recs = synth::gen_benign(profile, 10, 1000, 42);
    o.require(recs.size() == 10000, "expected 10000 records");
    const auto built = graph::build_graph(recs);
    const auto& g = built.graph;
    std::vector<ingest::LogRecord> ordered;
    for (auto idx : built.record_of_node) ordered.push_back(recs[idx]);

    oracle::ExpectedEdges got;
    for (const auto& e : g.edges()) {
        const std::pair<std::uint32_t, std::uint32_t> p{e.src.index, e.dst.index};
        switch (e.kind) {
        case graph::EdgeKind::Sequential: got.sequential.insert(p); break;
        case graph::EdgeKind::ConcurrentAttach: got.attach.insert(p); break;
        case graph::EdgeKind::ConcurrentInternal:
            got.internal.insert({std::min(p.first, p.second), std::max(p.first, p.second)});
            break;
        case graph::EdgeKind::Causal: got.causal.insert(p); break;
        }
    }
    const auto want = oracle::evaluate_rules(ordered);
    o.require(got.sequential == want.sequential, "sequential edges differ from the rule evaluator");
    o.require(got.attach == want.attach, "attach edges differ from the rule evaluator");
    o.require(got.internal == want.internal, "internal edges differ from the rule evaluator");
    o.require(got.causal == want.causal, "causal edges differ from the rule evaluator");

    // Sequential subgraph: per user a simple path in strictly increasing time.
    std::map<std::string, std::vector<std::uint32_t>> chain_nodes;
    std::map<std::uint32_t, int> in_deg, out_deg;
    for (const auto& [s, d] : got.sequential) {
        o.require(ordered[s].user_id == ordered[d].user_id, "sequential edge crosses users");
        o.require(ordered[s].timestamp < ordered[d].timestamp, "sequential edge not time ordered");
        ++out_deg[s];
        ++in_deg[d];
    }
    for (const auto& [n, d] : in_deg) o.require(d == 1, "sequential in-degree > 1");
    for (const auto& [n, d] : out_deg) o.require(d == 1, "sequential out-degree > 1");
    std::map<std::string, std::size_t> starts, distinct_ts;
    {
        std::map<std::string, std::set<std::int64_t>> ts;
        for (const auto& r : ordered) ts[r.user_id].insert(r.timestamp);
        for (const auto& [u, s] : ts) distinct_ts[u] = s.size();
    }
    std::map<std::string, std::size_t> seq_edges;
    for (const auto& [s, d] : got.sequential) ++seq_edges[ordered[s].user_id];
    for (const auto& [u, n] : distinct_ts)
        o.require(seq_edges[u] + 1 == n, "user " + u + " chain does not span every timestamp");

    // Concurrent groups: the non-chain logs of one (user, timestamp).
    std::map<std::pair<std::string, std::int64_t>, std::vector<std::uint32_t>> groups;
    for (std::uint32_t i = 0; i < ordered.size(); ++i) groups[{ordered[i].user_id, ordered[i].timestamp}].push_back(i);
    std::size_t checked = 0;
    for (const auto& [key, members] : groups) {
        const std::size_t gsz = members.size() - 1;
        if (gsz == 0) continue;
        ++checked;
        const std::set<std::uint32_t> rest(members.begin() + 1, members.end());
        std::size_t attach = 0, internal = 0;
        for (const auto& [s, d] : got.attach) attach += s == members.front() && rest.count(d);
        for (const auto& [a, b] : got.internal) internal += rest.count(a) && rest.count(b);
        o.require(attach == gsz, "group attach count " + std::to_string(attach) + " != " + std::to_string(gsz));
        o.require(internal == gsz * (gsz - 1) / 2, "group internal count wrong");
    }
    o.require(checked > 0, "no concurrent groups generated");

    for (const auto& [p, c] : got.causal) {
        const auto& parent = ordered[p];
        const auto& child = ordered[c];
        o.require(parent.user_id == child.user_id, "causal edge crosses users");
        o.require(graph::is_process_event(parent.event_id), "causal parent is not a process event");
        o.require(!child.parent_process_name.empty() && (parent.process_name == child.parent_process_name ||
                                                         parent.base_file_name == child.parent_process_name),
                  "causal edge violates the parent/child field predicate");
    }
    o.require(!got.causal.empty(), "no causal edges generated");
    if (o.pass) {
        std::ostringstream s;
        s << ordered.size() << " records: " << got.sequential.size() << " sequential, " << checked
          << " concurrent groups, " << got.causal.size() << " causal edges match the rule evaluator";
        o.detail = s.str();
    }
    return o;
}

// 4 -------------------------------------------------------------------------
Outcome rwr_containment() {
    Outcome o;
    auto profile = synth::BehaviorProfile::default_benign();
    profile.concurrency = 0.1;
    const auto recs = synth::gen_benign(profile, 5, 1000, 3);
    const auto built = graph::build_graph(recs);
    const auto& g = built.graph;
    const std::size_t n = g.node_count();
    oracle::AdjList adj(n);
    for (const auto& e : g.edges()) {
        adj[e.src.index].push_back(e.dst.index);
        adj[e.dst.index].push_back(e.src.index);
    }
    sampler::RwrConfig cfg;
    std::size_t samples = 0;
    for (std::uint32_t v = 0; v < n && o.pass; ++v) {
        const auto s = sampler::sample(g, graph::NodeId{v}, cfg);
        o.require(s.samples.size() == cfg.walk_length, "sample length != K");
        const auto dist = oracle::bfs_distances(adj, v);
        for (auto u : s.samples) {
            const bool self_only = s.degenerate && u.index == v;
            o.require(self_only || (dist[u.index] >= 1 && dist[u.index] <= static_cast<int>(cfg.hop_limit)),
                      "node outside hop limit from target " + std::to_string(v));
        }
        samples += s.samples.size();
        const auto again = sampler::sample(built.graph, graph::NodeId{v}, cfg);
        o.require(again.samples == s.samples, "resampling is not bit-identical");
    }
    // Same seed on an independently rebuilt graph.
    const auto rebuilt = graph::build_graph(recs);
    for (std::uint32_t v = 0; v < n; v += 97) {
        o.require(sampler::sample(rebuilt.graph, graph::NodeId{v}, cfg).samples ==
                      sampler::sample(g, graph::NodeId{v}, cfg).samples,
                  "rebuilt graph samples differ");
    }
    if (o.pass) o.detail = std::to_string(n) + " targets, " + std::to_string(samples) + " samples within n=3";
    return o;
}

// 5 -------------------------------------------------------------------------
Outcome clustering_laws(const std::vector<ingest::LogRecord>& train) {
    Outcome o;
    pipeline::PipelineConfig cfg;
    const auto corpus = pipeline::prepare(train);
    const auto tfidf = pipeline::fit_tfidf(corpus);
    const auto features = pipeline::FeatureEngine(cfg, corpus, tfidf, {}).extract_all();

    const auto model = pipeline::cluster(features, cfg);
    double total = 0.0;
    for (std::size_t r = 0; r < features.rows(); ++r) total += detector::score(model, features.row(r)).score;
    const double mean = total / static_cast<double>(features.rows());
    o.require(std::abs(mean - model.loss_train) <= 1e-9 * std::max(1.0, model.loss_train),
              "mean training score " + fmt("%.12g", mean) + " != loss_train " + fmt("%.12g", model.loss_train));

    std::size_t prev = 0;
    std::string counts;
    for (double delta : {0.5, 0.72, 0.8, 0.9, 0.95, 0.99}) {
        const auto n = detector::train(features, delta, cfg.tau).cluster_count();
        o.require(n >= prev, "cluster count drops at delta " + fmt("%.2f", delta));
        counts += (counts.empty() ? "" : "/") + std::to_string(n);
        prev = n;
    }

    detector::FeatureMatrix scaled(features.rows(), features.dim());
    for (std::size_t r = 0; r < features.rows(); ++r)
        for (std::size_t i = 0; i < features.dim(); ++i) scaled.row(r)[i] = 4.0 * features.row(r)[i];
    const auto big = detector::train(scaled, cfg.delta, cfg.tau);
    o.require(big.member_counts == model.member_counts, "membership changes under positive scaling");
    for (std::size_t r = 0; r < features.rows() && o.pass; r += 7) {
        o.require(detector::score(big, scaled.row(r)).assigned_cluster ==
                      detector::score(model, features.row(r)).assigned_cluster,
                  "assignment changes under positive scaling");
    }

    const auto m = pipeline::train(train, cfg);
    const auto bytes = model::serialize(m);
    const auto back = model::deserialize(bytes);
    o.require(back.clusters == m.clusters, "clusters differ after load");
    o.require(model::serialize(back) == bytes, "save/load is not bit-exact");

    if (o.pass) {
        o.detail = "loss " + fmt("%.6g", model.loss_train) + ", clusters over delta " + counts +
                   ", scaling keeps membership, model round trip bit-exact";
    }
    return o;
}

// 6-8 share one experiment on the reference split -------------------------
pipeline::LabeledSet through_ingest(const synth::LabeledCorpus& c) {
    std::stringstream buf;
    synth::write_jsonl(buf, c);
    return pipeline::labeled_set(ingest::ingest_stream(buf, {}));
}

double auc_of(const pipeline::VariantResult& r) {
    return r.metrics && r.metrics->auc ? *r.metrics->auc : std::numeric_limits<double>::quiet_NaN();
}

void print(int id, const Outcome& o) {
    std::printf("%s criterion %d: %s\n", o.pass ? "PASS" : "FAIL", id, o.detail.c_str());
    std::fflush(stdout);
}

} // namespace

int main() {
    bool all = true;
    const auto report = [&](int id, const std::function<Outcome()>& fn) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        all = all && o.pass;
        print(id, o);
    };

    report(1, dft_oracle);
    report(2, feature_shape);
    report(3, graph_rules);
    report(4, rwr_containment);

    const auto t_split = Clock::now();
    const auto split = synth::reference_split(42, 10, 5000, 0.05);
    const auto train_set = through_ingest(split.train);
    const auto test_set = through_ingest(split.test);
    const double split_seconds = seconds_since(t_split);

    report(5, [&] { return clustering_laws(train_set.records); });

    // 6: end-to-end detection, timed from experiment construction.
    pipeline::PipelineConfig base;
    std::unique_ptr<pipeline::Experiment> ex;
    std::map<int, pipeline::VariantResult> results;
    const pipeline::TimingOptions no_timing{0, 0.0, 0};
    const auto variants = pipeline::ablation_variants();
    report(6, [&] {
        Outcome o;
        const auto t0 = Clock::now();
        ex = std::make_unique<pipeline::Experiment>(base, train_set.records, test_set);
        for (int id : {4, 6, 1}) results[id] = ex->run(variants[id - 1], no_timing);
        const double secs = seconds_since(t0) + split_seconds;
        const double fda = auc_of(results[4]), gnn = auc_of(results[1]), off = auc_of(results[6]);
        o.require(fda >= 0.90, "FDA AUC " + fmt("%.4f", fda) + " < 0.90");
        o.require(gnn >= 0.90, "GNN AUC " + fmt("%.4f", gnn) + " < 0.90");
        o.require(fda - off >= 0.05, "RWR-on minus RWR-off FDA AUC " + fmt("%.4f", fda - off) + " < 0.05");
        o.require(secs < 300.0, "runtime " + fmt("%.1f s", secs) + " >= 300 s");
        if (o.pass) {
            o.detail = "FDA AUC " + fmt("%.4f", fda) + ", GNN AUC " + fmt("%.4f", gnn) + ", RWR-off FDA AUC " +
                       fmt("%.4f", off) + ", " + fmt("%.1f s", secs);
        }
        return o;
    });

    // 7: batch-size-1 timing of both paths on the same corpus.
    const pipeline::TimingOptions timing{3, 1.0, 2000};
    std::map<int, pipeline::Timing> timed;
    report(7, [&] {
        Outcome o;
        if (!ex) throw Error("experiment unavailable");
        for (int id : {4, 1}) timed[id] = ex->run(variants[id - 1], timing).timing;
        const auto& f = timed[4];
        const auto& g = timed[1];
        const double thr = f.records_per_s / g.records_per_s;
        const double lat = f.mean_latency_us / g.mean_latency_us;
        o.require(f.runs == 3 && g.runs == 3, "expected 3 warm runs");
        o.require(thr >= 5.0, "throughput ratio " + fmt("%.2f", thr) + " < 5");
        o.require(lat <= 0.2, "latency ratio " + fmt("%.3f", lat) + " > 0.2");
        o.require(f.cv < 0.10, "FDA run-to-run variation " + fmt("%.3f", f.cv));
        o.require(g.cv < 0.10, "GNN run-to-run variation " + fmt("%.3f", g.cv));
        if (o.pass) {
            o.detail = "throughput FDA/GNN " + fmt("%.1fx", thr) + ", latency " + fmt("%.1f us", f.mean_latency_us) +
                       " vs " + fmt("%.1f us", g.mean_latency_us) + ", cv " + fmt("%.3f", f.cv) + "/" +
                       fmt("%.3f", g.cv);
        }
        return o;
    });

    // 8: all seven variants; AUC ordering by sampling, time ordering by path.
    report(8, [&] {
        Outcome o;
        if (!ex) throw Error("experiment unavailable");
        std::vector<pipeline::VariantResult> rows;
        for (const auto& v : variants) rows.push_back(ex->run(v, timing));
        o.require(rows.size() == 7, "expected 7 variants");
        double min_rwr = 1.0, max_direct = 0.0;
        double max_fda_us = 0.0, min_gnn_us = std::numeric_limits<double>::infinity();
        std::string table;
        for (const auto& r : rows) {
            const double auc = auc_of(r);
            o.require(std::isfinite(auc), "variant " + std::to_string(r.variant.id) + " has no AUC");
            o.require(r.timing.mean_latency_us > 0.0, "variant " + std::to_string(r.variant.id) + " has no time");
            if (r.variant.sampling == pipeline::Sampling::Rwr) min_rwr = std::min(min_rwr, auc);
            else max_direct = std::max(max_direct, auc);
            if (r.variant.path == pipeline::FeaturePath::Fda) max_fda_us = std::max(max_fda_us, r.timing.mean_latency_us);
            else min_gnn_us = std::min(min_gnn_us, r.timing.mean_latency_us);
            table += (table.empty() ? "" : " ") + std::to_string(r.variant.id) + ":" + fmt("%.3f", auc);
        }
        o.require(min_rwr > max_direct,
                  "RWR AUC min " + fmt("%.4f", min_rwr) + " <= non-RWR AUC max " + fmt("%.4f", max_direct));
        o.require(max_fda_us < min_gnn_us,
                  "slowest FDA " + fmt("%.1f us", max_fda_us) + " >= fastest GNN " + fmt("%.1f us", min_gnn_us));
        if (o.pass) {
            o.detail = "AUC " + table + "; RWR min " + fmt("%.4f", min_rwr) + " > non-RWR max " +
                       fmt("%.4f", max_direct) + "; FDA max " + fmt("%.1f us", max_fda_us) + " < GNN min " +
                       fmt("%.1f us", min_gnn_us);
        }
        return o;
    });

    return all ? 0 : static_cast<int>(ExitCode::CriteriaFailed);
}
