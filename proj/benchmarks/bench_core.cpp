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
#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "provscope/fda.hpp"
#include "provscope/gnn_embed.hpp"
#include "provscope/pipeline.hpp"
#include "provscope/sampler.hpp"
#include "provscope/synthgen.hpp"

using namespace provscope;

namespace {

std::vector<double> random_column(std::size_t n, std::uint64_t seed = 1) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d;
    std::vector<double> x(n);
    for (auto& v : x) v = d(rng);
    return x;
}

const graph::BuiltGraph& bench_graph() {
    static const auto built = graph::build_graph(
        synth::gen_benign(synth::BehaviorProfile::default_benign(), 4, 2500, 11));
    return built;
}

} // namespace

static void BM_DftColumn(benchmark::State& state) {
    const auto x = random_column(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(fda::dft_column(x));
}
BENCHMARK(BM_DftColumn)->Arg(16)->Arg(40)->Arg(128);

static void BM_FdaExtract(benchmark::State& state) {
    const auto window = static_cast<std::size_t>(state.range(0));
    fda::FdaConfig cfg;
    cfg.window = static_cast<std::uint32_t>(window);
    const fda::FeatureExtractor ex(cfg, 5);
    fda::SampleMatrix m;
    m.resize(window, 5);
    const auto x = random_column(window * 5);
    for (std::size_t r = 0; r < window; ++r)
        for (std::size_t c = 0; c < 5; ++c) m.at(r, c) = x[r * 5 + c];
    std::vector<double> out(ex.output_length());
    for (auto _ : state) {
        ex.extract(m, out);
        benchmark::DoNotOptimize(out.data());
    }
}
BENCHMARK(BM_FdaExtract)->Arg(40);

static void BM_GnnAggregate(benchmark::State& state) {
    gnn::GnnConfig cfg;
    const gnn::BiRnnWeights w = gnn::BiRnnWeights::seeded(200, cfg);
    const gnn::Aggregator agg(w);
    std::vector<float> projected(40 * agg.projected_size());
    std::vector<const float*> rows(40);
    for (std::size_t k = 0; k < 40; ++k) {
        agg.project_input(random_column(200, k), {projected.data() + k * agg.projected_size(), agg.projected_size()});
        rows[k] = projected.data() + k * agg.projected_size();
    }
    gnn::Aggregator::Workspace ws;
    std::vector<double> out(cfg.output_dim);
    for (auto _ : state) {
        agg.aggregate_projected(rows, out, ws);
        benchmark::DoNotOptimize(out.data());
    }
}
BENCHMARK(BM_GnnAggregate);

static void BM_RwrSample(benchmark::State& state) {
    const auto& g = bench_graph().graph;
    sampler::RwrConfig cfg;
    sampler::NeighborSample s;
    std::uint32_t v = 0;
    for (auto _ : state) {
        sampler::sample_into(g, graph::NodeId{v}, cfg, s);
        benchmark::DoNotOptimize(s.samples.data());
        v = (v + 1) % static_cast<std::uint32_t>(g.node_count());
    }
}
BENCHMARK(BM_RwrSample);

static void BM_FdaFeaturize(benchmark::State& state) {
    const auto recs = synth::gen_benign(synth::BehaviorProfile::default_benign(), 4, 2500, 11);
    const auto corpus = pipeline::prepare(recs);
    const auto tfidf = pipeline::fit_tfidf(corpus);
    const pipeline::PipelineConfig cfg;
    const pipeline::FeatureEngine engine(cfg, corpus, tfidf, {});
    auto worker = engine.worker();
    std::vector<double> out(engine.dim());
    std::uint32_t v = 0;
    for (auto _ : state) {
        worker.featurize(graph::NodeId{v}, out);
        benchmark::DoNotOptimize(out.data());
        v = (v + 1) % static_cast<std::uint32_t>(corpus.node_count());
    }
}
BENCHMARK(BM_FdaFeaturize);
BENCHMARK_MAIN();
