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
#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <set>
#include <sstream>
#include <thread>
#include <vector>

#include "../support/oracles.hpp"
#include "provscope/bounded_queue.hpp"
#include "provscope/error.hpp"
#include "provscope/gnn_embed.hpp"
#include "provscope/model_file.hpp"
#include "provscope/pipeline.hpp"
#include "provscope/synthgen.hpp"

#include "json.hpp"

using namespace provscope;
using namespace provscope::pipeline;

namespace {

const synth::ReferenceSplit& small_split() {
    static const auto split = synth::reference_split(42, 3, 400, 0.1);
    return split;
}

PipelineConfig gnn_config() {
    PipelineConfig c;
    c.path = FeaturePath::Gnn;
    c.gnn.hidden = {8, 4};
    c.gnn.output_dim = 12;
    c.skipgram.dim = 16;
    c.word_dim = 16;
    c.skipgram.epochs = 1;
    c.embed_walks = 300;
    return c;
}

} // namespace

TEST(BoundedQueue, FifoCloseAndDrain) {
    BoundedQueue<int> q(4);
    EXPECT_TRUE(q.push(1));
    EXPECT_TRUE(q.push(2));
    q.close();
    EXPECT_FALSE(q.push(3));
    EXPECT_EQ(q.pop(), 1);
    EXPECT_EQ(q.pop(), 2);
    EXPECT_EQ(q.pop(), std::nullopt);
    EXPECT_EQ(BoundedQueue<int>(0).capacity(), 1u);
}

TEST(BoundedQueue, BackpressureNeverExceedsCapacity) {
    BoundedQueue<int> q(3);
    std::atomic<int> produced{0};
    std::vector<std::thread> producers;
    for (int p = 0; p < 4; ++p) {
        producers.emplace_back([&, p] {
            for (int i = 0; i < 500; ++i) {
                q.push(p * 1000 + i);
                ++produced;
            }
        });
    }
    std::multiset<int> seen;
    std::thread consumer([&] {
        for (int i = 0; i < 2000; ++i) {
            if (i % 100 == 0) std::this_thread::sleep_for(std::chrono::microseconds(200));
            seen.insert(*q.pop());
        }
    });
    for (auto& t : producers) t.join();
    consumer.join();
    EXPECT_EQ(produced.load(), 2000);
    EXPECT_EQ(seen.size(), 2000u);
    EXPECT_LE(q.high_water(), 3u);
    EXPECT_EQ(q.high_water(), 3u);
}

TEST(BoundedQueue, CloseWakesBlockedProducer) {
    BoundedQueue<int> q(1);
    q.push(0);
    std::atomic<bool> result{true};
    std::thread t([&] { result = q.push(1); });
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    q.close();
    t.join();
    EXPECT_FALSE(result.load());
}

TEST(Prepare, InternsContents) {
    const auto& recs = small_split().train.records;
    const auto c = prepare(recs);
    EXPECT_EQ(c.node_count(), recs.size());
    EXPECT_LT(c.contents.size(), recs.size());
    std::set<std::string> keys(c.keys.begin(), c.keys.end());
    EXPECT_EQ(keys.size(), c.keys.size());
    for (std::uint32_t v = 0; v < c.node_count(); ++v) {
        EXPECT_EQ(encoder::tokenize(c.graph().record(graph::NodeId{v})), c.contents[c.content_of_node[v]]);
    }
}

TEST(FeatureEngine, FdaMatchesStagedOracle) {
    const auto& recs = small_split().train.records;
    PipelineConfig cfg;
    const auto corpus = prepare(recs);
    const auto tfidf = fit_tfidf(corpus);
    const FeatureEngine engine(cfg, corpus, tfidf, {});
    auto worker = engine.worker();
    std::vector<double> got(engine.dim());
    for (std::uint32_t v : {0u, 17u, 333u}) {
        worker.featurize(graph::NodeId{v}, got);
        const auto s = sampler::sample(corpus.graph(), graph::NodeId{v}, cfg.rwr);
        EXPECT_EQ(worker.last_sample().samples, s.samples);
        std::vector<std::vector<double>> cols(encoder::kTokenCount);
        for (auto n : s.samples) {
            const auto sc = encoder::field_scalars(encoder::tokenize(corpus.graph().record(n)), tfidf, cfg.word_dim,
                                                   cfg.encoder_seed);
            for (std::size_t f = 0; f < sc.size(); ++f) cols[f].push_back(sc[f]);
        }
        const auto want = oracle::naive_fda(cols, cfg.fda.log_constant);
        ASSERT_EQ(got.size(), want.size());
        for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-9);
    }
}

TEST(FeatureEngine, GnnMatchesStagedOracle) {
    const auto& recs = small_split().train.records;
    const auto cfg = gnn_config();
    const auto corpus = prepare(recs);
    const auto tfidf = fit_tfidf(corpus);
    const auto network = train_network(corpus, cfg);
    const double gain = content_gain(corpus, tfidf, cfg);
    const FeatureEngine engine(cfg, corpus, tfidf, network, gain);
    const auto weights = gnn::BiRnnWeights::seeded(cfg.skipgram.dim + cfg.word_dim, cfg.gnn);
    auto worker = engine.worker();
    std::vector<double> got(engine.dim());
    for (std::uint32_t v : {1u, 250u}) {
        worker.featurize(graph::NodeId{v}, got);
        std::vector<std::vector<double>> rows;
        for (auto n : sampler::sample(corpus.graph(), graph::NodeId{v}, cfg.rwr).samples) {
            const auto tv = encoder::tokenize(corpus.graph().record(n));
            const auto it = network.find(tv.key());
            const auto net = it != network.end() ? it->second : std::vector<double>(cfg.skipgram.dim, 0.0);
            const auto content = encoder::content_embed(tv, tfidf, cfg.word_dim, cfg.encoder_seed);
            rows.push_back(gnn_input(net, content, gain));
        }
        const auto want = gnn::aggregate(rows, weights);
        for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-5);
    }
}

TEST(FeatureEngine, IdenticalNeighborhoodsGiveIdenticalFeatures) {
    std::vector<LogRecord> recs;
    for (const char* u : {"a", "b"}) {
        for (int t = 1; t <= 5; ++t) {
            LogRecord r;
            r.user_id = u;
            r.timestamp = t;
            r.event_id = 4624;
            r.process_name = "lsass.exe";
            recs.push_back(r);
        }
    }
    const auto corpus = prepare(recs);
    const auto tfidf = fit_tfidf(corpus);
    for (auto path : {FeaturePath::Fda, FeaturePath::Gnn}) {
        auto cfg = gnn_config();
        cfg.path = path;
        const auto net = path == FeaturePath::Gnn ? train_network(corpus, cfg) : NetworkTable{};
        const FeatureEngine engine(cfg, corpus, tfidf, net);
        const auto f = engine.extract_all();
        const auto a = corpus.built.node_of_record[2];
        const auto b = corpus.built.node_of_record[7];
        EXPECT_EQ(std::vector<double>(f.row(a.index).begin(), f.row(a.index).end()).size(), engine.dim());
        for (std::size_t i = 0; i < engine.dim(); ++i) EXPECT_EQ(f.row(a.index)[i], f.row(b.index)[i]) << i;
    }
}

TEST(FeatureEngine, WorkerCountDoesNotChangeFeatures) {
    const auto& recs = small_split().test.records;
    const auto corpus = prepare(recs);
    const auto tfidf = fit_tfidf(corpus);
    PipelineConfig one;
    one.chunk_size = 7;
    auto four = one;
    four.workers = 4;
    four.queue_capacity = 2;
    const auto a = FeatureEngine(one, corpus, tfidf, {}).extract_all();
    const auto b = FeatureEngine(four, corpus, tfidf, {}).extract_all();
    ASSERT_EQ(a.rows(), b.rows());
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t i = 0; i < a.dim(); ++i) ASSERT_EQ(a.row(r)[i], b.row(r)[i]);
}

TEST(TrainDetect, DeterministicModelBytes) {
    const auto& recs = small_split().train.records;
    for (auto cfg : {PipelineConfig{}, gnn_config()}) {
        const auto first = train(recs, cfg);
        EXPECT_EQ(model::serialize(first), model::serialize(train(recs, cfg)));
        cfg.workers = 3;
        const auto threaded = train(recs, cfg);
        EXPECT_EQ(threaded.clusters, first.clusters);
        EXPECT_EQ(threaded.network, first.network);
        EXPECT_EQ(threaded.content_gain, first.content_gain);
    }
}

TEST(TrainDetect, TrainingCorpusMeanScoreEqualsLoss) {
    const auto& recs = small_split().train.records;
    for (const auto& cfg : {PipelineConfig{}, gnn_config()}) {
        const auto m = train(recs, cfg);
        EXPECT_GE(m.clusters.cluster_count(), 1u);
        EXPECT_GE(m.clusters.loss_train, 0.0);
        const auto out = detect(recs, m, cfg);
        ASSERT_EQ(out.verdicts.size(), recs.size());
        double total = 0.0;
        for (std::size_t i = 0; i < out.verdicts.size(); ++i) {
            EXPECT_EQ(out.verdicts[i].record_index, i);
            total += out.verdicts[i].result.score;
        }
        EXPECT_NEAR(total / static_cast<double>(recs.size()), m.clusters.loss_train,
                    1e-9 * std::max(1.0, m.clusters.loss_train));
        if (cfg.path == FeaturePath::Fda) EXPECT_EQ(out.unseen_contents, 0u);
    }
}

TEST(TrainDetect, HigherDeltaNeverFewerClusters) {
    const auto& recs = small_split().train.records;
    PipelineConfig lo;
    auto hi = lo;
    hi.delta = 0.99;
    EXPECT_GE(train(recs, hi).clusters.cluster_count(), train(recs, lo).clusters.cluster_count());
}

TEST(TrainDetect, IncompatibleConfigRejected) {
    const auto& recs = small_split().train.records;
    const auto m = train(recs, PipelineConfig{});
    EXPECT_THROW(detect(recs, m, gnn_config()), ValidationError);
    EXPECT_THROW(train({}, PipelineConfig{}), ConfigError);
}

TEST(Verdicts, SchemaAndOrder) {
    std::vector<Verdict> v(2);
    v[0] = {0, 3, {1.5, 0, true}};
    v[1] = {1, 4, {0.25, 1, false}};
    std::ostringstream out;
    write_verdicts(out, v);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, R"({"is_anomaly":true,"line":3,"record_index":0,"score":1.5,"v":1})");
    std::getline(in, line);
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j.at("score").get<double>(), 0.25);
    EXPECT_FALSE(j.at("is_anomaly").get<bool>());
}

TEST(FeatureCsv, HeaderAndRows) {
    detector::FeatureMatrix m(2, 3);
    m.row(1)[2] = 0.5;
    std::ostringstream out;
    write_feature_csv(out, m);
    const auto text = out.str();
    EXPECT_EQ(text.substr(0, text.find('\n')), "node_id,f_0,f_1,f_2");
    EXPECT_NE(text.find("\n1,0,0,0.5\n"), std::string::npos);
}

TEST(Ablation, SevenVariants) {
    const auto v = ablation_variants();
    ASSERT_EQ(v.size(), 7u);
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(v[i].id, static_cast<int>(i + 1));
    EXPECT_EQ(v[0].name(), "RWR+GNN+statistical");
    EXPECT_EQ(v[6].name(), "FDA+k-means");
    std::size_t rwr = 0;
    for (const auto& x : v) rwr += x.sampling == Sampling::Rwr;
    EXPECT_EQ(rwr, 3u);
}

TEST(Experiment, RunsVariantsOnSmallSplit) {
    const auto& split = small_split();
    LabeledSet test;
    test.records = split.test.records;
    test.labels = split.test.labels;
    test.record_bytes.assign(test.records.size(), 100);
    Experiment ex(gnn_config(), split.train.records, test);
    TimingOptions t;
    t.runs = 2;
    t.min_seconds = 0.0;
    t.max_nodes = 50;
    for (const auto& v : ablation_variants()) {
        const auto r = ex.run(v, t);
        ASSERT_TRUE(r.metrics);
        ASSERT_TRUE(r.metrics->auc);
        EXPECT_TRUE(std::isfinite(*r.metrics->auc));
        EXPECT_GT(r.timing.mean_latency_us, 0.0);
        EXPECT_GT(r.timing.records_per_s, 0.0);
        EXPECT_GT(r.timing.bytes_per_s, 0.0);
        EXPECT_EQ(r.timing.runs, 2u);
        EXPECT_GE(r.timing.p95_latency_us, 0.0);
        EXPECT_GE(r.clusters, 1u);
    }
}

TEST(LabeledSetFromIngest, MapsLabels) {
    std::stringstream buf;
    synth::write_jsonl(buf, small_split().test);
    auto result = ingest::ingest_stream(buf, {});
    std::vector<std::uint8_t> want;
    for (auto l : result.labels) want.push_back(l == ingest::Label::Malicious ? 1 : 0);
    const auto bytes = result.record_bytes;
    const auto set = labeled_set(std::move(result));
    EXPECT_EQ(set.labels, want);
    EXPECT_EQ(set.record_bytes, bytes);
    EXPECT_GT(std::count(want.begin(), want.end(), 1), 0);
}

TEST(GnnInput, BlocksAndGain) {
    const std::vector<double> net{3.0, 4.0}, zero{0.0, 0.0}, content{0.1, -0.2};
    const auto x = gnn_input(net, content, 10.0);
    ASSERT_EQ(x.size(), 4u);
    // unit RMS network block
    EXPECT_NEAR(x[0] * x[0] + x[1] * x[1], 2.0, 1e-12);
    EXPECT_NEAR(x[2], 1.0, 1e-12);
    EXPECT_NEAR(x[3], -2.0, 1e-12);
    const auto z = gnn_input(zero, content, 1.0);
    EXPECT_EQ(z[0], 0.0);
    EXPECT_EQ(z[1], 0.0);
}
