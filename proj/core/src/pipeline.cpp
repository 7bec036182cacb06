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

#include "provscope/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iterator>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "json.hpp"
#include "provscope/bounded_queue.hpp"
#include "provscope/error.hpp"

namespace provscope::pipeline {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <typename T>
void read_key(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

void reject_unknown(const json& obj, std::initializer_list<std::string_view> known, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, _] : obj.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw ConfigError("unknown configuration key " + where + "." + key);
        }
    }
}

const json& section(const json& root, const char* name) {
    static const json empty = json::object();
    return root.contains(name) ? root.at(name) : empty;
}

void rescale_rms(std::span<const double> in, std::span<double> out) {
    double ss = 0.0;
    for (double x : in) ss += x * x;
    if (ss == 0.0) {
        std::fill(out.begin(), out.end(), 0.0);
        return;
    }
    const double k = std::sqrt(static_cast<double>(in.size()) / ss);
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] * k;
}

double mean_of(std::span<const double> v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev_of(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::vector<std::uint8_t> labels_by_node(const Corpus& c, std::span<const std::uint8_t> by_record) {
    if (by_record.empty()) return {};
    if (by_record.size() != c.node_count()) throw ConfigError("label count does not match the record count");
    std::vector<std::uint8_t> out(c.node_count());
    for (std::size_t n = 0; n < out.size(); ++n) out[n] = by_record[c.built.record_of_node[n]];
    return out;
}

} // namespace

std::string_view to_string(FeaturePath p) noexcept { return p == FeaturePath::Fda ? "fda" : "gnn"; }

std::string_view to_string(Sampling s) noexcept { return s == Sampling::Rwr ? "rwr" : "direct"; }

FeaturePath path_from_string(std::string_view name) {
    if (name == "fda") return FeaturePath::Fda;
    if (name == "gnn") return FeaturePath::Gnn;
    throw ConfigError("unknown feature path '" + std::string(name) + "' (expected fda or gnn)");
}

Sampling sampling_from_string(std::string_view name) {
    if (name == "rwr") return Sampling::Rwr;
    if (name == "direct") return Sampling::Direct;
    throw ConfigError("unknown sampling mode '" + std::string(name) + "' (expected rwr or direct)");
}

void PipelineConfig::validate() const {
    auto wrap = [](const char* what, auto&& fn) {
        try {
            fn();
        } catch (const ConfigError& e) {
            throw ValidationError(std::string(what) + ": " + e.what());
        }
    };
    wrap("sampling", [&] { rwr.validate(); });
    wrap("fda", [&] { fda.validate(); });
    wrap("encoder", [&] { skipgram.validate(); });
    wrap("gnn", [&] { gnn.validate(); });
    if (fda.window != rwr.walk_length) {
        throw ValidationError("fda.window (" + std::to_string(fda.window) + ") must equal sampling.walk_length (" +
                              std::to_string(rwr.walk_length) + ")");
    }
    if (word_dim == 0) throw ValidationError("encoder.word_dim must be >= 1");
    if (embed_walks == 0) throw ValidationError("encoder.walks must be >= 1");
    if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("detector.delta must lie in (0, 1)");
    if (!(tau > 0.0) || !std::isfinite(tau)) throw ValidationError("detector.tau must be > 0");
    if (kmeans_k == 0) throw ValidationError("detector.kmeans_k must be >= 1");
    if (workers == 0) throw ValidationError("runtime.workers must be >= 1");
    if (chunk_size == 0) throw ValidationError("runtime.chunk_size must be >= 1");
}

std::size_t PipelineConfig::feature_dim() const {
    return path == FeaturePath::Fda ? fda::feature_length(encoder::kTokenCount, fda.window) : gnn.output_dim;
}

void PipelineConfig::set_seed(std::uint64_t s) {
    rwr.seed = s;
    encoder_seed = s;
    skipgram.seed = s;
    gnn.seed = s;
    kmeans_seed = s;
}

std::string to_json(const PipelineConfig& c) {
    json j;
    j["path"] = std::string(to_string(c.path));
    j["ingest"] = {{"user_field", c.ingest.user_field},
                   {"denylist", std::vector<std::int32_t>(c.ingest.denylist.begin(), c.ingest.denylist.end())},
                   {"label_field", c.ingest.label_field}};
    if (c.ingest.user_constant) j["ingest"]["user_constant"] = *c.ingest.user_constant;
    j["sampling"] = {{"mode", std::string(to_string(c.sampling))},
                     {"walk_length", c.rwr.walk_length},
                     {"hop_limit", c.rwr.hop_limit},
                     {"restart_probability", c.rwr.restart_probability},
                     {"seed", c.rwr.seed}};
    j["encoder"] = {{"word_dim", c.word_dim},
                    {"seed", c.encoder_seed},
                    {"network_dim", c.skipgram.dim},
                    {"epochs", c.skipgram.epochs},
                    {"learning_rate", c.skipgram.learning_rate},
                    {"negatives", c.skipgram.negatives},
                    {"window", c.skipgram.window},
                    {"network_seed", c.skipgram.seed},
                    {"walks", c.embed_walks}};
    j["fda"] = {{"window", c.fda.window}, {"log_constant", c.fda.log_constant}};
    j["gnn"] = {{"hidden", c.gnn.hidden},
                {"output_dim", c.gnn.output_dim},
                {"recurrent_radius", c.gnn.recurrent_radius},
                {"input_scale", c.gnn.input_scale},
                {"seed", c.gnn.seed}};
    j["detector"] = {{"clusterer", std::string(detector::to_string(c.clusterer))},
                     {"delta", c.delta},
                     {"tau", c.tau},
                     {"normalize", c.normalize},
                     {"kmeans_k", c.kmeans_k},
                     {"kmeans_seed", c.kmeans_seed}};
    j["runtime"] = {{"workers", c.workers}, {"queue_capacity", c.queue_capacity}, {"chunk_size", c.chunk_size}};
    return j.dump(2);
}

PipelineConfig config_from_json(const std::string& text) {
    json root = json::parse(text, nullptr, false, true);
    if (root.is_discarded() || !root.is_object()) throw ConfigError("configuration is not a JSON object");
    PipelineConfig c;
    try {
        reject_unknown(root, {"path", "ingest", "sampling", "encoder", "fda", "gnn", "detector", "runtime"}, "config");
        if (root.contains("path")) c.path = path_from_string(root.at("path").get<std::string>());

        const json& in = section(root, "ingest");
        reject_unknown(in, {"user_field", "user_constant", "denylist", "label_field"}, "ingest");
        read_key(in, "user_field", c.ingest.user_field);
        read_key(in, "label_field", c.ingest.label_field);
        if (in.contains("user_constant")) c.ingest.user_constant = in.at("user_constant").get<std::string>();
        if (in.contains("denylist")) {
            const auto ids = in.at("denylist").get<std::vector<std::int32_t>>();
            c.ingest.denylist = {ids.begin(), ids.end()};
        }

        const json& s = section(root, "sampling");
        reject_unknown(s, {"mode", "walk_length", "hop_limit", "restart_probability", "seed"}, "sampling");
        if (s.contains("mode")) c.sampling = sampling_from_string(s.at("mode").get<std::string>());
        read_key(s, "walk_length", c.rwr.walk_length);
        read_key(s, "hop_limit", c.rwr.hop_limit);
        read_key(s, "restart_probability", c.rwr.restart_probability);
        read_key(s, "seed", c.rwr.seed);

        const json& e = section(root, "encoder");
        reject_unknown(e,
                       {"word_dim", "seed", "network_dim", "epochs", "learning_rate", "negatives", "window",
                        "network_seed", "walks"},
                       "encoder");
        read_key(e, "word_dim", c.word_dim);
        read_key(e, "seed", c.encoder_seed);
        read_key(e, "network_dim", c.skipgram.dim);
        read_key(e, "epochs", c.skipgram.epochs);
        read_key(e, "learning_rate", c.skipgram.learning_rate);
        read_key(e, "negatives", c.skipgram.negatives);
        read_key(e, "window", c.skipgram.window);
        read_key(e, "network_seed", c.skipgram.seed);
        read_key(e, "walks", c.embed_walks);

        const json& f = section(root, "fda");
        reject_unknown(f, {"window", "log_constant"}, "fda");
        read_key(f, "window", c.fda.window);
        read_key(f, "log_constant", c.fda.log_constant);

        const json& g = section(root, "gnn");
        reject_unknown(g, {"hidden", "output_dim", "recurrent_radius", "input_scale", "seed"}, "gnn");
        read_key(g, "hidden", c.gnn.hidden);
        read_key(g, "output_dim", c.gnn.output_dim);
        read_key(g, "recurrent_radius", c.gnn.recurrent_radius);
        read_key(g, "input_scale", c.gnn.input_scale);
        read_key(g, "seed", c.gnn.seed);

        const json& d = section(root, "detector");
        reject_unknown(d, {"clusterer", "delta", "tau", "normalize", "kmeans_k", "kmeans_seed"}, "detector");
        if (d.contains("clusterer")) c.clusterer = detector::clusterer_from_string(d.at("clusterer").get<std::string>());
        read_key(d, "delta", c.delta);
        read_key(d, "tau", c.tau);
        read_key(d, "normalize", c.normalize);
        read_key(d, "kmeans_k", c.kmeans_k);
        read_key(d, "kmeans_seed", c.kmeans_seed);

        const json& r = section(root, "runtime");
        reject_unknown(r, {"workers", "queue_capacity", "chunk_size"}, "runtime");
        read_key(r, "workers", c.workers);
        read_key(r, "queue_capacity", c.queue_capacity);
        read_key(r, "chunk_size", c.chunk_size);
    } catch (const json::exception& ex) {
        throw ConfigError(std::string("invalid configuration value: ") + ex.what());
    }
    return c;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open configuration " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return config_from_json(text);
}

void check_compatible(const PipelineConfig& cfg, const model::Model& m) {
    const PipelineConfig trained = config_from_json(m.config_json);
    auto same = [](const char* name, const auto& a, const auto& b) {
        if (!(a == b)) throw ValidationError(std::string("model/config mismatch on ") + name);
    };
    same("path", trained.path, cfg.path);
    same("sampling.mode", trained.sampling, cfg.sampling);
    same("sampling.walk_length", trained.rwr.walk_length, cfg.rwr.walk_length);
    same("fda.window", trained.fda.window, cfg.fda.window);
    same("fda.log_constant", trained.fda.log_constant, cfg.fda.log_constant);
    same("encoder.word_dim", trained.word_dim, cfg.word_dim);
    same("encoder.seed", trained.encoder_seed, cfg.encoder_seed);
    if (cfg.path == FeaturePath::Gnn) {
        same("encoder.network_dim", trained.skipgram.dim, cfg.skipgram.dim);
        same("gnn.hidden", trained.gnn.hidden, cfg.gnn.hidden);
        same("gnn.output_dim", trained.gnn.output_dim, cfg.gnn.output_dim);
        same("gnn.recurrent_radius", trained.gnn.recurrent_radius, cfg.gnn.recurrent_radius);
        same("gnn.input_scale", trained.gnn.input_scale, cfg.gnn.input_scale);
        same("gnn.seed", trained.gnn.seed, cfg.gnn.seed);
        if (m.network_dim != cfg.skipgram.dim) throw ValidationError("model network embedding has the wrong dimension");
    }
    if (m.clusters.dim() != cfg.feature_dim()) {
        throw ValidationError("model centroids have dimension " + std::to_string(m.clusters.dim()) + ", the " +
                              std::string(to_string(cfg.path)) + " path produces " +
                              std::to_string(cfg.feature_dim()));
    }
}

Corpus prepare(std::span<const LogRecord> records) {
    Corpus c;
    c.built = graph::build_graph(records);
    const auto& g = c.built.graph;
    std::unordered_map<std::string, std::uint32_t> ids;
    c.content_of_node.resize(g.node_count());
    for (std::uint32_t n = 0; n < g.node_count(); ++n) {
        auto tv = encoder::tokenize(g.record(graph::NodeId{n}));
        std::string key = tv.key();
        auto [it, inserted] = ids.try_emplace(key, static_cast<std::uint32_t>(c.contents.size()));
        if (inserted) {
            c.contents.push_back(std::move(tv));
            c.keys.push_back(std::move(key));
        }
        c.content_of_node[n] = it->second;
    }
    return c;
}

encoder::TfIdfModel fit_tfidf(const Corpus& corpus) {
    std::vector<encoder::TokenVector> docs;
    docs.reserve(corpus.node_count());
    for (auto c : corpus.content_of_node) docs.push_back(corpus.contents[c]);
    return encoder::fit_tfidf(docs);
}

void draw_sample(const graph::ProvGraph& g, graph::NodeId v, const PipelineConfig& cfg,
                 sampler::NeighborSample& out) {
    if (cfg.sampling == Sampling::Rwr) {
        sampler::sample_into(g, v, cfg.rwr, out);
    } else {
        sampler::direct_window_into(g, v, cfg.fda.window, out);
    }
}

NetworkTable train_network(const Corpus& corpus, const PipelineConfig& cfg) {
    const std::size_t n = corpus.node_count();
    if (n == 0) throw ConfigError("cannot train network embeddings on an empty corpus");
    const std::size_t walks = std::min(n, cfg.embed_walks);
    std::vector<std::vector<std::uint32_t>> sentences;
    sentences.reserve(walks);
    std::vector<char> seen(corpus.contents.size(), 0);
    sampler::NeighborSample s;
    for (std::size_t i = 0; i < walks; ++i) {
        const auto v = graph::NodeId{static_cast<std::uint32_t>(i * n / walks)};
        draw_sample(corpus.graph(), v, cfg, s);
        std::vector<std::uint32_t> sentence;
        sentence.reserve(s.samples.size() + 1);
        sentence.push_back(corpus.content_of_node[v.index]);
        for (auto u : s.samples) sentence.push_back(corpus.content_of_node[u.index]);
        for (auto id : sentence) seen[id] = 1;
        sentences.push_back(std::move(sentence));
    }
    const auto table = encoder::train_skipgram(sentences, corpus.contents.size(), cfg.skipgram);
    NetworkTable out;
    for (std::size_t c = 0; c < corpus.contents.size(); ++c) {
        if (!seen[c]) continue;
        const auto row = table.row(c);
        out.emplace(corpus.keys[c], std::vector<double>(row.begin(), row.end()));
    }
    return out;
}

double content_gain(const Corpus& corpus, const encoder::TfIdfModel& tfidf, const PipelineConfig& cfg) {
    double ss = 0.0;
    for (const auto& tv : corpus.contents) {
        for (double v : encoder::content_embed(tv, tfidf, cfg.word_dim, cfg.encoder_seed)) ss += v * v;
    }
    const double count = static_cast<double>(corpus.contents.size() * cfg.word_dim);
    return ss > 0.0 ? std::sqrt(count / ss) : 1.0;
}

std::vector<double> gnn_input(std::span<const double> network, std::span<const double> content,
                              double content_gain) {
    std::vector<double> x(network.size() + content.size());
    rescale_rms(network, std::span<double>(x.data(), network.size()));
    for (std::size_t i = 0; i < content.size(); ++i) x[network.size() + i] = content[i] * content_gain;
    return x;
}

FeatureEngine::FeatureEngine(const PipelineConfig& cfg, const Corpus& corpus, const encoder::TfIdfModel& tfidf,
                             const NetworkTable& network, double content_gain)
    : cfg_(cfg), corpus_(&corpus) {
    cfg_.validate();
    dim_ = cfg_.feature_dim();
    const std::size_t contents = corpus.contents.size();
    if (cfg_.path == FeaturePath::Fda) {
        extractor_ = std::make_unique<fda::FeatureExtractor>(cfg_.fda, encoder::kTokenCount);
        scalars_.resize(contents * encoder::kTokenCount);
        for (std::size_t c = 0; c < contents; ++c) {
            const auto s = encoder::field_scalars(corpus.contents[c], tfidf, cfg_.word_dim, cfg_.encoder_seed);
            std::copy(s.begin(), s.end(), scalars_.begin() + static_cast<std::ptrdiff_t>(c * encoder::kTokenCount));
        }
        return;
    }
    weights_ = std::make_unique<gnn::BiRnnWeights>(
        gnn::BiRnnWeights::seeded(cfg_.skipgram.dim + cfg_.word_dim, cfg_.gnn));
    aggregator_ = std::make_unique<gnn::Aggregator>(*weights_);
    projected_size_ = aggregator_->projected_size();
    projected_.resize(contents * projected_size_);
    const std::vector<double> zero(cfg_.skipgram.dim, 0.0);
    for (std::size_t c = 0; c < contents; ++c) {
        auto it = network.find(corpus.keys[c]);
        const std::vector<double>* net = &zero;
        if (it != network.end() && it->second.size() == cfg_.skipgram.dim) {
            net = &it->second;
        } else {
            ++unseen_;
        }
        const auto content = encoder::content_embed(corpus.contents[c], tfidf, cfg_.word_dim, cfg_.encoder_seed);
        const auto x = gnn_input(*net, content, content_gain);
        aggregator_->project_input(x, std::span<float>(projected_.data() + c * projected_size_, projected_size_));
    }
}

FeatureEngine::Worker::Worker(const FeatureEngine& engine) : engine_(&engine) {
    if (engine.cfg_.path == FeaturePath::Fda) matrix_.resize(engine.cfg_.fda.window, encoder::kTokenCount);
}

void FeatureEngine::Worker::featurize(graph::NodeId v, std::span<double> out) {
    const FeatureEngine& e = *engine_;
    const Corpus& c = *e.corpus_;
    draw_sample(c.graph(), v, e.cfg_, sample_);
    const auto& samples = sample_.samples;
    if (e.cfg_.path == FeaturePath::Fda) {
        for (std::size_t k = 0; k < samples.size(); ++k) {
            const double* s = e.scalars_.data() + c.content_of_node[samples[k].index] * encoder::kTokenCount;
            for (std::size_t f = 0; f < encoder::kTokenCount; ++f) matrix_.at(k, f) = s[f];
        }
        e.extractor_->extract(matrix_, out);
        return;
    }
    rows_.resize(samples.size());
    for (std::size_t k = 0; k < samples.size(); ++k) {
        rows_[k] = e.projected_.data() + c.content_of_node[samples[k].index] * e.projected_size_;
    }
    e.aggregator_->aggregate_projected(rows_, out, ws_);
}

void FeatureEngine::extract_all(const std::function<void(std::size_t, std::span<const double>)>& sink) const {
    const std::size_t n = corpus_->node_count();
    const std::size_t chunk = cfg_.chunk_size;
    struct Done {
        std::size_t first;
        std::vector<double> rows;
    };
    BoundedQueue<std::size_t> work(cfg_.queue_capacity);
    BoundedQueue<Done> done(cfg_.queue_capacity);
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto fail = [&](std::exception_ptr e) {
        {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = e;
        }
        work.close();
        done.close();
    };

    std::thread feeder([&] {
        for (std::size_t first = 0; first < n; first += chunk) {
            if (!work.push(first)) break;
        }
        work.close();
    });
    std::atomic<std::size_t> live{cfg_.workers};
    std::vector<std::thread> workers;
    workers.reserve(cfg_.workers);
    for (std::size_t w = 0; w < cfg_.workers; ++w) {
        workers.emplace_back([&] {
            try {
                Worker worker(*this);
                while (auto first = work.pop()) {
                    const std::size_t count = std::min(chunk, n - *first);
                    Done d{*first, std::vector<double>(count * dim_)};
                    for (std::size_t i = 0; i < count; ++i) {
                        worker.featurize(graph::NodeId{static_cast<std::uint32_t>(*first + i)},
                                         std::span<double>(d.rows.data() + i * dim_, dim_));
                    }
                    if (!done.push(std::move(d))) break;
                }
            } catch (...) {
                fail(std::current_exception());
            }
            if (live.fetch_sub(1) == 1) done.close();
        });
    }
    try {
        while (auto d = done.pop()) sink(d->first, d->rows);
    } catch (...) {
        fail(std::current_exception());
    }
    feeder.join();
    for (auto& t : workers) t.join();
    if (failure) std::rethrow_exception(failure);
}

detector::FeatureMatrix FeatureEngine::extract_all() const {
    detector::FeatureMatrix out(corpus_->node_count(), dim_);
    extract_all([&](std::size_t first, std::span<const double> rows) {
        const std::size_t count = rows.size() / dim_;
        for (std::size_t i = 0; i < count; ++i) {
            std::copy_n(rows.begin() + static_cast<std::ptrdiff_t>(i * dim_), dim_, out.row(first + i).begin());
        }
    });
    return out;
}

detector::ClusterModel cluster(const detector::FeatureMatrix& features, const PipelineConfig& cfg) {
    if (cfg.clusterer == detector::Clusterer::KMeans) {
        auto m = detector::train_kmeans(features, cfg.kmeans_k, cfg.tau, cfg.kmeans_seed, cfg.normalize);
        m.delta = cfg.delta;
        return m;
    }
    return detector::train(features, cfg.delta, cfg.tau, cfg.normalize);
}

model::Model train(std::span<const LogRecord> records, const PipelineConfig& cfg) {
    cfg.validate();
    if (records.empty()) throw ConfigError("training corpus has no records");
    const Corpus corpus = prepare(records);
    model::Model m;
    m.config_json = to_json(cfg);
    m.tfidf = fit_tfidf(corpus);
    if (cfg.path == FeaturePath::Gnn) {
        m.network = train_network(corpus, cfg);
        m.network_dim = cfg.skipgram.dim;
        m.content_gain = content_gain(corpus, m.tfidf, cfg);
    }
    const FeatureEngine engine(cfg, corpus, m.tfidf, m.network, m.content_gain);
    m.clusters = cluster(engine.extract_all(), cfg);
    return m;
}

DetectOutput detect(std::span<const LogRecord> records, const model::Model& m, const PipelineConfig& cfg) {
    cfg.validate();
    check_compatible(cfg, m);
    const auto t0 = Clock::now();
    DetectOutput out;
    if (records.empty()) return out;
    const Corpus corpus = prepare(records);
    const FeatureEngine engine(cfg, corpus, m.tfidf, m.network, m.content_gain);
    out.unseen_contents = engine.unseen_contents();
    out.verdicts.resize(records.size());
    const std::size_t dim = engine.dim();
    engine.extract_all([&](std::size_t first, std::span<const double> rows) {
        for (std::size_t i = 0; i < rows.size() / dim; ++i) {
            const std::size_t rec = corpus.built.record_of_node[first + i];
            out.verdicts[rec] = {rec, records[rec].source_line, detector::score(m.clusters, rows.subspan(i * dim, dim))};
        }
    });
    out.seconds = seconds_since(t0);
    return out;
}

void write_verdicts(std::ostream& out, std::span<const Verdict> verdicts) {
    for (const auto& v : verdicts) {
        const json j = {{"v", kVerdictSchemaVersion},
                        {"record_index", v.record_index},
                        {"line", v.line},
                        {"score", v.result.score},
                        {"is_anomaly", v.result.is_anomaly}};
        out << j.dump() << '\n';
    }
}

void write_feature_csv(std::ostream& out, const detector::FeatureMatrix& features) {
    out << "node_id";
    for (std::size_t f = 0; f < features.dim(); ++f) out << ",f_" << f;
    out << '\n';
    char buf[32];
    for (std::size_t r = 0; r < features.rows(); ++r) {
        out << r;
        for (double x : features.row(r)) {
            std::snprintf(buf, sizeof buf, "%.17g", x);
            out << ',' << buf;
        }
        out << '\n';
    }
}

Timing time_detection(const FeatureEngine& engine, const detector::ClusterModel& model,
                      std::span<const std::size_t> record_bytes, const TimingOptions& opts) {
    const Corpus& corpus = engine.corpus();
    const std::size_t n = corpus.node_count();
    if (n == 0) throw ConfigError("cannot time detection on an empty corpus");
    if (opts.runs == 0) throw ConfigError("timing needs at least one run");
    const std::size_t subset = std::min(n, std::max<std::size_t>(1, opts.max_nodes));
    std::vector<graph::NodeId> nodes(subset);
    std::vector<std::size_t> bytes(subset, 0);
    for (std::size_t i = 0; i < subset; ++i) {
        nodes[i] = graph::NodeId{static_cast<std::uint32_t>(i * n / subset)};
        if (!record_bytes.empty()) bytes[i] = record_bytes[corpus.built.record_of_node[nodes[i].index]];
    }

    auto worker = engine.worker();
    std::vector<double> feature(engine.dim());
    std::vector<double> latencies;
    volatile double sink = 0.0;

    Timing t;
    std::vector<double> run_bytes_per_s;
    for (std::size_t run = 0; run <= opts.runs; ++run) {
        const bool warmup = run == 0;
        std::size_t count = 0, byte_count = 0;
        std::vector<double> run_latencies;
        const auto start = Clock::now();
        double elapsed = 0.0;
        do {
            for (std::size_t i = 0; i < subset; ++i) {
                const auto t0 = Clock::now();
                worker.featurize(nodes[i], feature);
                const auto verdict = detector::score(model, feature);
                const auto t1 = Clock::now();
                sink = sink + verdict.score;
                run_latencies.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
                byte_count += bytes[i];
            }
            count += subset;
            elapsed = seconds_since(start);
        } while (elapsed < opts.min_seconds);
        if (warmup) continue;
        t.run_records_per_s.push_back(static_cast<double>(count) / elapsed);
        run_bytes_per_s.push_back(static_cast<double>(byte_count) / elapsed);
        t.run_mean_latency_us.push_back(mean_of(run_latencies));
        latencies.insert(latencies.end(), run_latencies.begin(), run_latencies.end());
    }

    t.runs = opts.runs;
    t.samples = latencies.size();
    t.mean_latency_us = mean_of(latencies);
    std::sort(latencies.begin(), latencies.end());
    const auto p95 = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(latencies.size()))) - 1;
    t.p95_latency_us = latencies[std::min(p95, latencies.size() - 1)];
    t.latency_std_us = stddev_of(t.run_mean_latency_us);
    t.records_per_s = mean_of(t.run_records_per_s);
    t.records_per_s_std = stddev_of(t.run_records_per_s);
    t.bytes_per_s = mean_of(run_bytes_per_s);
    const double cv_throughput = t.records_per_s > 0 ? t.records_per_s_std / t.records_per_s : 0.0;
    const double mean_run_latency = mean_of(t.run_mean_latency_us);
    const double cv_latency = mean_run_latency > 0 ? t.latency_std_us / mean_run_latency : 0.0;
    t.cv = std::max(cv_throughput, cv_latency);
    return t;
}

LabeledSet labeled_set(ingest::IngestResult result) {
    LabeledSet s;
    s.records = std::move(result.records);
    s.record_bytes = std::move(result.record_bytes);
    if (result.has_labels()) {
        s.labels.reserve(result.labels.size());
        for (auto l : result.labels) s.labels.push_back(l == ingest::Label::Malicious ? 1 : 0);
    }
    return s;
}

std::string Variant::name() const {
    std::string s;
    if (sampling == Sampling::Rwr) s += "RWR+";
    s += path == FeaturePath::Fda ? "FDA" : "GNN";
    s += clusterer == detector::Clusterer::Statistical ? "+statistical" : "+k-means";
    return s;
}

std::vector<Variant> ablation_variants() {
    using detector::Clusterer;
    return {
        {1, FeaturePath::Gnn, Sampling::Rwr, Clusterer::Statistical},
        {2, FeaturePath::Gnn, Sampling::Direct, Clusterer::Statistical},
        {3, FeaturePath::Gnn, Sampling::Direct, Clusterer::KMeans},
        {4, FeaturePath::Fda, Sampling::Rwr, Clusterer::Statistical},
        {5, FeaturePath::Fda, Sampling::Rwr, Clusterer::KMeans},
        {6, FeaturePath::Fda, Sampling::Direct, Clusterer::Statistical},
        {7, FeaturePath::Fda, Sampling::Direct, Clusterer::KMeans},
    };
}

struct Experiment::Features {
    PipelineConfig cfg;
    NetworkTable network;
    std::unique_ptr<FeatureEngine> train_engine;
    std::unique_ptr<FeatureEngine> test_engine;
    detector::FeatureMatrix train;
    detector::FeatureMatrix test;
    double train_seconds = 0.0;
    double test_seconds = 0.0;
};

Experiment::Experiment(PipelineConfig base, std::span<const LogRecord> train, const LabeledSet& test)
    : base_(std::move(base)) {
    base_.validate();
    if (train.empty() || test.records.empty()) throw ConfigError("experiment needs non-empty train and test sets");
    train_ = prepare(train);
    test_ = prepare(test.records);
    test_labels_ = labels_by_node(test_, test.labels);
    if (!test.record_bytes.empty() && test.record_bytes.size() != test.records.size()) {
        throw ConfigError("record byte count does not match the record count");
    }
    test_bytes_ = test.record_bytes;
    tfidf_ = fit_tfidf(train_);
}

Experiment::~Experiment() = default;

Experiment::Features& Experiment::features(FeaturePath path, Sampling sampling) {
    auto& slot = cache_[{path, sampling}];
    if (slot) return *slot;
    auto f = std::make_unique<Features>();
    f->cfg = base_;
    f->cfg.path = path;
    f->cfg.sampling = sampling;
    auto t0 = Clock::now();
    double gain = 1.0;
    if (path == FeaturePath::Gnn) {
        f->network = train_network(train_, f->cfg);
        gain = content_gain(train_, tfidf_, f->cfg);
    }
    f->train_engine = std::make_unique<FeatureEngine>(f->cfg, train_, tfidf_, f->network, gain);
    f->train = f->train_engine->extract_all();
    f->train_seconds = seconds_since(t0);
    t0 = Clock::now();
    f->test_engine = std::make_unique<FeatureEngine>(f->cfg, test_, tfidf_, f->network, gain);
    f->test = f->test_engine->extract_all();
    f->test_seconds = seconds_since(t0);
    slot = std::move(f);
    return *slot;
}

VariantResult Experiment::run(const Variant& v, const TimingOptions& timing) {
    Features& f = features(v.path, v.sampling);
    PipelineConfig cfg = f.cfg;
    cfg.clusterer = v.clusterer;

    VariantResult r;
    r.variant = v;
    auto t0 = Clock::now();
    const auto model = cluster(f.train, cfg);
    r.train_seconds = f.train_seconds + seconds_since(t0);
    r.clusters = model.cluster_count();
    r.loss_train = model.loss_train;
    r.unseen_contents = f.test_engine->unseen_contents();

    t0 = Clock::now();
    std::vector<double> scores(f.test.rows());
    for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = detector::score(model, f.test.row(i)).score;
    r.detect_seconds = f.test_seconds + seconds_since(t0);
    if (!test_labels_.empty()) r.metrics = detector::evaluate_scores(scores, test_labels_, model.threshold());
    if (timing.runs > 0) r.timing = time_detection(*f.test_engine, model, test_bytes_, timing);
    return r;
}

} // namespace provscope::pipeline
