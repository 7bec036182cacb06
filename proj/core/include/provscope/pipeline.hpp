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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "provscope/detector.hpp"
#include "provscope/encoder.hpp"
#include "provscope/fda.hpp"
#include "provscope/gnn_embed.hpp"
#include "provscope/ingest.hpp"
#include "provscope/model_file.hpp"
#include "provscope/provgraph.hpp"
#include "provscope/sampler.hpp"

namespace provscope::pipeline {

using ingest::LogRecord;

enum class FeaturePath : std::uint8_t { Fda, Gnn };
enum class Sampling : std::uint8_t { Rwr, Direct };

std::string_view to_string(FeaturePath p) noexcept;
std::string_view to_string(Sampling s) noexcept;
// Throw ConfigError on unknown names.
FeaturePath path_from_string(std::string_view name);
Sampling sampling_from_string(std::string_view name);

struct PipelineConfig {
    ingest::IngestOptions ingest;
    sampler::RwrConfig rwr;
    Sampling sampling = Sampling::Rwr;
    fda::FdaConfig fda;
    std::size_t word_dim = 100;        // e for content embeddings
    std::uint64_t encoder_seed = 42;
    encoder::SkipGramConfig skipgram;  // network embeddings, dim e
    std::size_t embed_walks = 4000;    // walks fed to skip-gram
    gnn::GnnConfig gnn;
    FeaturePath path = FeaturePath::Fda;
    detector::Clusterer clusterer = detector::Clusterer::Statistical;
    double delta = 0.72;
    double tau = 1.0;
    bool normalize = false;
    std::size_t kmeans_k = 8;
    std::uint64_t kmeans_seed = 42;
    std::size_t workers = 1;
    std::size_t queue_capacity = 64;  // chunks in flight per queue
    std::size_t chunk_size = 64;      // nodes per work item

    // Throws ValidationError naming the offending setting.
    void validate() const;
    // Length of the vectors handed to the detector.
    std::size_t feature_dim() const;
    // Sets every seed (walks, encoders, aggregator, k-means) to s.
    void set_seed(std::uint64_t s);
};

// Canonical JSON text (sorted keys). Parsing accepts any subset of keys and
// rejects unknown ones; throws ConfigError.
std::string to_json(const PipelineConfig& cfg);
PipelineConfig config_from_json(const std::string& text);
PipelineConfig load_config(const std::string& path);

// Throws ValidationError when a model cannot be used with cfg (other
// feature path, window, dimensions, ...).
void check_compatible(const PipelineConfig& cfg, const model::Model& m);

// Graph plus interned log contents for one record set.
struct Corpus {
    graph::BuiltGraph built;
    std::vector<encoder::TokenVector> contents;  // distinct
    std::vector<std::string> keys;               // TokenVector::key() per content
    std::vector<std::uint32_t> content_of_node;

    const graph::ProvGraph& graph() const noexcept { return built.graph; }
    std::size_t node_count() const noexcept { return built.graph.node_count(); }
};
Corpus prepare(std::span<const LogRecord> records);

encoder::TfIdfModel fit_tfidf(const Corpus& corpus);

using NetworkTable = std::map<std::string, std::vector<double>>;

// Skip-gram over walk sentences of content ids. At most cfg.embed_walks
// targets (evenly strided over node ids) contribute a walk each.
NetworkTable train_network(const Corpus& corpus, const PipelineConfig& cfg);

// Sampling according to cfg.sampling.
void draw_sample(const graph::ProvGraph& g, graph::NodeId v, const PipelineConfig& cfg,
                 sampler::NeighborSample& out);

// Per-node feature extraction over one prepared corpus. Encodings are
// computed once per distinct content at construction; afterwards the engine
// is read-only and shared by all workers.
class FeatureEngine {
public:
    FeatureEngine(const PipelineConfig& cfg, const Corpus& corpus, const encoder::TfIdfModel& tfidf,
                  const NetworkTable& network, double content_gain = 1.0);

    std::size_t dim() const noexcept { return dim_; }
    const PipelineConfig& config() const noexcept { return cfg_; }
    const Corpus& corpus() const noexcept { return *corpus_; }
    // Contents that had no network embedding (zero vector used instead).
    std::size_t unseen_contents() const noexcept { return unseen_; }

    // Per-thread scratch state.
    class Worker {
    public:
        explicit Worker(const FeatureEngine& engine);
        void featurize(graph::NodeId v, std::span<double> out);
        const sampler::NeighborSample& last_sample() const noexcept { return sample_; }

    private:
        const FeatureEngine* engine_;
        sampler::NeighborSample sample_;
        fda::SampleMatrix matrix_;
        std::vector<const float*> rows_;
        gnn::Aggregator::Workspace ws_;
    };

    Worker worker() const { return Worker(*this); }

    // Feature rows of every node, produced by cfg.workers threads. A feeder
    // hands out node chunks through a bounded queue, workers push finished
    // chunks into a second bounded queue, and sink runs on the calling thread
    // in arrival order with (first node index, row-major rows).
    void extract_all(const std::function<void(std::size_t, std::span<const double>)>& sink) const;
    detector::FeatureMatrix extract_all() const;

private:
    PipelineConfig cfg_;
    const Corpus* corpus_;
    std::size_t dim_ = 0;
    std::size_t unseen_ = 0;
    std::vector<double> scalars_;  // fda: kTokenCount per content
    std::unique_ptr<fda::FeatureExtractor> extractor_;
    std::unique_ptr<gnn::BiRnnWeights> weights_;
    std::unique_ptr<gnn::Aggregator> aggregator_;
    std::vector<float> projected_;  // gnn: projected_size per content
    std::size_t projected_size_ = 0;
};

// Inverse RMS of the content embeddings of the corpus' distinct contents
// (1 when they are all zero).
double content_gain(const Corpus& corpus, const encoder::TfIdfModel& tfidf, const PipelineConfig& cfg);

// Aggregator input for one log: the network embedding rescaled to unit RMS
// (zero stays zero), then the content embedding times content_gain.
std::vector<double> gnn_input(std::span<const double> network, std::span<const double> content,
                              double content_gain);

detector::ClusterModel cluster(const detector::FeatureMatrix& features, const PipelineConfig& cfg);

// ingest -> graph -> encoders -> features -> detector.
model::Model train(std::span<const LogRecord> records, const PipelineConfig& cfg);

struct Verdict {
    std::size_t record_index = 0;
    std::int64_t line = 0;
    detector::DetectionResult result;
};

struct DetectOutput {
    std::vector<Verdict> verdicts;  // input record order
    std::size_t unseen_contents = 0;
    double seconds = 0.0;
};

DetectOutput detect(std::span<const LogRecord> records, const model::Model& m, const PipelineConfig& cfg);

// Versioned verdict schema, one object per line:
// {"is_anomaly":b,"line":n,"record_index":i,"score":s,"v":1}
inline constexpr int kVerdictSchemaVersion = 1;
void write_verdicts(std::ostream& out, std::span<const Verdict> verdicts);

// node_id,f_0,...,f_{d-1}
void write_feature_csv(std::ostream& out, const detector::FeatureMatrix& features);

struct TimingOptions {
    std::size_t runs = 3;           // warm runs, after one discarded warmup
    double min_seconds = 0.3;       // per run
    std::size_t max_nodes = 2000;   // evenly strided subset of the corpus
};

struct Timing {
    std::size_t runs = 0;
    std::size_t samples = 0;             // timed records over all runs
    double mean_latency_us = 0.0;
    double p95_latency_us = 0.0;
    double latency_std_us = 0.0;         // of the per-run mean latencies
    double records_per_s = 0.0;          // mean over runs
    double records_per_s_std = 0.0;
    double bytes_per_s = 0.0;
    double cv = 0.0;                     // max coefficient of variation of run throughput and run latency
    std::vector<double> run_records_per_s;
    std::vector<double> run_mean_latency_us;
};

// Batch size 1 latency of sample -> gather -> feature -> score per record,
// single thread. record_bytes gives the source size of each input record.
Timing time_detection(const FeatureEngine& engine, const detector::ClusterModel& model,
                      std::span<const std::size_t> record_bytes, const TimingOptions& opts);

// Ablation and benchmarking share one train/test split.
struct LabeledSet {
    std::vector<LogRecord> records;
    std::vector<std::uint8_t> labels;       // 1 = malicious; may be empty
    std::vector<std::size_t> record_bytes;  // may be empty
};

// Labels from an ingest pass (Malicious -> 1, anything else -> 0) and the
// source byte count of every accepted record.
LabeledSet labeled_set(ingest::IngestResult result);

struct Variant {
    int id = 0;
    FeaturePath path = FeaturePath::Fda;
    Sampling sampling = Sampling::Rwr;
    detector::Clusterer clusterer = detector::Clusterer::Statistical;
    std::string name() const;
};

// The seven ablation rows: RWR+GNN+statistical, GNN+statistical,
// GNN+k-means, RWR+FDA+statistical, RWR+FDA+k-means, FDA+statistical,
// FDA+k-means.
std::vector<Variant> ablation_variants();

struct VariantResult {
    Variant variant;
    std::size_t clusters = 0;
    double loss_train = 0.0;
    std::optional<detector::Metrics> metrics;
    Timing timing;
    double train_seconds = 0.0;
    double detect_seconds = 0.0;
    std::size_t unseen_contents = 0;
};

// Runs variants against a fixed split. Corpora are prepared once; features
// are cached per (path, sampling), so clusterers share them.
class Experiment {
public:
    Experiment(PipelineConfig base, std::span<const LogRecord> train, const LabeledSet& test);
    ~Experiment();

    VariantResult run(const Variant& v, const TimingOptions& timing);
    const PipelineConfig& base() const noexcept { return base_; }

private:
    struct Features;
    Features& features(FeaturePath path, Sampling sampling);

    PipelineConfig base_;
    Corpus train_;
    Corpus test_;
    std::vector<std::uint8_t> test_labels_;  // node order
    std::vector<std::size_t> test_bytes_;    // node order
    encoder::TfIdfModel tfidf_;
    std::map<std::pair<FeaturePath, Sampling>, std::unique_ptr<Features>> cache_;
};

} // namespace provscope::pipeline
