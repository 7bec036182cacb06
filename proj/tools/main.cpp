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

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "provscope/error.hpp"
#include "provscope/ingest.hpp"
#include "provscope/model_file.hpp"
#include "provscope/pipeline.hpp"
#include "provscope/report.hpp"
#include "provscope/rng.hpp"
#include "provscope/synthgen.hpp"

namespace {

using namespace provscope;
using pipeline::PipelineConfig;
using Clock = std::chrono::steady_clock;

// Flag overrides applied on top of the config file (or the model's config).
struct Overrides {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> path;
    std::optional<std::string> sampling;
    std::optional<std::uint32_t> walk_len;
    std::optional<std::uint32_t> hops;
    std::optional<double> restart_p;
    std::optional<std::uint32_t> dft_window;
    std::optional<double> log_c;
    std::optional<std::size_t> embed_dim;
    std::optional<std::uint32_t> sg_epochs;
    std::optional<std::uint32_t> sg_neg;
    std::optional<std::uint32_t> sg_window;
    std::optional<std::size_t> sg_walks;
    std::vector<std::size_t> gnn_hidden;
    std::optional<std::uint64_t> gnn_seed;
    std::optional<double> delta;
    std::optional<double> tau;
    std::optional<std::string> clusterer;
    bool normalize = false;
    std::optional<std::size_t> kmeans_k;
    std::optional<std::size_t> workers;
    std::optional<std::string> user_field;
    std::optional<std::string> user;
    std::vector<std::int32_t> denylist;

    void add_to(CLI::App& app, bool pipeline_flags) {
        app.add_option("--seed", seed, "Seed for every random stream");
        app.add_option("--user-field", user_field, "JSON field naming the user/host (default Hostname)");
        app.add_option("--user", user, "Attribute every record to this user");
        app.add_option("--denylist", denylist, "EventIDs dropped as noise")->delimiter(',');
        if (!pipeline_flags) return;
        app.add_option("--config", config_path, "Pipeline configuration (JSON)");
        app.add_option("--path", path, "Feature path: fda or gnn");
        app.add_option("--sampling", sampling, "Neighbor sampling: rwr or direct");
        app.add_option("--walk-len", walk_len, "Samples per node K (also sets the DFT window unless given)");
        app.add_option("--hops", hops, "Hop limit n of the walk");
        app.add_option("--restart-p", restart_p, "Restart probability");
        app.add_option("--dft-window", dft_window, "DFT window; must equal the walk length");
        app.add_option("--log-c", log_c, "Log scaling constant C");
        app.add_option("--embed-dim", embed_dim, "Embedding dimension e");
        app.add_option("--sg-epochs", sg_epochs, "Skip-gram epochs");
        app.add_option("--sg-neg", sg_neg, "Skip-gram negative samples");
        app.add_option("--sg-window", sg_window, "Skip-gram context window");
        app.add_option("--sg-walks", sg_walks, "Walks used to train network embeddings");
        app.add_option("--gnn-hidden", gnn_hidden, "Hidden sizes of the stacked aggregator")->delimiter(',');
        app.add_option("--gnn-seed", gnn_seed, "Aggregator weight seed");
        app.add_option("--delta", delta, "Cosine similarity threshold");
        app.add_option("--tau", tau, "Anomaly threshold multiplier on loss_train");
        app.add_option("--clusterer", clusterer, "statistical or kmeans");
        app.add_flag("--normalize", normalize, "Unit-normalize vectors before clustering");
        app.add_option("--kmeans-k", kmeans_k, "k for the k-means clusterer");
        app.add_option("--workers", workers, "Feature worker threads");
    }

    PipelineConfig base() const {
        return config_path.empty() ? PipelineConfig{} : pipeline::load_config(config_path);
    }

    void apply(PipelineConfig& c) const {
        if (seed) c.set_seed(*seed);
        if (path) c.path = pipeline::path_from_string(*path);
        if (sampling) c.sampling = pipeline::sampling_from_string(*sampling);
        if (walk_len) {
            c.rwr.walk_length = *walk_len;
            if (!dft_window) c.fda.window = *walk_len;
        }
        if (hops) c.rwr.hop_limit = *hops;
        if (restart_p) c.rwr.restart_probability = *restart_p;
        if (dft_window) c.fda.window = *dft_window;
        if (log_c) c.fda.log_constant = *log_c;
        if (embed_dim) {
            c.word_dim = *embed_dim;
            c.skipgram.dim = *embed_dim;
            c.gnn.output_dim = *embed_dim;
        }
        if (sg_epochs) c.skipgram.epochs = *sg_epochs;
        if (sg_neg) c.skipgram.negatives = *sg_neg;
        if (sg_window) c.skipgram.window = *sg_window;
        if (sg_walks) c.embed_walks = *sg_walks;
        if (!gnn_hidden.empty()) c.gnn.hidden = gnn_hidden;
        if (gnn_seed) c.gnn.seed = *gnn_seed;
        if (delta) c.delta = *delta;
        if (tau) c.tau = *tau;
        if (clusterer) c.clusterer = detector::clusterer_from_string(*clusterer);
        if (normalize) c.normalize = true;
        if (kmeans_k) c.kmeans_k = *kmeans_k;
        if (workers) c.workers = *workers;
        apply_ingest(c.ingest);
    }

    void apply_ingest(ingest::IngestOptions& o) const {
        if (user_field) o.user_field = *user_field;
        if (user) o.user_constant = *user;
        if (!denylist.empty()) o.denylist = {denylist.begin(), denylist.end()};
    }
};

struct TimingFlags {
    std::size_t runs = 3;
    double min_seconds = 0.3;
    std::size_t max_nodes = 2000;

    void add_to(CLI::App& app) {
        app.add_option("--runs", runs, "Warm timing runs (after one warmup)");
        app.add_option("--min-seconds", min_seconds, "Minimum duration of each timing run");
        app.add_option("--max-nodes", max_nodes, "Size of the timed node subset");
    }
    pipeline::TimingOptions options() const { return {runs, min_seconds, max_nodes}; }
};

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot create " + path);
    return out;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

pipeline::LabeledSet load_records(const std::string& path, const ingest::IngestOptions& options) {
    auto result = ingest::ingest_file(path, options);
    if (result.stats.parse_errors > 0) {
        std::cerr << "warning: " << result.stats.parse_errors << " malformed line(s) skipped in " << path;
        if (!result.errors.empty()) std::cerr << " (first at line " << result.errors.front().line() << ")";
        std::cerr << '\n';
    }
    if (result.records.empty()) throw DataError("no usable records in " + path);
    return pipeline::labeled_set(std::move(result));
}

// Serializes a generated corpus and ingests it back, so in-memory corpora
// take exactly the same path as files.
pipeline::LabeledSet through_ingest(const synth::LabeledCorpus& corpus, const ingest::IngestOptions& options) {
    std::stringstream buf;
    synth::write_jsonl(buf, corpus);
    return pipeline::labeled_set(ingest::ingest_stream(buf, options));
}

// --train/--input files, or the built-in reference split when both are absent.
std::pair<pipeline::LabeledSet, pipeline::LabeledSet> load_split(const std::string& train, const std::string& test,
                                                                 const PipelineConfig& cfg, std::uint64_t seed) {
    if (train.empty() != test.empty()) throw ConfigError("--train and --input must be given together");
    if (train.empty()) {
        std::cerr << "using the reference corpus (seed " << seed << ")\n";
        const auto split = synth::reference_split(seed);
        return {through_ingest(split.train, cfg.ingest), through_ingest(split.test, cfg.ingest)};
    }
    return {load_records(train, cfg.ingest), load_records(test, cfg.ingest)};
}

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int cmd_gen(std::uint32_t users, std::uint32_t logs, std::uint64_t seed, double rate, const std::string& family,
            std::optional<std::size_t> segments, const std::string& profile_path, const std::string& injection_path,
            const std::string& output, const std::string& splices_path) {
    const auto profile = profile_path.empty() ? synth::BehaviorProfile::default_benign()
                                              : synth::profile_from_json(read_text(profile_path));
    auto benign = synth::gen_benign(profile, users, logs, seed);
    synth::LabeledCorpus corpus;
    if (rate == 0.0 && !segments) {
        corpus = synth::label_all_benign(std::move(benign));
    } else {
        auto spec = injection_path.empty() ? synth::InjectionSpec::default_for(family)
                                           : synth::injection_from_json(read_text(injection_path));
        if (rate > 0.0) spec.rate = rate;
        if (segments) spec.segment_count = segments;
        corpus = synth::inject(benign, spec, derive_seed(seed, 0x4D4958));
    }
    if (output.empty() || output == "-") {
        synth::write_jsonl(std::cout, corpus);
    } else {
        auto out = open_out(output);
        synth::write_jsonl(out, corpus);
    }
    if (!splices_path.empty()) {
        auto out = open_out(splices_path);
        out << "user,offset,length\n";
        for (const auto& s : corpus.splices) out << s.user << ',' << s.offset << ',' << s.length << '\n';
    }
    std::cerr << "generated " << corpus.records.size() << " records (" << corpus.malicious_count()
              << " malicious) for " << users << " users\n";
    return 0;
}

int cmd_train(const Overrides& ov, const std::string& input, const std::string& model_path,
              const std::string& report_path, const std::string& dump_path) {
    auto cfg = ov.base();
    ov.apply(cfg);
    cfg.validate();
    const auto t0 = Clock::now();
    const auto data = load_records(input, cfg.ingest);
    const auto m = pipeline::train(data.records, cfg);
    model::save(model_path, m);

    report::RunReport r;
    r.command = "train";
    r.label = std::string(pipeline::to_string(cfg.path));
    r.seed = cfg.rwr.seed;
    r.records = data.records.size();
    r.clusters = m.clusters.cluster_count();
    r.loss_train = m.clusters.loss_train;
    r.wall_seconds = since(t0);
    r.config_json = m.config_json;
    report::print_summary(std::cout, r);
    if (!report_path.empty()) {
        auto out = open_out(report_path);
        report::write_csv(out, std::span(&r, 1));
    }
    if (!dump_path.empty()) {
        const auto corpus = pipeline::prepare(data.records);
        const pipeline::FeatureEngine engine(cfg, corpus, m.tfidf, m.network, m.content_gain);
        auto out = open_out(dump_path);
        pipeline::write_feature_csv(out, engine.extract_all());
    }
    return 0;
}

int cmd_detect(const Overrides& ov, const std::string& input, const std::string& model_path,
               const std::string& verdict_path, const std::string& report_path, const std::string& json_path) {
    const auto m = model::load(model_path);
    auto cfg = ov.config_path.empty() ? pipeline::config_from_json(m.config_json) : ov.base();
    ov.apply(cfg);
    cfg.validate();
    const auto t0 = Clock::now();
    const auto data = load_records(input, cfg.ingest);
    const auto out = pipeline::detect(data.records, m, cfg);

    if (!verdict_path.empty()) {
        if (verdict_path == "-") {
            pipeline::write_verdicts(std::cout, out.verdicts);
        } else {
            auto f = open_out(verdict_path);
            pipeline::write_verdicts(f, out.verdicts);
        }
    }

    report::RunReport r;
    r.command = "detect";
    r.label = std::string(pipeline::to_string(cfg.path));
    r.seed = cfg.rwr.seed;
    r.records = data.records.size();
    r.clusters = m.clusters.cluster_count();
    r.loss_train = m.clusters.loss_train;
    r.config_json = pipeline::to_json(cfg);
    std::vector<double> scores;
    scores.reserve(out.verdicts.size());
    for (const auto& v : out.verdicts) {
        scores.push_back(v.result.score);
        if (v.result.is_anomaly) ++r.anomalies;
    }
    if (!data.labels.empty()) r.metrics = detector::evaluate_scores(scores, data.labels, m.clusters.threshold());
    r.wall_seconds = since(t0);
    if (out.unseen_contents > 0) {
        std::cerr << "note: " << out.unseen_contents << " log content(s) had no network embedding; zero vector used\n";
    }
    if (verdict_path != "-") report::print_summary(std::cout, r);
    if (!report_path.empty()) {
        auto f = open_out(report_path);
        report::write_csv(f, std::span(&r, 1));
    }
    if (!json_path.empty()) {
        auto f = open_out(json_path);
        report::write_json(f, std::span(&r, 1));
    }
    return 0;
}

report::RunReport bench_one(pipeline::Experiment& ex, pipeline::FeaturePath path, const TimingFlags& tf,
                            std::size_t records) {
    pipeline::Variant v{0, path, ex.base().sampling, ex.base().clusterer};
    const auto res = ex.run(v, tf.options());
    auto r = report::from_variant(res, ex.base().rwr.seed, records);
    r.command = "bench";
    r.label = std::string(pipeline::to_string(path));
    auto cfg = ex.base();
    cfg.path = path;
    r.config_json = pipeline::to_json(cfg);
    return r;
}

int cmd_bench(const Overrides& ov, const std::string& train, const std::string& input, const TimingFlags& tf,
              const std::string& report_path, const std::string& json_path) {
    auto cfg = ov.base();
    ov.apply(cfg);
    cfg.validate();
    const auto [train_set, test_set] = load_split(train, input, cfg, cfg.rwr.seed);
    pipeline::Experiment ex(cfg, train_set.records, test_set);
    auto fda = bench_one(ex, pipeline::FeaturePath::Fda, tf, test_set.records.size());
    auto gnn = bench_one(ex, pipeline::FeaturePath::Gnn, tf, test_set.records.size());
    const auto cmp = report::compare(std::move(fda), std::move(gnn));
    report::print_comparison(std::cout, cmp);
    const std::vector<report::RunReport> both = {cmp.fda, cmp.gnn};
    if (!report_path.empty()) {
        auto f = open_out(report_path);
        report::write_csv(f, both);
    }
    if (!json_path.empty()) {
        auto f = open_out(json_path);
        report::write_json(f, both);
    }
    return 0;
}

int cmd_ablate(const Overrides& ov, const std::string& train, const std::string& input, const TimingFlags& tf,
               const std::string& report_path) {
    auto cfg = ov.base();
    ov.apply(cfg);
    cfg.validate();
    const auto [train_set, test_set] = load_split(train, input, cfg, cfg.rwr.seed);
    pipeline::Experiment ex(cfg, train_set.records, test_set);
    std::vector<pipeline::VariantResult> rows;
    for (const auto& v : pipeline::ablation_variants()) {
        rows.push_back(ex.run(v, tf.options()));
        std::cerr << "variant " << v.id << " (" << v.name() << ") done\n";
    }
    report::print_ablation(std::cout, rows);
    if (!report_path.empty()) {
        auto f = open_out(report_path);
        report::write_ablation_csv(f, rows);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"provscope: provenance-graph anomaly detection for host logs"};
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("gen", "Generate a synthetic JSON-lines corpus");
    std::uint32_t users = 10, logs = 5000;
    std::uint64_t gen_seed = 42;
    double rate = 0.0;
    std::string family = "Ransomware", profile_path, injection_path, gen_out, splices_path;
    std::optional<std::size_t> segments;
    gen->add_option("--users", users, "Number of users/hosts");
    gen->add_option("--logs-per-user", logs, "Benign records per user");
    gen->add_option("--seed", gen_seed, "Generator seed");
    gen->add_option("--rate", rate, "Fraction of injected anomalous records (0 = benign only)");
    gen->add_option("--segments", segments, "Exact number of injected segments");
    gen->add_option("--family", family, "Label of the injected behavior");
    gen->add_option("--profile", profile_path, "Benign behavior profile (JSON)");
    gen->add_option("--injection", injection_path, "Injection spec (JSON)");
    gen->add_option("--output,-o", gen_out, "Output path (default stdout)");
    gen->add_option("--splices", splices_path, "Write the splice ledger as CSV");

    Overrides train_ov, detect_ov, bench_ov, ablate_ov;
    std::string train_in, model_out, train_report, train_dump;
    auto* train = app.add_subcommand("train", "Train a detector on benign logs");
    train_ov.add_to(*train, true);
    train->add_option("--input", train_in, "Benign JSON-lines corpus")->required();
    train->add_option("--model", model_out, "Model file to write")->required();
    train->add_option("--report", train_report, "Metrics CSV");
    train->add_option("--dump-features", train_dump, "Per-node feature CSV");

    std::string detect_in, model_in, verdicts, detect_report, detect_json;
    auto* detect = app.add_subcommand("detect", "Score logs against a trained model");
    detect_ov.add_to(*detect, true);
    detect->add_option("--input", detect_in, "JSON-lines corpus to score")->required();
    detect->add_option("--model", model_in, "Model file")->required();
    detect->add_option("--verdicts", verdicts, "Verdict JSON-lines ('-' for stdout)");
    detect->add_option("--report", detect_report, "Metrics CSV");
    detect->add_option("--report-json", detect_json, "Full report with config echo (JSON)");

    std::string bench_train, bench_in, bench_report, bench_json;
    TimingFlags bench_tf, ablate_tf;
    auto* bench = app.add_subcommand("bench", "Compare fda and gnn paths on one corpus");
    bench_ov.add_to(*bench, true);
    bench_tf.add_to(*bench);
    bench->add_option("--train", bench_train, "Benign training corpus (default: reference corpus)");
    bench->add_option("--input", bench_in, "Labeled test corpus (default: reference corpus)");
    bench->add_option("--report", bench_report, "Metrics CSV");
    bench->add_option("--report-json", bench_json, "Full report with config echo (JSON)");

    std::string ablate_train, ablate_in, ablate_report;
    auto* ablate = app.add_subcommand("ablate", "Run the seven ablation variants");
    ablate_ov.add_to(*ablate, true);
    ablate_tf.add_to(*ablate);
    ablate->add_option("--train", ablate_train, "Benign training corpus (default: reference corpus)");
    ablate->add_option("--input", ablate_in, "Labeled test corpus (default: reference corpus)");
    ablate->add_option("--report", ablate_report, "Ablation table CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(ExitCode::Usage);
    }

    try {
        if (*gen) {
            return cmd_gen(users, logs, gen_seed, rate, family, segments, profile_path, injection_path, gen_out,
                           splices_path);
        }
        if (*train) return cmd_train(train_ov, train_in, model_out, train_report, train_dump);
        if (*detect) return cmd_detect(detect_ov, detect_in, model_in, verdicts, detect_report, detect_json);
        if (*bench) return cmd_bench(bench_ov, bench_train, bench_in, bench_tf, bench_report, bench_json);
        if (*ablate) return cmd_ablate(ablate_ov, ablate_train, ablate_in, ablate_tf, ablate_report);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(exit_code_for(e));
    }
    return static_cast<int>(ExitCode::Failure);
}
