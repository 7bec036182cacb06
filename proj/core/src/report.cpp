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

#include "provscope/report.hpp"

#include <cstdio>
#include <ostream>

#include "json.hpp"

namespace provscope::report {

namespace {

using nlohmann::json;

std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

std::string opt_num(const std::optional<double>& x) { return x ? num(*x) : ""; }

json metrics_json(const detector::Metrics& m) {
    json j = {{"tp", m.tp},   {"fp", m.fp},     {"tn", m.tn},           {"fn", m.fn},         {"tpr", m.tpr},
              {"fpr", m.fpr}, {"f1", m.f1},     {"precision", m.precision}, {"recall", m.recall},
              {"accuracy", m.accuracy}};
    j["auc"] = m.auc ? json(*m.auc) : json(nullptr);
    return j;
}

json timing_json(const pipeline::Timing& t) {
    return {{"runs", t.runs},
            {"samples", t.samples},
            {"mean_latency_us", t.mean_latency_us},
            {"p95_latency_us", t.p95_latency_us},
            {"latency_std_us", t.latency_std_us},
            {"records_per_s", t.records_per_s},
            {"records_per_s_std", t.records_per_s_std},
            {"bytes_per_s", t.bytes_per_s},
            {"cv", t.cv},
            {"run_records_per_s", t.run_records_per_s},
            {"run_mean_latency_us", t.run_mean_latency_us}};
}

} // namespace

void write_csv(std::ostream& out, std::span<const RunReport> reports) {
    out << "command,label,seed,records,anomalies,clusters,loss_train,auc,tpr,fpr,precision,recall,f1,"
           "mean_latency_us,p95_latency_us,latency_std_us,records_per_s,records_per_s_std,bytes_per_s,cv,"
           "wall_seconds\n";
    for (const auto& r : reports) {
        out << r.command << ',' << r.label << ',' << r.seed << ',' << r.records << ',' << r.anomalies << ','
            << r.clusters << ',' << num(r.loss_train) << ',';
        if (r.metrics) {
            const auto& m = *r.metrics;
            out << opt_num(m.auc) << ',' << num(m.tpr) << ',' << num(m.fpr) << ',' << num(m.precision) << ','
                << num(m.recall) << ',' << num(m.f1) << ',';
        } else {
            out << ",,,,,,";
        }
        if (r.timing) {
            const auto& t = *r.timing;
            out << num(t.mean_latency_us) << ',' << num(t.p95_latency_us) << ',' << num(t.latency_std_us) << ','
                << num(t.records_per_s) << ',' << num(t.records_per_s_std) << ',' << num(t.bytes_per_s) << ','
                << num(t.cv) << ',';
        } else {
            out << ",,,,,,,";
        }
        out << num(r.wall_seconds) << '\n';
    }
}

void write_json(std::ostream& out, std::span<const RunReport> reports) {
    json arr = json::array();
    for (const auto& r : reports) {
        json j = {{"command", r.command},     {"label", r.label},         {"seed", r.seed},
                  {"records", r.records},     {"anomalies", r.anomalies}, {"clusters", r.clusters},
                  {"loss_train", r.loss_train}, {"wall_seconds", r.wall_seconds}};
        j["metrics"] = r.metrics ? metrics_json(*r.metrics) : json(nullptr);
        j["timing"] = r.timing ? timing_json(*r.timing) : json(nullptr);
        json cfg = json::parse(r.config_json, nullptr, false);
        j["config"] = cfg.is_discarded() ? json(nullptr) : cfg;
        arr.push_back(std::move(j));
    }
    out << arr.dump(2) << '\n';
}

void print_summary(std::ostream& out, const RunReport& r) {
    out << r.command << " [" << r.label << "] seed=" << r.seed << '\n';
    out << "  records        " << r.records << '\n';
    if (r.clusters > 0) {
        out << "  clusters       " << r.clusters << '\n';
        out << "  loss_train     " << num(r.loss_train) << '\n';
    }
    if (r.command == "detect" || r.metrics) out << "  anomalies      " << r.anomalies << '\n';
    if (r.metrics) {
        const auto& m = *r.metrics;
        out << "  AUC            " << (m.auc ? num(*m.auc) : std::string("n/a (single class)")) << '\n';
        out << "  TPR / FPR      " << num(m.tpr) << " / " << num(m.fpr) << '\n';
        out << "  precision      " << num(m.precision) << '\n';
        out << "  recall         " << num(m.recall) << '\n';
        out << "  F1             " << num(m.f1) << '\n';
    }
    if (r.timing) {
        const auto& t = *r.timing;
        out << "  latency mean   " << num(t.mean_latency_us) << " us/record (p95 " << num(t.p95_latency_us)
            << ", std " << num(t.latency_std_us) << ")\n";
        out << "  throughput     " << num(t.records_per_s) << " records/s (std " << num(t.records_per_s_std)
            << "), " << num(t.bytes_per_s) << " bytes/s\n";
        out << "  run-to-run CV  " << num(t.cv) << " over " << t.runs << " warm runs\n";
    }
    out << "  wall time      " << num(r.wall_seconds) << " s\n";
}

BenchComparison compare(RunReport fda, RunReport gnn) {
    BenchComparison b{std::move(fda), std::move(gnn), 0.0, 0.0};
    if (b.fda.timing && b.gnn.timing) {
        if (b.gnn.timing->records_per_s > 0) b.throughput_ratio = b.fda.timing->records_per_s / b.gnn.timing->records_per_s;
        if (b.gnn.timing->mean_latency_us > 0) b.latency_ratio = b.fda.timing->mean_latency_us / b.gnn.timing->mean_latency_us;
    }
    return b;
}

void print_comparison(std::ostream& out, const BenchComparison& b) {
    print_summary(out, b.fda);
    print_summary(out, b.gnn);
    out << "throughput(fda)/throughput(gnn) = " << num(b.throughput_ratio) << '\n';
    out << "latency(fda)/latency(gnn)       = " << num(b.latency_ratio) << '\n';
}

RunReport from_variant(const pipeline::VariantResult& v, std::uint64_t seed, std::size_t records) {
    RunReport r;
    r.command = "ablate";
    r.label = v.variant.name();
    r.seed = seed;
    r.records = records;
    r.clusters = v.clusters;
    r.loss_train = v.loss_train;
    r.metrics = v.metrics;
    if (v.timing.runs > 0) r.timing = v.timing;
    if (v.metrics) r.anomalies = v.metrics->tp + v.metrics->fp;
    r.wall_seconds = v.train_seconds + v.detect_seconds;
    return r;
}

void write_ablation_csv(std::ostream& out, std::span<const pipeline::VariantResult> rows) {
    out << "id,variant,auc,tpr,fpr,f1,mean_latency_us,p95_latency_us,records_per_s,clusters\n";
    for (const auto& r : rows) {
        out << r.variant.id << ',' << r.variant.name() << ',';
        if (r.metrics) {
            out << opt_num(r.metrics->auc) << ',' << num(r.metrics->tpr) << ',' << num(r.metrics->fpr) << ','
                << num(r.metrics->f1) << ',';
        } else {
            out << ",,,,";
        }
        out << num(r.timing.mean_latency_us) << ',' << num(r.timing.p95_latency_us) << ','
            << num(r.timing.records_per_s) << ',' << r.clusters << '\n';
    }
}

void print_ablation(std::ostream& out, std::span<const pipeline::VariantResult> rows) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-3s %-22s %8s %8s %8s %16s %9s\n", "#", "variant", "AUC", "TPR", "FPR",
                  "time (us/record)", "clusters");
    out << buf;
    for (const auto& r : rows) {
        const double auc = r.metrics && r.metrics->auc ? *r.metrics->auc : -1.0;
        std::snprintf(buf, sizeof buf, "%-3d %-22s %8.4f %8.4f %8.4f %16.2f %9zu\n", r.variant.id,
                      r.variant.name().c_str(), auc, r.metrics ? r.metrics->tpr : 0.0,
                      r.metrics ? r.metrics->fpr : 0.0, r.timing.mean_latency_us, r.clusters);
        out << buf;
    }
}

} // namespace provscope::report
