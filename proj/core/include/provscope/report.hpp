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
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "provscope/detector.hpp"
#include "provscope/pipeline.hpp"

namespace provscope::report {

struct RunReport {
    std::string command;  // train, detect, bench, ablate
    std::string label;    // path or variant name
    std::uint64_t seed = 0;
    std::size_t records = 0;
    std::size_t anomalies = 0;
    std::size_t clusters = 0;
    double loss_train = 0.0;
    std::optional<detector::Metrics> metrics;
    std::optional<pipeline::Timing> timing;
    double wall_seconds = 0.0;
    std::string config_json;
};

// One header line, then one row per report. Latencies in microseconds.
void write_csv(std::ostream& out, std::span<const RunReport> reports);
// JSON array with the full config echo of every report.
void write_json(std::ostream& out, std::span<const RunReport> reports);
// Human-readable block for standard output.
void print_summary(std::ostream& out, const RunReport& r);

struct BenchComparison {
    RunReport fda;
    RunReport gnn;
    double throughput_ratio = 0.0;  // fda records/s over gnn records/s
    double latency_ratio = 0.0;     // fda mean latency over gnn mean latency
};
BenchComparison compare(RunReport fda, RunReport gnn);
void print_comparison(std::ostream& out, const BenchComparison& b);

RunReport from_variant(const pipeline::VariantResult& v, std::uint64_t seed, std::size_t records);

// id,variant,auc,tpr,fpr,f1,mean_latency_us,p95_latency_us,records_per_s,clusters
void write_ablation_csv(std::ostream& out, std::span<const pipeline::VariantResult> rows);
void print_ablation(std::ostream& out, std::span<const pipeline::VariantResult> rows);

} // namespace provscope::report
