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
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace provscope::detector {

// Dense row-major set of equally sized vectors.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    FeatureMatrix(std::size_t rows, std::size_t dim) : rows_(rows), dim_(dim), values_(rows * dim, 0.0) {}
    explicit FeatureMatrix(const std::vector<std::vector<double>>& rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t dim() const noexcept { return dim_; }
    bool empty() const noexcept { return rows_ == 0; }

    std::span<const double> row(std::size_t i) const { return {values_.data() + i * dim_, dim_}; }
    std::span<double> row(std::size_t i) { return {values_.data() + i * dim_, dim_}; }

    void append(std::span<const double> v);

private:
    std::size_t rows_ = 0;
    std::size_t dim_ = 0;
    std::vector<double> values_;
};

enum class Clusterer : std::uint8_t { Statistical = 0, KMeans = 1 };

std::string_view to_string(Clusterer c) noexcept;
Clusterer clusterer_from_string(std::string_view name);

struct ClusterModel {
    Clusterer kind = Clusterer::Statistical;
    std::vector<std::vector<double>> centroids;
    std::vector<std::uint64_t> member_counts;
    double delta = 0.72;
    double tau = 1.0;
    double loss_train = 0.0;
    bool normalize = false;  // unit-normalize vectors before clustering and scoring

    std::size_t dim() const noexcept { return centroids.empty() ? 0 : centroids.front().size(); }
    std::size_t cluster_count() const noexcept { return centroids.size(); }
    double threshold() const noexcept { return tau * loss_train; }

    friend bool operator==(const ClusterModel&, const ClusterModel&) = default;
};

struct DetectionResult {
    double score = 0.0;  // min squared L2 distance to a centroid
    std::optional<std::size_t> assigned_cluster;
    bool is_anomaly = false;

    friend bool operator==(const DetectionResult&, const DetectionResult&) = default;
};

// Cosine similarity; 0 when either vector is zero.
double cosine_similarity(std::span<const double> a, std::span<const double> b) noexcept;
double squared_distance(std::span<const double> a, std::span<const double> b) noexcept;

// Single-pass leader clustering in corpus order. Each vector joins the
// centroid with the highest cosine similarity if that similarity is >= delta
// (the centroid becomes the running mean of its members), otherwise it opens
// a new cluster. loss_train is the mean squared distance of every training
// vector to its closest final centroid.
//
// Throws ConfigError on an empty corpus or delta outside (0, 1).
ClusterModel train(const FeatureMatrix& vectors, double delta, double tau, bool normalize = false);

// Lloyd's k-means with k-means++ seeding from SplitMix64(seed). Used by the
// ablation variants. loss_train is defined exactly as for train().
ClusterModel train_kmeans(const FeatureMatrix& vectors, std::size_t k, double tau, std::uint64_t seed,
                          bool normalize = false, std::size_t max_iterations = 50);

// Mean of the minimum squared distances to the model's centroids.
double mean_min_distance(const ClusterModel& model, const FeatureMatrix& vectors);

// Throws ConfigError on a dimension mismatch.
DetectionResult score(const ClusterModel& model, std::span<const double> v);

struct Metrics {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    double tpr = 0.0;
    double fpr = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double accuracy = 0.0;
    std::optional<double> auc;  // undefined for single-class input
};

// Area under the ROC curve via the rank-sum (Mann-Whitney) statistic with
// average ranks for ties. Higher scores mean "more malicious".
std::optional<double> roc_auc(std::span<const double> scores, std::span<const std::uint8_t> malicious);

// Point metrics at score > threshold, plus AUC.
Metrics evaluate_scores(std::span<const double> scores, std::span<const std::uint8_t> malicious, double threshold);

Metrics evaluate(const ClusterModel& model, const FeatureMatrix& vectors, std::span<const std::uint8_t> malicious);

} // namespace provscope::detector
