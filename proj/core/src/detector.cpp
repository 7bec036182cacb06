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

#include "provscope/detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "provscope/error.hpp"
#include "provscope/rng.hpp"

namespace provscope::detector {

namespace {

double dot(std::span<const double> a, std::span<const double> b) noexcept {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double norm(std::span<const double> a) noexcept { return std::sqrt(dot(a, a)); }

// Copy of v, unit-normalized when requested (zero stays zero).
void prepare(std::span<const double> v, bool normalize, std::vector<double>& out) {
    out.assign(v.begin(), v.end());
    if (!normalize) return;
    const double n = norm(out);
    if (n == 0.0) return;
    for (double& x : out) x /= n;
}

void check_corpus(const FeatureMatrix& vectors) {
    if (vectors.empty() || vectors.dim() == 0) throw ConfigError("cannot cluster an empty corpus");
}

struct Nearest {
    std::size_t index = 0;
    double distance = std::numeric_limits<double>::infinity();
};

Nearest nearest(const std::vector<std::vector<double>>& centroids, std::span<const double> v) {
    Nearest best;
    for (std::size_t c = 0; c < centroids.size(); ++c) {
        const double d = squared_distance(centroids[c], v);
        if (d < best.distance) best = {c, d};
    }
    return best;
}

double compute_loss(const ClusterModel& model, const FeatureMatrix& vectors) {
    std::vector<double> buf;
    double total = 0.0;
    for (std::size_t i = 0; i < vectors.rows(); ++i) {
        prepare(vectors.row(i), model.normalize, buf);
        total += nearest(model.centroids, buf).distance;
    }
    return total / static_cast<double>(vectors.rows());
}

} // namespace

FeatureMatrix::FeatureMatrix(const std::vector<std::vector<double>>& rows) {
    for (const auto& r : rows) append(r);
}

void FeatureMatrix::append(std::span<const double> v) {
    if (rows_ == 0 && values_.empty()) dim_ = v.size();
    if (v.size() != dim_) throw ConfigError("vector dimension " + std::to_string(v.size()) + " differs from " +
                                            std::to_string(dim_));
    values_.insert(values_.end(), v.begin(), v.end());
    ++rows_;
}

std::string_view to_string(Clusterer c) noexcept {
    return c == Clusterer::KMeans ? "kmeans" : "statistical";
}

Clusterer clusterer_from_string(std::string_view name) {
    if (name == "statistical") return Clusterer::Statistical;
    if (name == "kmeans") return Clusterer::KMeans;
    throw ConfigError("unknown clusterer '" + std::string(name) + "'");
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) noexcept {
    const double na = norm(a);
    const double nb = norm(b);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot(a, b) / (na * nb);
}

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

ClusterModel train(const FeatureMatrix& vectors, double delta, double tau, bool normalize) {
    check_corpus(vectors);
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("similarity threshold delta must lie in (0, 1)");
    if (!(tau > 0.0)) throw ConfigError("tolerance multiplier tau must be > 0");

    ClusterModel model;
    model.kind = Clusterer::Statistical;
    model.delta = delta;
    model.tau = tau;
    model.normalize = normalize;

    std::vector<double> norms;  // cached centroid norms
    std::vector<double> v;
    for (std::size_t i = 0; i < vectors.rows(); ++i) {
        prepare(vectors.row(i), normalize, v);
        const double nv = norm(v);

        std::size_t best = 0;
        double best_sim = -std::numeric_limits<double>::infinity();
        if (nv > 0.0) {
            for (std::size_t c = 0; c < model.centroids.size(); ++c) {
                const double sim = norms[c] == 0.0 ? 0.0 : dot(model.centroids[c], v) / (norms[c] * nv);
                if (sim > best_sim) {
                    best_sim = sim;
                    best = c;
                }
            }
        }

        if (!model.centroids.empty() && nv > 0.0 && best_sim >= delta) {
            auto& centroid = model.centroids[best];
            const double count = static_cast<double>(++model.member_counts[best]);
            for (std::size_t j = 0; j < v.size(); ++j) centroid[j] += (v[j] - centroid[j]) / count;
            norms[best] = norm(centroid);
        } else {
            model.centroids.push_back(v);
            model.member_counts.push_back(1);
            norms.push_back(nv);
        }
    }
    model.loss_train = compute_loss(model, vectors);
    return model;
}

ClusterModel train_kmeans(const FeatureMatrix& vectors, std::size_t k, double tau, std::uint64_t seed,
                          bool normalize, std::size_t max_iterations) {
    check_corpus(vectors);
    if (k == 0) throw ConfigError("k-means needs k >= 1");
    if (!(tau > 0.0)) throw ConfigError("tolerance multiplier tau must be > 0");

    const std::size_t n = vectors.rows();
    const std::size_t dim = vectors.dim();
    FeatureMatrix data(n, dim);
    std::vector<double> buf;
    for (std::size_t i = 0; i < n; ++i) {
        prepare(vectors.row(i), normalize, buf);
        std::copy(buf.begin(), buf.end(), data.row(i).begin());
    }
    k = std::min(k, n);

    // k-means++ seeding.
    SplitMix64 rng(derive_seed(seed, 0x4B4D));  // "KM"
    std::vector<std::vector<double>> centroids;
    const auto first = data.row(rng.below(n));
    centroids.emplace_back(first.begin(), first.end());
    std::vector<double> d2(n);
    while (centroids.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = nearest(centroids, data.row(i)).distance;
            total += d2[i];
        }
        std::size_t pick = rng.below(n);
        if (total > 0.0) {
            double target = rng.uniform() * total;
            for (std::size_t i = 0; i < n; ++i) {
                target -= d2[i];
                if (target <= 0.0) {
                    pick = i;
                    break;
                }
            }
        }
        const auto row = data.row(pick);
        centroids.emplace_back(row.begin(), row.end());
    }

    std::vector<std::size_t> assignment(n, k);
    std::vector<std::uint64_t> counts(k, 0);
    for (std::size_t iter = 0; iter < max_iterations; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = nearest(centroids, data.row(i)).index;
            if (c != assignment[i]) {
                assignment[i] = c;
                changed = true;
            }
        }
        if (!changed) break;
        std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto row = data.row(i);
            auto& s = sums[assignment[i]];
            for (std::size_t j = 0; j < dim; ++j) s[j] += row[j];
            ++counts[assignment[i]];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;  // keep an empty cluster's previous centroid
            for (std::size_t j = 0; j < dim; ++j) centroids[c][j] = sums[c][j] / static_cast<double>(counts[c]);
        }
    }

    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) ++counts[nearest(centroids, data.row(i)).index];

    ClusterModel model;
    model.kind = Clusterer::KMeans;
    model.tau = tau;
    model.delta = 0.0;
    model.normalize = normalize;
    for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] == 0) continue;
        model.centroids.push_back(std::move(centroids[c]));
        model.member_counts.push_back(counts[c]);
    }
    model.loss_train = compute_loss(model, vectors);
    return model;
}

double mean_min_distance(const ClusterModel& model, const FeatureMatrix& vectors) {
    check_corpus(vectors);
    return compute_loss(model, vectors);
}

DetectionResult score(const ClusterModel& model, std::span<const double> v) {
    if (model.centroids.empty()) throw ConfigError("cluster model has no centroids");
    if (v.size() != model.dim()) {
        throw ConfigError("vector dimension " + std::to_string(v.size()) + " does not match model dimension " +
                          std::to_string(model.dim()));
    }
    std::vector<double> buf;
    prepare(v, model.normalize, buf);
    const Nearest best = nearest(model.centroids, buf);
    return {best.distance, best.index, best.distance > model.threshold()};
}

std::optional<double> roc_auc(std::span<const double> scores, std::span<const std::uint8_t> malicious) {
    if (scores.size() != malicious.size()) throw ConfigError("scores and labels differ in length");
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double positive_rank_sum = 0.0;
    std::size_t positives = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double avg_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t t = i; t <= j; ++t) {
            if (malicious[order[t]]) {
                positive_rank_sum += avg_rank;
                ++positives;
            }
        }
        i = j + 1;
    }
    const std::size_t negatives = n - positives;
    if (positives == 0 || negatives == 0) return std::nullopt;
    const double p = static_cast<double>(positives);
    const double u = positive_rank_sum - p * (p + 1.0) / 2.0;
    return u / (p * static_cast<double>(negatives));
}

Metrics evaluate_scores(std::span<const double> scores, std::span<const std::uint8_t> malicious, double threshold) {
    if (scores.size() != malicious.size()) throw ConfigError("scores and labels differ in length");
    Metrics m;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool flagged = scores[i] > threshold;
        if (malicious[i]) {
            flagged ? ++m.tp : ++m.fn;
        } else {
            flagged ? ++m.fp : ++m.tn;
        }
    }
    auto ratio = [](std::size_t a, std::size_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b); };
    m.tpr = ratio(m.tp, m.tp + m.fn);
    m.fpr = ratio(m.fp, m.fp + m.tn);
    m.precision = ratio(m.tp, m.tp + m.fp);
    m.recall = m.tpr;
    m.f1 = (m.precision + m.recall) == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
    m.accuracy = ratio(m.tp + m.tn, scores.size());
    m.auc = roc_auc(scores, malicious);
    return m;
}

Metrics evaluate(const ClusterModel& model, const FeatureMatrix& vectors, std::span<const std::uint8_t> malicious) {
    std::vector<double> scores(vectors.rows());
    for (std::size_t i = 0; i < vectors.rows(); ++i) scores[i] = score(model, vectors.row(i)).score;
    return evaluate_scores(scores, malicious, model.threshold());
}

} // namespace provscope::detector
