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

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "provscope/encoder.hpp"
#include "provscope/error.hpp"
#include "provscope/rng.hpp"

namespace provscope::encoder {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Cumulative unigram^0.75 distribution for negative draws.
std::vector<double> negative_cdf(std::span<const std::vector<std::uint32_t>> sentences, std::size_t vocab_size) {
    std::vector<double> counts(vocab_size, 0.0);
    for (const auto& s : sentences) {
        for (auto w : s) counts[w] += 1.0;
    }
    std::vector<double> cdf(vocab_size);
    double total = 0.0;
    for (std::size_t i = 0; i < vocab_size; ++i) {
        total += std::pow(counts[i], 0.75);
        cdf[i] = total;
    }
    for (double& c : cdf) c /= total;
    return cdf;
}

std::uint32_t draw(const std::vector<double>& cdf, SplitMix64& rng) {
    const double u = rng.uniform();
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    return static_cast<std::uint32_t>(it - cdf.begin());
}

} // namespace

void SkipGramConfig::validate() const {
    if (dim == 0) throw ConfigError("skip-gram dimension must be >= 1");
    if (epochs == 0) throw ConfigError("skip-gram epochs must be >= 1");
    if (window == 0) throw ConfigError("skip-gram window must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("skip-gram learning rate must be > 0");
}

EmbeddingTable train_skipgram(std::span<const std::vector<std::uint32_t>> sentences, std::size_t vocab_size,
                              const SkipGramConfig& cfg) {
    cfg.validate();
    std::size_t tokens = 0;
    for (const auto& s : sentences) {
        for (auto w : s) {
            if (w >= vocab_size) throw ConfigError("skip-gram token id out of range");
        }
        tokens += s.size();
    }
    if (tokens == 0 || vocab_size == 0) throw ConfigError("skip-gram corpus is empty");

    const std::size_t dim = cfg.dim;
    SplitMix64 rng(derive_seed(cfg.seed, 0x5347));  // "SG"

    EmbeddingTable input{dim, std::vector<double>(vocab_size * dim)};
    for (double& v : input.values) v = (rng.uniform() - 0.5) / static_cast<double>(dim);
    std::vector<double> output(vocab_size * dim, 0.0);
    std::vector<double> grad(dim);

    const auto cdf = negative_cdf(sentences, vocab_size);
    const double total = static_cast<double>(tokens) * cfg.epochs;
    double processed = 0.0;

    auto update = [&](std::uint32_t context, std::uint32_t target, double label, double lr) {
        double* in = &input.values[static_cast<std::size_t>(context) * dim];
        double* out = &output[static_cast<std::size_t>(target) * dim];
        double dot = 0.0;
        for (std::size_t k = 0; k < dim; ++k) dot += in[k] * out[k];
        const double g = (label - sigmoid(dot)) * lr;
        for (std::size_t k = 0; k < dim; ++k) {
            grad[k] += g * out[k];
            out[k] += g * in[k];
        }
    };

    for (std::uint32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (const auto& sentence : sentences) {
            const std::size_t len = sentence.size();
            for (std::size_t pos = 0; pos < len; ++pos) {
                const double lr = cfg.learning_rate * std::max(1e-4, 1.0 - processed / (total + 1.0));
                processed += 1.0;
                const std::uint32_t center = sentence[pos];
                const std::size_t reach = cfg.window - rng.below(cfg.window);
                const std::size_t lo = pos >= reach ? pos - reach : 0;
                const std::size_t hi = std::min(len - 1, pos + reach);
                for (std::size_t c = lo; c <= hi; ++c) {
                    if (c == pos) continue;
                    const std::uint32_t context = sentence[c];
                    std::fill(grad.begin(), grad.end(), 0.0);
                    update(context, center, 1.0, lr);
                    for (std::uint32_t n = 0; n < cfg.negatives; ++n) {
                        const std::uint32_t neg = draw(cdf, rng);
                        if (neg == center) continue;
                        update(context, neg, 0.0, lr);
                    }
                    double* in = &input.values[static_cast<std::size_t>(context) * dim];
                    for (std::size_t k = 0; k < dim; ++k) in[k] += grad[k];
                }
            }
        }
    }
    return input;
}

std::map<graph::NodeId, std::vector<double>> network_embed(std::span<const sampler::NeighborSample> walks,
                                                           const SkipGramConfig& cfg) {
    if (walks.empty()) throw ConfigError("network embedding needs a non-empty walk corpus");

    std::map<graph::NodeId, std::uint32_t> vocab;
    for (const auto& w : walks) {
        vocab.emplace(w.target, 0);
        for (auto s : w.samples) vocab.emplace(s, 0);
    }
    std::uint32_t next = 0;
    for (auto& [node, id] : vocab) id = next++;

    std::vector<std::vector<std::uint32_t>> sentences;
    sentences.reserve(walks.size());
    for (const auto& w : walks) {
        std::vector<std::uint32_t> s;
        s.reserve(w.samples.size() + 1);
        s.push_back(vocab.at(w.target));
        for (auto n : w.samples) s.push_back(vocab.at(n));
        sentences.push_back(std::move(s));
    }

    const auto table = train_skipgram(sentences, vocab.size(), cfg);
    std::map<graph::NodeId, std::vector<double>> out;
    for (const auto& [node, id] : vocab) {
        const auto row = table.row(id);
        out.emplace(node, std::vector<double>(row.begin(), row.end()));
    }
    return out;
}

} // namespace provscope::encoder
