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

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "provscope/ingest.hpp"
#include "provscope/sampler.hpp"

namespace provscope::encoder {

using ingest::LogRecord;

// Tokens per log: one per canonical field.
inline constexpr std::size_t kTokenCount = ingest::kCanonicalFieldCount;

// Stands in for an empty field. Encodes to the zero vector with weight 0.
inline constexpr std::string_view kEmptyToken = "<empty>";

struct TokenVector {
    std::array<std::string, kTokenCount> tokens;

    // Unambiguous join of the tokens, used to intern identical contents.
    std::string key() const;

    friend bool operator==(const TokenVector&, const TokenVector&) = default;
};

// [event_id, process_name, base_file_name, logon_type, parent_process_name],
// lowercased, empty fields replaced by kEmptyToken.
TokenVector tokenize(const LogRecord& rec);

// Hashed bag of character n-grams, a fixed stand-in for a subword model.
// The token is wrapped as "<token>", every 3-, 4- and 5-gram is hashed with
// FNV-1a 64, mixed with the seed, and adds +1 or -1 (top hash bit) to bucket
// hash % dim. The sum is divided by the n-gram count. kEmptyToken maps to 0.
std::vector<double> word_vec(std::string_view token, std::size_t dim, std::uint64_t seed);
void word_vec_into(std::string_view token, std::uint64_t seed, std::span<double> out);

// TF-IDF over single-log documents.
//   tf(t, d)  = occurrences of t in d / kTokenCount
//   idf(t)    = ln((1 + doc_count) / (1 + doc_freq(t))) + 1
// kEmptyToken never counts and always weighs 0.
class TfIdfModel {
public:
    TfIdfModel() = default;
    TfIdfModel(std::uint64_t doc_count, std::map<std::string, std::uint64_t> doc_freq);

    std::uint64_t doc_count() const noexcept { return doc_count_; }
    std::uint64_t doc_freq(std::string_view token) const;
    const std::map<std::string, std::uint64_t, std::less<>>& table() const noexcept { return doc_freq_; }

    double idf(std::string_view token) const;
    std::array<double, kTokenCount> weights(const TokenVector& tv) const;

    friend bool operator==(const TfIdfModel&, const TfIdfModel&) = default;

private:
    std::uint64_t doc_count_ = 0;
    std::map<std::string, std::uint64_t, std::less<>> doc_freq_;
};

// Throws ConfigError on an empty corpus.
TfIdfModel fit_tfidf(std::span<const TokenVector> corpus);

// X = (1/n) * sum_i w_i * u_i over the n token word vectors.
std::vector<double> content_embed(const TokenVector& tv, const TfIdfModel& tfidf, std::size_t dim,
                                  std::uint64_t seed);

// Fixed unit-norm projection direction r used by field_scalars.
std::vector<double> projection_vector(std::size_t dim, std::uint64_t seed);

// Per-field scalar w_i * <u_i, r>; the L-vector consumed by frequency analysis.
std::array<double, kTokenCount> field_scalars(const TokenVector& tv, const TfIdfModel& tfidf, std::size_t dim,
                                              std::uint64_t seed);

struct SkipGramConfig {
    std::size_t dim = 100;
    std::uint32_t epochs = 5;
    double learning_rate = 0.025;
    std::uint32_t negatives = 5;
    std::uint32_t window = 5;
    std::uint64_t seed = 42;

    void validate() const;
};

// Row-major vocab x dim table.
struct EmbeddingTable {
    std::size_t dim = 0;
    std::vector<double> values;

    std::size_t rows() const noexcept { return dim == 0 ? 0 : values.size() / dim; }
    std::span<const double> row(std::size_t i) const { return {values.data() + i * dim, dim}; }
};

// Skip-gram with negative sampling over integer sentences (ids < vocab_size).
// Single-threaded and fully determined by cfg.seed.
EmbeddingTable train_skipgram(std::span<const std::vector<std::uint32_t>> sentences, std::size_t vocab_size,
                              const SkipGramConfig& cfg);

// Network embedding of walk corpora. Each walk contributes the sentence
// [target, samples...]. Every node in the corpus receives a vector.
std::map<graph::NodeId, std::vector<double>> network_embed(std::span<const sampler::NeighborSample> walks,
                                                           const SkipGramConfig& cfg);

} // namespace provscope::encoder
