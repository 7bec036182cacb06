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

#include "provscope/encoder.hpp"

#include <algorithm>
#include <cmath>

#include "provscope/error.hpp"
#include "provscope/rng.hpp"

namespace provscope::encoder {

namespace {

constexpr std::uint64_t kFnvOffset = 0xCBF29CE484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001B3ULL;
constexpr std::uint64_t kProjectionStream = 0x50524F4A;  // "PROJ"

std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = kFnvOffset;
    for (unsigned char c : s) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

std::uint64_t finalize(std::uint64_t h) noexcept {
    h = (h ^ (h >> 30)) * 0xBF58476D1CE4E5B9ULL;
    h = (h ^ (h >> 27)) * 0x94D049BB133111EBULL;
    return h ^ (h >> 31);
}

std::string lowered(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

} // namespace

std::string TokenVector::key() const {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i != 0) out.push_back('\x1f');
        out += tokens[i];
    }
    return out;
}

TokenVector tokenize(const LogRecord& rec) {
    TokenVector tv;
    const auto fields = rec.canonical_fields();
    for (std::size_t i = 0; i < kTokenCount; ++i) {
        tv.tokens[i] = fields[i].empty() ? std::string(kEmptyToken) : lowered(fields[i]);
    }
    return tv;
}

void word_vec_into(std::string_view token, std::uint64_t seed, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    if (token == kEmptyToken || token.empty() || out.empty()) return;

    std::string padded;
    padded.reserve(token.size() + 2);
    padded.push_back('<');
    padded.append(token);
    padded.push_back('>');

    const std::uint64_t salt = finalize(seed ^ 0x9E3779B97F4A7C15ULL);
    std::size_t count = 0;
    for (std::size_t n = 3; n <= 5; ++n) {
        if (padded.size() < n) break;
        for (std::size_t i = 0; i + n <= padded.size(); ++i) {
            const std::uint64_t h = finalize(fnv1a(std::string_view(padded).substr(i, n)) ^ salt);
            out[h % out.size()] += (h >> 63) != 0 ? -1.0 : 1.0;
            ++count;
        }
    }
    const double scale = 1.0 / static_cast<double>(count);
    for (double& x : out) x *= scale;
}

std::vector<double> word_vec(std::string_view token, std::size_t dim, std::uint64_t seed) {
    if (dim == 0) throw ConfigError("embedding dimension must be >= 1");
    std::vector<double> out(dim);
    word_vec_into(token, seed, out);
    return out;
}

TfIdfModel::TfIdfModel(std::uint64_t doc_count, std::map<std::string, std::uint64_t> doc_freq)
    : doc_count_(doc_count), doc_freq_(doc_freq.begin(), doc_freq.end()) {
    for (const auto& [token, df] : doc_freq_) {
        if (df > doc_count_) throw DataError("document frequency of '" + token + "' exceeds document count");
    }
}

std::uint64_t TfIdfModel::doc_freq(std::string_view token) const {
    auto it = doc_freq_.find(token);
    return it == doc_freq_.end() ? 0 : it->second;
}

double TfIdfModel::idf(std::string_view token) const {
    return std::log((1.0 + static_cast<double>(doc_count_)) / (1.0 + static_cast<double>(doc_freq(token)))) + 1.0;
}

std::array<double, kTokenCount> TfIdfModel::weights(const TokenVector& tv) const {
    std::array<double, kTokenCount> w{};
    for (std::size_t i = 0; i < kTokenCount; ++i) {
        const auto& t = tv.tokens[i];
        if (t == kEmptyToken) continue;
        const auto occurrences = std::count(tv.tokens.begin(), tv.tokens.end(), t);
        const double tf = static_cast<double>(occurrences) / static_cast<double>(kTokenCount);
        w[i] = tf * idf(t);
    }
    return w;
}

TfIdfModel fit_tfidf(std::span<const TokenVector> corpus) {
    if (corpus.empty()) throw ConfigError("cannot fit TF-IDF on an empty corpus");
    std::map<std::string, std::uint64_t> df;
    for (const auto& tv : corpus) {
        std::array<std::string_view, kTokenCount> seen{};
        std::size_t n_seen = 0;
        for (const auto& t : tv.tokens) {
            if (t == kEmptyToken) continue;
            if (std::find(seen.begin(), seen.begin() + n_seen, t) != seen.begin() + n_seen) continue;
            seen[n_seen++] = t;
            ++df[t];
        }
    }
    return TfIdfModel(corpus.size(), std::move(df));
}

std::vector<double> content_embed(const TokenVector& tv, const TfIdfModel& tfidf, std::size_t dim,
                                  std::uint64_t seed) {
    std::vector<double> x(dim, 0.0);
    std::vector<double> u(dim);
    const auto w = tfidf.weights(tv);
    for (std::size_t i = 0; i < kTokenCount; ++i) {
        if (w[i] == 0.0) continue;
        word_vec_into(tv.tokens[i], seed, u);
        for (std::size_t j = 0; j < dim; ++j) x[j] += w[i] * u[j];
    }
    const double inv_n = 1.0 / static_cast<double>(kTokenCount);
    for (double& v : x) v *= inv_n;
    return x;
}

std::vector<double> projection_vector(std::size_t dim, std::uint64_t seed) {
    if (dim == 0) throw ConfigError("embedding dimension must be >= 1");
    SplitMix64 rng(derive_seed(seed, kProjectionStream));
    std::vector<double> r(dim);
    double norm2 = 0.0;
    while (norm2 == 0.0) {
        for (double& v : r) {
            v = 2.0 * rng.uniform() - 1.0;
            norm2 += v * v;
        }
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& v : r) v *= inv;
    return r;
}

std::array<double, kTokenCount> field_scalars(const TokenVector& tv, const TfIdfModel& tfidf, std::size_t dim,
                                              std::uint64_t seed) {
    const auto r = projection_vector(dim, seed);
    const auto w = tfidf.weights(tv);
    std::vector<double> u(dim);
    std::array<double, kTokenCount> s{};
    for (std::size_t i = 0; i < kTokenCount; ++i) {
        if (w[i] == 0.0) continue;
        word_vec_into(tv.tokens[i], seed, u);
        double dot = 0.0;
        for (std::size_t j = 0; j < dim; ++j) dot += u[j] * r[j];
        s[i] = w[i] * dot;
    }
    return s;
}

} // namespace provscope::encoder
