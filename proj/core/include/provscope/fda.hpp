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

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace provscope::fda {

struct FdaConfig {
    std::uint32_t window = 40;  // DFT length, equal to the number of sampled neighbors
    double log_constant = 1.0;  // C in ln(r + 1) / C

    // Throws ConfigError.
    void validate() const;
};

// Retained half spectrum: floor(window / 2) + 1 bins.
constexpr std::size_t spectrum_length(std::size_t window) noexcept { return window / 2 + 1; }

constexpr std::size_t feature_length(std::size_t fields, std::size_t window) noexcept {
    return fields * spectrum_length(window);
}

// Full DFT F_k = sum_n x_n exp(-2 pi i n k / N), k = 0..N-1 (0-based form of
// the 1-based definition). Throws ConfigError when x.size() < 2.
std::vector<std::complex<double>> dft_column(std::span<const double> x);

// Window rows (sampled neighbors in walk order) by field columns, stored
// column-major so each column is contiguous.
class SampleMatrix {
public:
    SampleMatrix() = default;
    SampleMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& at(std::size_t row, std::size_t col) { return values_[col * rows_ + row]; }
    double at(std::size_t row, std::size_t col) const { return values_[col * rows_ + row]; }

    std::span<const double> column(std::size_t col) const { return {values_.data() + col * rows_, rows_}; }
    std::span<double> column(std::size_t col) { return {values_.data() + col * rows_, rows_}; }

    void resize(std::size_t rows, std::size_t cols) {
        rows_ = rows;
        cols_ = cols;
        values_.assign(rows * cols, 0.0);
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

// Per column: r_k = a_k^2 + b_k^2, R_k = ln(r_k + 1) / C, keep the first
// spectrum_length(window) bins. Columns are concatenated, so the output is
// cols contiguous blocks of spectrum_length entries each.
//
// Throws ConfigError when the matrix does not match cfg, DataError naming the
// column when an entry is not finite.
std::vector<double> to_feature(const SampleMatrix& samples, const FdaConfig& cfg);

// Reusable transform with precomputed twiddles. extract() performs no
// allocation, which keeps the per-node hot path allocation-free.
class FeatureExtractor {
public:
    FeatureExtractor(FdaConfig cfg, std::size_t fields);

    std::size_t fields() const noexcept { return fields_; }
    std::size_t output_length() const noexcept { return feature_length(fields_, cfg_.window); }
    const FdaConfig& config() const noexcept { return cfg_; }

    void extract(const SampleMatrix& samples, std::span<double> out) const;

private:
    FdaConfig cfg_;
    std::size_t fields_;
    std::vector<double> cos_;
    std::vector<double> sin_;
};

} // namespace provscope::fda
