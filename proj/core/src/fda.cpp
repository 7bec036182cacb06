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

#include "provscope/fda.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "provscope/error.hpp"

namespace provscope::fda {

namespace {

void twiddles(std::size_t n, std::vector<double>& cos_table, std::vector<double>& sin_table) {
    cos_table.resize(n);
    sin_table.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double angle = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
        cos_table[j] = std::cos(angle);
        sin_table[j] = std::sin(angle);
    }
}

} // namespace

void FdaConfig::validate() const {
    if (window < 2) throw ConfigError("DFT window must be >= 2");
    if (!(log_constant > 0.0) || !std::isfinite(log_constant)) throw ConfigError("log constant C must be > 0");
}

std::vector<std::complex<double>> dft_column(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n < 2) throw ConfigError("DFT length must be >= 2");
    std::vector<double> c, s;
    twiddles(n, c, s);

    std::vector<std::complex<double>> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        double re = 0.0;
        double im = 0.0;
        std::size_t idx = 0;  // (t * k) mod n
        for (std::size_t t = 0; t < n; ++t) {
            re += x[t] * c[idx];
            im -= x[t] * s[idx];
            idx += k;
            if (idx >= n) idx %= n;
        }
        out[k] = {re, im};
    }
    return out;
}

FeatureExtractor::FeatureExtractor(FdaConfig cfg, std::size_t fields) : cfg_(cfg), fields_(fields) {
    cfg_.validate();
    if (fields_ == 0) throw ConfigError("feature extractor needs at least one field");
    twiddles(cfg_.window, cos_, sin_);
}

void FeatureExtractor::extract(const SampleMatrix& samples, std::span<double> out) const {
    const std::size_t n = cfg_.window;
    const std::size_t bins = spectrum_length(n);
    if (samples.rows() != n || samples.cols() != fields_) {
        throw ConfigError("sample matrix is " + std::to_string(samples.rows()) + "x" +
                          std::to_string(samples.cols()) + ", expected " + std::to_string(n) + "x" +
                          std::to_string(fields_));
    }
    if (out.size() != output_length()) throw ConfigError("feature buffer has the wrong length");

    const double inv_c = 1.0 / cfg_.log_constant;
    for (std::size_t col = 0; col < fields_; ++col) {
        const auto x = samples.column(col);
        for (double v : x) {
            if (!std::isfinite(v)) throw DataError("non-finite sample value in column " + std::to_string(col));
        }
        double* block = out.data() + col * bins;
        for (std::size_t k = 0; k < bins; ++k) {
            double a = 0.0;
            double b = 0.0;
            std::size_t idx = 0;
            for (std::size_t t = 0; t < n; ++t) {
                a += x[t] * cos_[idx];
                b -= x[t] * sin_[idx];
                idx += k;
                if (idx >= n) idx -= n;
            }
            const double r = a * a + b * b;
            block[k] = std::log1p(r) * inv_c;
        }
    }
}

std::vector<double> to_feature(const SampleMatrix& samples, const FdaConfig& cfg) {
    FeatureExtractor extractor(cfg, samples.cols());
    std::vector<double> out(extractor.output_length());
    extractor.extract(samples, out);
    return out;
}

} // namespace provscope::fda
