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

#include "provscope/gnn_embed.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <string>

#include "provscope/error.hpp"
#include "provscope/rng.hpp"

namespace provscope::gnn {

namespace {

// exp for float with Cody-Waite reduction and a degree-6 polynomial
// (relative error below 2e-7). Branch-free so gate loops vectorize.
inline float exp_approx(float x) {
    x = x < -87.0f ? -87.0f : x;
    x = x > 88.0f ? 88.0f : x;
    const float shifted = x * 1.44269504088896341f + 12582912.0f;  // round to nearest via 1.5 * 2^23
    const float n = shifted - 12582912.0f;
    float r = x - n * 0.693359375f;
    r = r + n * 2.12194440e-4f;
    float p = 1.9875691500e-4f;
    p = p * r + 1.3981999507e-3f;
    p = p * r + 8.3334519073e-3f;
    p = p * r + 4.1665795894e-2f;
    p = p * r + 1.6666665459e-1f;
    p = p * r + 5.0000001201e-1f;
    p = p * r * r + r + 1.0f;
    const auto e = static_cast<std::int32_t>(n) + 127;
    return p * std::bit_cast<float>(static_cast<std::uint32_t>(e) << 23);
}

inline float sigmoid_approx(float x) { return 1.0f / (1.0f + exp_approx(-x)); }

inline float tanh_approx(float x) { return 2.0f / (1.0f + exp_approx(-2.0f * x)) - 1.0f; }

// One LSTM update from the gate pre-activations z (i, f, g, o blocks).
// z is overwritten with the activated gates.
void lstm_update(float* __restrict z, float* __restrict c, float* __restrict h, std::size_t hid) {
    for (std::size_t i = 0; i < 2 * hid; ++i) z[i] = sigmoid_approx(z[i]);
    for (std::size_t i = 2 * hid; i < 3 * hid; ++i) z[i] = tanh_approx(z[i]);
    for (std::size_t i = 3 * hid; i < 4 * hid; ++i) z[i] = sigmoid_approx(z[i]);
    for (std::size_t i = 0; i < hid; ++i) c[i] = z[hid + i] * c[i] + z[i] * z[2 * hid + i];
    for (std::size_t i = 0; i < hid; ++i) h[i] = z[3 * hid + i] * tanh_approx(c[i]);
}

void fill_uniform(std::vector<float>& v, SplitMix64& rng, double scale) {
    for (float& x : v) x = static_cast<float>((2.0 * rng.uniform() - 1.0) * scale);
}

// y += M x for column-major M (rows x cols).
void gemv_add(const float* __restrict m, std::size_t rows, std::size_t cols, const float* __restrict x,
              float* __restrict y) {
    for (std::size_t j = 0; j < cols; ++j) {
        const float xj = x[j];
        const float* col = m + j * rows;
        for (std::size_t i = 0; i < rows; ++i) y[i] += col[i] * xj;
    }
}

LstmCell make_cell(std::size_t input, std::size_t hidden, const GnnConfig& cfg, SplitMix64& rng) {
    LstmCell cell;
    cell.input = input;
    cell.hidden = hidden;
    cell.w_input.resize(4 * hidden * input);
    fill_uniform(cell.w_input, rng, cfg.input_scale / std::sqrt(static_cast<double>(input)));

    // Each gate's h x h block is scaled to the target spectral norm, which
    // bounds its spectral radius.
    cell.w_recurrent.assign(4 * hidden * hidden, 0.0f);
    std::vector<float> block(hidden * hidden);
    for (std::size_t gate = 0; gate < 4; ++gate) {
        fill_uniform(block, rng, 1.0);
        const double norm = spectral_norm(block, hidden, hidden);
        const double scale = norm > 0.0 ? cfg.recurrent_radius / (norm * 1.001) : 0.0;
        for (std::size_t j = 0; j < hidden; ++j) {
            for (std::size_t i = 0; i < hidden; ++i) {
                cell.w_recurrent[j * 4 * hidden + gate * hidden + i] =
                    static_cast<float>(block[j * hidden + i] * scale);
            }
        }
    }
    cell.bias.assign(4 * hidden, 0.0f);
    std::fill(cell.bias.begin() + hidden, cell.bias.begin() + 2 * hidden, 1.0f);
    return cell;
}

} // namespace

void GnnConfig::validate() const {
    if (hidden.empty()) throw ConfigError("aggregator needs at least one hidden layer");
    for (auto h : hidden) {
        if (h == 0) throw ConfigError("hidden layer size must be >= 1");
    }
    if (output_dim == 0) throw ConfigError("aggregator output dimension must be >= 1");
    if (!(recurrent_radius > 0.0 && recurrent_radius < 1.0)) throw ConfigError("recurrent radius must lie in (0, 1)");
    if (!(input_scale > 0.0)) throw ConfigError("input scale must be > 0");
}

double spectral_norm(std::span<const float> m, std::size_t rows, std::size_t cols) {
    std::vector<double> v(cols, 1.0 / std::sqrt(static_cast<double>(cols)));
    std::vector<double> u(rows);
    double sigma = 0.0;
    for (int iter = 0; iter < 300; ++iter) {
        std::fill(u.begin(), u.end(), 0.0);
        for (std::size_t j = 0; j < cols; ++j) {
            for (std::size_t i = 0; i < rows; ++i) u[i] += m[j * rows + i] * v[j];
        }
        for (std::size_t j = 0; j < cols; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < rows; ++i) acc += m[j * rows + i] * u[i];
            v[j] = acc;
        }
        double norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        if (norm == 0.0) return 0.0;
        for (double& x : v) x /= norm;
        sigma = std::sqrt(norm);
    }
    return sigma;
}

double BiRnnWeights::output_bound(std::size_t i) const {
    const std::size_t width = last_width();
    double bound = 0.0;
    for (std::size_t j = 0; j < width; ++j) bound += std::abs(static_cast<double>(projection[j * output_dim + i]));
    return bound;
}

BiRnnWeights BiRnnWeights::seeded(std::size_t input_dim, const GnnConfig& cfg) {
    cfg.validate();
    if (input_dim == 0) throw ConfigError("aggregator input dimension must be >= 1");

    SplitMix64 rng(derive_seed(cfg.seed, 0x4C53544D));  // "LSTM"
    BiRnnWeights w;
    std::size_t input = input_dim;
    for (std::size_t hidden : cfg.hidden) {
        BiLstmLayer layer;
        layer.forward = make_cell(input, hidden, cfg, rng);
        layer.backward = make_cell(input, hidden, cfg, rng);
        w.layers.push_back(std::move(layer));
        input = 2 * hidden;
    }
    w.output_dim = cfg.output_dim;
    w.projection.resize(cfg.output_dim * input);
    fill_uniform(w.projection, rng, 1.0 / static_cast<double>(input));
    return w;
}

std::vector<std::vector<float>> run_cell(const LstmCell& cell, const std::vector<std::vector<double>>& sequence,
                                         Direction direction) {
    const std::size_t steps = sequence.size();
    const std::size_t hid = cell.hidden;
    std::vector<std::vector<float>> out(steps, std::vector<float>(hid));
    std::vector<float> h(hid, 0.0f), c(hid, 0.0f), z(cell.gates()), x(cell.input);
    for (std::size_t s = 0; s < steps; ++s) {
        const std::size_t t = direction == Direction::Forward ? s : steps - 1 - s;
        if (sequence[t].size() != cell.input) throw ConfigError("sequence element has the wrong dimension");
        std::copy(sequence[t].begin(), sequence[t].end(), x.begin());
        std::copy(cell.bias.begin(), cell.bias.end(), z.begin());
        gemv_add(cell.w_input.data(), cell.gates(), cell.input, x.data(), z.data());
        gemv_add(cell.w_recurrent.data(), cell.gates(), hid, h.data(), z.data());
        lstm_update(z.data(), c.data(), h.data(), hid);
        out[t] = h;
    }
    return out;
}

std::size_t Aggregator::projected_size() const noexcept {
    return 2 * weights_->layers.front().forward.gates();
}

void Aggregator::project_input(std::span<const double> x, std::span<float> out) const {
    const auto& layer = weights_->layers.front();
    if (x.size() != layer.input()) throw ConfigError("aggregator input has the wrong dimension");
    if (out.size() != projected_size()) throw ConfigError("projection buffer has the wrong length");
    const std::size_t g = layer.forward.gates();
    std::vector<float> xf(x.begin(), x.end());
    std::copy(layer.forward.bias.begin(), layer.forward.bias.end(), out.begin());
    std::copy(layer.backward.bias.begin(), layer.backward.bias.end(), out.begin() + static_cast<std::ptrdiff_t>(g));
    gemv_add(layer.forward.w_input.data(), g, layer.input(), xf.data(), out.data());
    gemv_add(layer.backward.w_input.data(), g, layer.input(), xf.data(), out.data() + g);
}

// ws.preact holds steps x 4h gate inputs for this direction; hidden states
// land in ws.states at column offset `offset` of a `width`-wide row.
void Aggregator::run_direction(const LstmCell& cell, std::size_t steps, Direction direction, std::size_t offset,
                               std::size_t width, Workspace& ws) const {
    const std::size_t hid = cell.hidden;
    const std::size_t g = cell.gates();
    ws.h.assign(hid, 0.0f);
    ws.c.assign(hid, 0.0f);
    ws.z.resize(g);
    for (std::size_t s = 0; s < steps; ++s) {
        const std::size_t t = direction == Direction::Forward ? s : steps - 1 - s;
        std::copy_n(ws.preact.begin() + static_cast<std::ptrdiff_t>(t * g), g, ws.z.begin());
        gemv_add(cell.w_recurrent.data(), g, hid, ws.h.data(), ws.z.data());
        float* row = ws.states.data() + t * width + offset;
        lstm_update(ws.z.data(), ws.c.data(), ws.h.data(), hid);
        std::copy_n(ws.h.data(), hid, row);
    }
}

void Aggregator::aggregate_projected(std::span<const float* const> projected, std::span<double> out,
                                     Workspace& ws) const {
    const auto& w = *weights_;
    const std::size_t steps = projected.size();
    if (steps == 0) throw ConfigError("aggregation needs at least one sample");
    if (out.size() != w.output_dim) throw ConfigError("aggregation output has the wrong length");

    for (std::size_t l = 0; l < w.layers.size(); ++l) {
        const auto& layer = w.layers[l];
        const std::size_t g = layer.forward.gates();
        const std::size_t width = 2 * layer.hidden();
        ws.states.resize(steps * width);
        ws.preact.resize(steps * g);
        for (int dir = 0; dir < 2; ++dir) {
            const LstmCell& cell = dir == 0 ? layer.forward : layer.backward;
            for (std::size_t t = 0; t < steps; ++t) {
                float* z = ws.preact.data() + t * g;
                if (l == 0) {
                    std::copy_n(projected[t] + dir * g, g, z);
                } else {
                    std::copy(cell.bias.begin(), cell.bias.end(), z);
                    gemv_add(cell.w_input.data(), g, cell.input, ws.previous.data() + t * cell.input, z);
                }
            }
            run_direction(cell, steps, dir == 0 ? Direction::Forward : Direction::Backward,
                          dir == 0 ? 0 : layer.hidden(), width, ws);
        }
        std::swap(ws.states, ws.previous);
    }

    const std::size_t width = w.last_width();
    ws.mean.assign(width, 0.0);
    for (std::size_t t = 0; t < steps; ++t) {
        const float* row = ws.previous.data() + t * width;
        for (std::size_t j = 0; j < width; ++j) ws.mean[j] += row[j];
    }
    const double inv = 1.0 / static_cast<double>(steps);
    for (double& m : ws.mean) m *= inv;

    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t j = 0; j < width; ++j) {
        const float* col = w.projection.data() + j * w.output_dim;
        for (std::size_t i = 0; i < w.output_dim; ++i) out[i] += static_cast<double>(col[i]) * ws.mean[j];
    }
}

std::vector<double> Aggregator::aggregate(const std::vector<std::vector<double>>& samples) const {
    if (samples.empty()) throw ConfigError("aggregation needs at least one sample");
    const std::size_t size = projected_size();
    std::vector<float> projected(samples.size() * size);
    std::vector<const float*> rows(samples.size());
    for (std::size_t t = 0; t < samples.size(); ++t) {
        project_input(samples[t], std::span<float>(projected.data() + t * size, size));
        rows[t] = projected.data() + t * size;
    }
    Workspace ws;
    std::vector<double> out(weights_->output_dim);
    aggregate_projected(rows, out, ws);
    return out;
}

std::vector<double> aggregate(const std::vector<std::vector<double>>& samples, const BiRnnWeights& weights) {
    if (weights.layers.empty()) throw ConfigError("aggregator has no layers");
    return Aggregator(weights).aggregate(samples);
}

} // namespace provscope::gnn
