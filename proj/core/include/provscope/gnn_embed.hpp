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
#include <span>
#include <vector>

namespace provscope::gnn {

enum class Direction { Forward, Backward };

// One LSTM direction. Gate order is input, forget, cell, output. Matrices are
// column-major with 4 * hidden rows so matrix-vector products run as
// contiguous axpy loops.
struct LstmCell {
    std::size_t input = 0;
    std::size_t hidden = 0;
    std::vector<float> w_input;      // 4h x input
    std::vector<float> w_recurrent;  // 4h x h
    std::vector<float> bias;         // 4h

    std::size_t gates() const noexcept { return 4 * hidden; }
};

struct BiLstmLayer {
    LstmCell forward;
    LstmCell backward;

    std::size_t input() const noexcept { return forward.input; }
    std::size_t hidden() const noexcept { return forward.hidden; }
};

struct GnnConfig {
    std::vector<std::size_t> hidden{64, 32};
    std::size_t output_dim = 100;
    double recurrent_radius = 0.9;
    double input_scale = 1.0;
    std::uint64_t seed = 7;

    void validate() const;
};

// Fixed, seeded weights of the stacked bidirectional aggregator.
struct BiRnnWeights {
    std::vector<BiLstmLayer> layers;
    std::vector<float> projection;  // output_dim x 2*h_last, column-major
    std::size_t output_dim = 0;

    std::size_t input_dim() const noexcept { return layers.empty() ? 0 : layers.front().input(); }
    std::size_t last_width() const noexcept { return layers.empty() ? 0 : 2 * layers.back().hidden(); }

    // Sum_j |P_ij|: with every recurrent output in (-1, 1), |out_i| stays
    // below this bound.
    double output_bound(std::size_t i) const;

    // Input weights U(-1, 1) * input_scale / sqrt(input), recurrent gate blocks
    // U(-1, 1) rescaled to spectral norm cfg.recurrent_radius, biases 0 except
    // the forget gate (+1), projection U(-1, 1) / (2 * h_last).
    static BiRnnWeights seeded(std::size_t input_dim, const GnnConfig& cfg);
};

// Largest singular value of a column-major rows x cols matrix, by power
// iteration on M^T M.
double spectral_norm(std::span<const float> m, std::size_t rows, std::size_t cols);

// Runs one direction of a cell over a sequence of input vectors and returns
// the K x hidden states, indexed by sequence position.
std::vector<std::vector<float>> run_cell(const LstmCell& cell, const std::vector<std::vector<double>>& sequence,
                                         Direction direction);

// Bidirectional aggregation: each layer concatenates forward and backward
// states per position and feeds the next layer; the last layer's per-position
// outputs are averaged over the K positions and projected to output_dim.
class Aggregator {
public:
    struct Workspace {
        std::vector<float> preact;   // K x 4h, reused per direction
        std::vector<float> states;   // K x 2h of the current layer
        std::vector<float> previous; // K x 2h of the previous layer
        std::vector<float> h;
        std::vector<float> c;
        std::vector<float> z;
        std::vector<double> mean;
    };

    explicit Aggregator(const BiRnnWeights& weights) : weights_(&weights) {}

    const BiRnnWeights& weights() const noexcept { return *weights_; }

    // First-layer input term W x + b for both directions (2 * 4h0 floats).
    // A vector's projection does not depend on its sequence position, so it
    // can be computed once per distinct input.
    std::size_t projected_size() const noexcept;
    void project_input(std::span<const double> x, std::span<float> out) const;

    void aggregate_projected(std::span<const float* const> projected, std::span<double> out, Workspace& ws) const;

    std::vector<double> aggregate(const std::vector<std::vector<double>>& samples) const;

private:
    void run_direction(const LstmCell& cell, std::size_t steps, Direction direction, std::size_t offset,
                       std::size_t width, Workspace& ws) const;

    const BiRnnWeights* weights_;
};

// Throws ConfigError on empty input or inconsistent dimensions.
std::vector<double> aggregate(const std::vector<std::vector<double>>& samples, const BiRnnWeights& weights);

} // namespace provscope::gnn
