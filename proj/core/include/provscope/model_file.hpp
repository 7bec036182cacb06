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

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "provscope/detector.hpp"
#include "provscope/encoder.hpp"

namespace provscope::model {

inline constexpr std::uint32_t kFormatVersion = 1;

// Everything detection needs besides the seeded aggregator weights, which
// are regenerated from the configuration.
struct Model {
    std::string config_json;
    encoder::TfIdfModel tfidf;
    std::size_t network_dim = 0;
    std::map<std::string, std::vector<double>> network;  // content key -> network embedding
    double content_gain = 1.0;                           // gnn path, see pipeline::content_gain
    detector::ClusterModel clusters;

    friend bool operator==(const Model&, const Model&) = default;
};

// "PVSC", u32 version, then tagged sections (4-byte tag, u64 length,
// payload): CONF, TFID, NETE (optional; dim, content gain, table), CLUS.
// All integers little-endian, doubles as IEEE-754 bit patterns, so equal
// models serialize to equal bytes.
std::vector<std::uint8_t> serialize(const Model& m);
// Throws DataError on bad magic, unsupported version, truncation or a
// missing section.
Model deserialize(std::span<const std::uint8_t> bytes);

void save(const std::string& path, const Model& m);
Model load(const std::string& path);

} // namespace provscope::model
