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

#include "provscope/model_file.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <optional>

#include "provscope/binary_io.hpp"
#include "provscope/error.hpp"

namespace provscope::model {

namespace {

using Tag = std::array<char, 4>;

constexpr Tag kMagic = {'P', 'V', 'S', 'C'};
constexpr Tag kConf = {'C', 'O', 'N', 'F'};
constexpr Tag kTfidf = {'T', 'F', 'I', 'D'};
constexpr Tag kNetwork = {'N', 'E', 'T', 'E'};
constexpr Tag kClusters = {'C', 'L', 'U', 'S'};

void put_tag(io::ByteWriter& w, const Tag& t) {
    for (char c : t) w.u8(static_cast<std::uint8_t>(c));
}

Tag get_tag(io::ByteReader& r) {
    Tag t{};
    for (char& c : t) c = static_cast<char>(r.u8());
    return t;
}

void put_section(io::ByteWriter& out, const Tag& tag, const io::ByteWriter& body) {
    put_tag(out, tag);
    out.u64(body.bytes().size());
    out.raw(body.bytes());
}

std::string tag_name(const Tag& t) { return std::string(t.begin(), t.end()); }

void read_tfidf(io::ByteReader& r, Model& m) {
    const std::uint64_t docs = r.u64();
    const std::uint64_t n = r.u64();
    std::map<std::string, std::uint64_t> df;
    for (std::uint64_t i = 0; i < n; ++i) {
        std::string token = r.str();
        df.emplace(std::move(token), r.u64());
    }
    m.tfidf = encoder::TfIdfModel(docs, std::move(df));
}

void read_network(io::ByteReader& r, Model& m) {
    m.network_dim = r.u64();
    m.content_gain = r.f64();
    const std::uint64_t n = r.u64();
    for (std::uint64_t i = 0; i < n; ++i) {
        std::string key = r.str();
        std::vector<double> v(m.network_dim);
        for (auto& x : v) x = r.f64();
        m.network.emplace(std::move(key), std::move(v));
    }
}

void read_clusters(io::ByteReader& r, Model& m) {
    auto& c = m.clusters;
    const std::uint8_t kind = r.u8();
    if (kind > static_cast<std::uint8_t>(detector::Clusterer::KMeans)) {
        throw DataError("unknown clusterer kind " + std::to_string(kind));
    }
    c.kind = static_cast<detector::Clusterer>(kind);
    const std::uint64_t dim = r.u64();
    const std::uint64_t count = r.u64();
    c.loss_train = r.f64();
    c.delta = r.f64();
    c.tau = r.f64();
    c.normalize = r.u8() != 0;
    if (count == 0 || dim == 0) throw DataError("model has no centroids");
    if (dim * count > r.remaining()) throw DataError("centroid block is truncated");
    c.member_counts.resize(count);
    for (auto& n : c.member_counts) n = r.u64();
    c.centroids.assign(count, std::vector<double>(dim));
    for (auto& row : c.centroids) {
        for (auto& x : row) {
            x = r.f64();
            if (!std::isfinite(x)) throw DataError("model contains a non-finite centroid entry");
        }
    }
}

} // namespace

std::vector<std::uint8_t> serialize(const Model& m) {
    io::ByteWriter out;
    put_tag(out, kMagic);
    out.u32(kFormatVersion);

    io::ByteWriter conf;
    conf.str(m.config_json);
    put_section(out, kConf, conf);

    io::ByteWriter tf;
    tf.u64(m.tfidf.doc_count());
    tf.u64(m.tfidf.table().size());
    for (const auto& [token, df] : m.tfidf.table()) {
        tf.str(token);
        tf.u64(df);
    }
    put_section(out, kTfidf, tf);

    if (!m.network.empty()) {
        io::ByteWriter ne;
        ne.u64(m.network_dim);
        ne.f64(m.content_gain);
        ne.u64(m.network.size());
        for (const auto& [key, v] : m.network) {
            if (v.size() != m.network_dim) throw ConfigError("network embedding of inconsistent dimension");
            ne.str(key);
            for (double x : v) ne.f64(x);
        }
        put_section(out, kNetwork, ne);
    }

    const auto& c = m.clusters;
    io::ByteWriter cl;
    cl.u8(static_cast<std::uint8_t>(c.kind));
    cl.u64(c.dim());
    cl.u64(c.cluster_count());
    cl.f64(c.loss_train);
    cl.f64(c.delta);
    cl.f64(c.tau);
    cl.u8(c.normalize ? 1 : 0);
    for (std::size_t i = 0; i < c.cluster_count(); ++i) cl.u64(i < c.member_counts.size() ? c.member_counts[i] : 0);
    for (const auto& row : c.centroids) {
        for (double x : row) cl.f64(x);
    }
    put_section(out, kClusters, cl);
    return out.take();
}

Model deserialize(std::span<const std::uint8_t> bytes) {
    io::ByteReader r(bytes);
    if (r.remaining() < 8 || get_tag(r) != kMagic) throw DataError("not a model file (bad magic)");
    const std::uint32_t version = r.u32();
    if (version != kFormatVersion) throw DataError("unsupported model format version " + std::to_string(version));

    Model m;
    bool have_conf = false, have_tfidf = false, have_clusters = false;
    while (!r.done()) {
        const Tag tag = get_tag(r);
        const std::uint64_t length = r.u64();
        io::ByteReader body(r.raw(length));
        if (tag == kConf) {
            m.config_json = body.str();
            have_conf = true;
        } else if (tag == kTfidf) {
            read_tfidf(body, m);
            have_tfidf = true;
        } else if (tag == kNetwork) {
            read_network(body, m);
        } else if (tag == kClusters) {
            read_clusters(body, m);
            have_clusters = true;
        } else {
            continue;  // unknown sections are skipped
        }
        if (!body.done()) throw DataError("trailing bytes in section " + tag_name(tag));
    }
    if (!have_conf || !have_tfidf || !have_clusters) throw DataError("model file is missing a required section");
    return m;
}

void save(const std::string& path, const Model& m) { io::write_file(path, serialize(m)); }

Model load(const std::string& path) { return deserialize(io::read_file(path)); }

} // namespace provscope::model
