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
#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "provscope/binary_io.hpp"
#include "provscope/error.hpp"
#include "provscope/model_file.hpp"
#include "provscope/pipeline.hpp"

using namespace provscope;

namespace {

model::Model sample_model(bool with_network) {
    model::Model m;
    m.config_json = pipeline::to_json(pipeline::PipelineConfig{});
    m.tfidf = encoder::TfIdfModel(10, {{"4688", 7}, {"cmd.exe", 3}, {"weird token", 1}});
    if (with_network) {
        m.network_dim = 3;
        m.content_gain = 12.5;
        m.network["a\x1f" "b"] = {0.1, -0.2, 1e-300};
        m.network["c"] = {std::numeric_limits<double>::denorm_min(), 2.0, -0.0};
    }
    m.clusters.kind = detector::Clusterer::KMeans;
    m.clusters.centroids = {{1.0, 2.0}, {3.0, 0.1 + 0.2}};
    m.clusters.member_counts = {4, 9};
    m.clusters.delta = 0.72;
    m.clusters.tau = 1.5;
    m.clusters.loss_train = 0.123456789012345;
    m.clusters.normalize = true;
    return m;
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("provscope_test_" + name)).string();
}

} // namespace

TEST(ByteIo, RoundTrip) {
    io::ByteWriter w;
    w.u8(7);
    w.u32(0xDEADBEEF);
    w.u64(1ULL << 60);
    w.i64(-5);
    w.f64(-0.1);
    w.str("hello");
    const auto bytes = w.take();
    EXPECT_EQ(bytes[1], 0xEF);  // little endian
    io::ByteReader r(bytes);
    EXPECT_EQ(r.u8(), 7);
    EXPECT_EQ(r.u32(), 0xDEADBEEFu);
    EXPECT_EQ(r.u64(), 1ULL << 60);
    EXPECT_EQ(r.i64(), -5);
    EXPECT_EQ(r.f64(), -0.1);
    EXPECT_EQ(r.str(), "hello");
    EXPECT_TRUE(r.done());
    EXPECT_THROW(r.u8(), DataError);
}

TEST(ByteIo, TruncatedStringIsDataError) {
    io::ByteWriter w;
    w.u64(100);
    const auto bytes = w.take();
    io::ByteReader r(bytes);
    EXPECT_THROW(r.str(), DataError);
}

TEST(ModelFile, BitExactRoundTrip) {
    for (bool net : {false, true}) {
        const auto m = sample_model(net);
        const auto bytes = model::serialize(m);
        const auto back = model::deserialize(bytes);
        EXPECT_EQ(back, m);
        EXPECT_EQ(model::serialize(back), bytes);
    }
}

TEST(ModelFile, SaveLoad) {
    const auto path = temp_path("model.bin");
    const auto m = sample_model(true);
    model::save(path, m);
    EXPECT_EQ(model::load(path), m);
    std::filesystem::remove(path);
    EXPECT_THROW(model::load(path), IoError);
}

TEST(ModelFile, CorruptInputs) {
    auto bytes = model::serialize(sample_model(false));
    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    EXPECT_THROW(model::deserialize(bad_magic), DataError);
    auto bad_version = bytes;
    bad_version[4] = 99;
    EXPECT_THROW(model::deserialize(bad_version), DataError);
    for (std::size_t cut : {std::size_t{3}, std::size_t{10}, bytes.size() - 1}) {
        const std::vector<std::uint8_t> part(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
        EXPECT_THROW(model::deserialize(part), DataError) << cut;
    }
}

TEST(ModelFile, MissingSectionAndUnknownSection) {
    const auto m = sample_model(false);
    io::ByteWriter w;
    w.raw(std::vector<std::uint8_t>{'P', 'V', 'S', 'C'});
    w.u32(model::kFormatVersion);
    io::ByteWriter conf;
    conf.str(m.config_json);
    w.raw(std::vector<std::uint8_t>{'C', 'O', 'N', 'F'});
    w.u64(conf.bytes().size());
    w.raw(conf.bytes());
    EXPECT_THROW(model::deserialize(w.bytes()), DataError);

    // an extra section is skipped
    auto bytes = model::serialize(m);
    io::ByteWriter extra;
    extra.raw(std::vector<std::uint8_t>{'X', 'T', 'R', 'A'});
    extra.u64(3);
    extra.raw(std::vector<std::uint8_t>{1, 2, 3});
    bytes.insert(bytes.end(), extra.bytes().begin(), extra.bytes().end());
    EXPECT_EQ(model::deserialize(bytes), m);
}

TEST(ConfigJson, RoundTripAndDefaults) {
    pipeline::PipelineConfig c;
    c.path = pipeline::FeaturePath::Gnn;
    c.sampling = pipeline::Sampling::Direct;
    c.delta = 0.8;
    c.gnn.hidden = {16, 8};
    c.ingest.denylist = {4672, 4798};
    c.ingest.user_constant = "me";
    c.workers = 3;
    const auto text = pipeline::to_json(c);
    const auto back = pipeline::config_from_json(text);
    EXPECT_EQ(pipeline::to_json(back), text);
    EXPECT_EQ(back.gnn.hidden, (std::vector<std::size_t>{16, 8}));
    EXPECT_EQ(back.ingest.denylist, c.ingest.denylist);

    const auto partial = pipeline::config_from_json(R"({"detector":{"delta":0.9}})");
    EXPECT_EQ(partial.delta, 0.9);
    EXPECT_EQ(partial.rwr.walk_length, 40u);
}

TEST(ConfigJson, Rejections) {
    EXPECT_THROW(pipeline::config_from_json(R"({"bogus":1})"), ConfigError);
    EXPECT_THROW(pipeline::config_from_json(R"({"detector":{"deltaa":1}})"), ConfigError);
    EXPECT_THROW(pipeline::config_from_json(R"({"path":"svm"})"), ConfigError);
    EXPECT_THROW(pipeline::config_from_json("[1,"), ConfigError);
    EXPECT_THROW(pipeline::load_config("/nonexistent/provscope.json"), IoError);
}

TEST(ConfigValidate, NamesOffendingSetting) {
    pipeline::PipelineConfig c;
    c.fda.window = 32;
    try {
        c.validate();
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("fda.window"), std::string::npos);
    }
    c = {};
    c.delta = 1.5;
    EXPECT_THROW(c.validate(), ValidationError);
    c = {};
    c.workers = 0;
    EXPECT_THROW(c.validate(), ValidationError);
}

TEST(ConfigValidate, FeatureDim) {
    pipeline::PipelineConfig c;
    EXPECT_EQ(c.feature_dim(), 105u);
    c.path = pipeline::FeaturePath::Gnn;
    EXPECT_EQ(c.feature_dim(), 100u);
}

TEST(Compatibility, RejectsMismatchedModel) {
    pipeline::PipelineConfig c;
    model::Model m;
    m.config_json = pipeline::to_json(c);
    m.clusters.centroids = {std::vector<double>(105, 0.0)};
    m.clusters.member_counts = {1};
    EXPECT_NO_THROW(pipeline::check_compatible(c, m));
    auto other = c;
    other.path = pipeline::FeaturePath::Gnn;
    EXPECT_THROW(pipeline::check_compatible(other, m), ValidationError);
    other = c;
    other.encoder_seed = 1;
    EXPECT_THROW(pipeline::check_compatible(other, m), ValidationError);
    other = c;
    other.tau = 2.0;
    EXPECT_NO_THROW(pipeline::check_compatible(other, m));
}

TEST(ExitCodes, Mapping) {
    EXPECT_EQ(exit_code_for(ConfigError("x")), ExitCode::Config);
    EXPECT_EQ(exit_code_for(ValidationError("x")), ExitCode::Validation);
    EXPECT_EQ(exit_code_for(IoError("x")), ExitCode::Io);
    EXPECT_EQ(exit_code_for(DataError("x")), ExitCode::Data);
    EXPECT_EQ(exit_code_for(ParseError("x", 1)), ExitCode::Data);
    EXPECT_EQ(exit_code_for(std::runtime_error("x")), ExitCode::Failure);
}
