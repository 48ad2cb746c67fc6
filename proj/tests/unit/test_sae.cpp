/*
 * Copyright (c) 2026, The shaperef Authors.  All rights reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <random>

#include "oracles.hpp"
#include "shaperef/errors.hpp"
#include "shaperef/gradcheck.hpp"
#include "shaperef/sae.hpp"
#include "shaperef/training.hpp"

namespace {

namespace ad = shaperef::ad;
using shaperef::NdArray;
using shaperef::SAEConfig;
using shaperef::SAEModel;

NdArray random_mask(std::mt19937_64& rng, const shaperef::Extent3d& e, double p = 0.4) {
    NdArray a({e[0], e[1], e[2]});
    std::bernoulli_distribution coin(p);
    for (auto& v : a.data()) v = coin(rng) ? 1.0 : 0.0;
    return a;
}

// Splits an encoded model into its JSON header and payload.
std::pair<nlohmann::json, std::size_t> split_model(const std::vector<std::uint8_t>& bytes) {
    const auto sep = std::find(bytes.begin(), bytes.end(), std::uint8_t{0});
    const std::string header(bytes.begin(), sep);
    return {nlohmann::json::parse(header), static_cast<std::size_t>(bytes.end() - sep - 1)};
}

TEST(SaeConfig, DefaultsAndStageGeometry) {
    const SAEConfig c;
    EXPECT_EQ(c.input_dims, (shaperef::Extent3d{8, 64, 64}));
    EXPECT_EQ(c.base_channels, 16U);
    ASSERT_EQ(c.stages.size(), 2U);
    EXPECT_EQ(c.stages[0].shuffle.blocks, (std::array<std::size_t, 3>{2, 4, 4}));
    EXPECT_EQ(c.stages[0].heads, 2U);
    EXPECT_EQ(c.stages[1].heads, 4U);
    EXPECT_EQ(c.stage_extent(0), (shaperef::Extent3d{4, 32, 32}));
    EXPECT_EQ(c.stage_extent(1), (shaperef::Extent3d{2, 16, 16}));
    const auto tiny = SAEConfig::tiny();
    EXPECT_EQ(tiny.stage_extent(0), (shaperef::Extent3d{2, 8, 8}));
    EXPECT_EQ(tiny.stage_extent(1), (shaperef::Extent3d{2, 4, 4}));
    EXPECT_NO_THROW(SAEConfig::full_scale().validate());
}

TEST(SaeConfig, ValidationErrors) {
    auto c = SAEConfig::tiny();
    c.input_dims = {4, 15, 16};
    EXPECT_THROW(c.validate(), shaperef::ConfigError);
    c = SAEConfig::tiny();
    c.stages[1].shuffle.blocks = {1, 3, 2};
    EXPECT_THROW(c.validate(), shaperef::ConfigError);
    c = SAEConfig::tiny();
    c.stages[0].heads = 3;
    EXPECT_THROW(c.validate(), shaperef::ConfigError);
    c = SAEConfig::tiny();
    c.stages.clear();
    EXPECT_THROW(c.validate(), shaperef::ConfigError);
    EXPECT_THROW(SAEModel{c}, shaperef::ConfigError);
}

TEST(SaeConfig, JsonRoundTrip) {
    auto c = SAEConfig::tiny();
    c.window = shaperef::WindowMode::Contiguous;
    c.blocks_per_stage = 1;
    EXPECT_EQ(shaperef::config_from_json(shaperef::config_to_json(c)), c);
    EXPECT_EQ(shaperef::config_from_json(shaperef::config_to_json(SAEConfig{})), SAEConfig{});
    EXPECT_THROW((void)shaperef::config_from_json("{\"window\": \"diagonal\"}"), shaperef::ConfigError);
}

TEST(SaeModel, ManifestIsPureFunctionOfConfig) {
    const SAEModel a(SAEConfig::tiny(), 1);
    const SAEModel b(SAEConfig::tiny(), 2);
    EXPECT_EQ(a.manifest(), b.manifest());
    std::set<std::string> names;
    for (const auto& e : a.manifest()) EXPECT_TRUE(names.insert(e.name).second) << e.name;
    EXPECT_EQ(a.manifest().front().name, "stem.w");
    EXPECT_EQ(a.manifest().front().shape, (shaperef::Shape{8, 2, 3, 3, 3}));
    EXPECT_EQ(a.manifest().back().name, "head.b");
    EXPECT_EQ(a.manifest().back().shape, (shaperef::Shape{1}));
    EXPECT_NE(a.params().items()[0].value(), b.params().items()[0].value());
}

TEST(SaeModel, OutputShapeRangeAndDeterminism) {
    std::mt19937_64 rng(1);
    const SAEModel m(SAEConfig::tiny(), 3);
    const auto ref = random_mask(rng, {4, 16, 16});
    const auto noisy = random_mask(rng, {4, 16, 16});
    const auto p = m.forward(ref, noisy).value();
    EXPECT_EQ(p.shape(), (shaperef::Shape{1, 4, 16, 16}));
    for (double v : p.data()) {
        EXPECT_GT(v, 0.0);
        EXPECT_LT(v, 1.0);
    }
    EXPECT_EQ(m.forward(ref, noisy).value(), p);
    EXPECT_EQ(m.forward(ref.reshaped({1, 4, 16, 16}), noisy).value(), p);
}

TEST(SaeModel, ZeroParametersGiveOneHalf) {
    std::mt19937_64 rng(2);
    SAEModel m(SAEConfig::tiny(), 4);
    m.fill_parameters(0.0);
    const auto p = m.forward(random_mask(rng, {4, 16, 16}), random_mask(rng, {4, 16, 16})).value();
    for (double v : p.data()) EXPECT_EQ(v, 0.5);
}

TEST(SaeModel, InputRolesAreNotSymmetric) {
    std::mt19937_64 rng(3);
    const SAEModel m(SAEConfig::tiny(), 5);
    const auto a = random_mask(rng, {4, 16, 16});
    const auto b = random_mask(rng, {4, 16, 16});
    const auto ab = m.forward(a, b).value();
    const auto ba = m.forward(b, a).value();
    EXPECT_GT(oracle::max_abs_diff(ab.data(), ba.data()), 0.0);
}

TEST(SaeModel, DimsMismatchIsShapeError) {
    const SAEModel m(SAEConfig::tiny(), 6);
    EXPECT_THROW((void)m.forward(NdArray({4, 16, 8}), NdArray({4, 16, 16})), shaperef::ShapeError);
    EXPECT_THROW((void)m.forward(NdArray({4, 16, 16}), NdArray({2, 4, 16, 16})), shaperef::ShapeError);
}

TEST(SaeModel, DefaultConfigForwardShape) {
    std::mt19937_64 rng(4);
    const SAEModel m(SAEConfig{}, 7);
    const auto p = m.forward(random_mask(rng, {8, 64, 64}), random_mask(rng, {8, 64, 64})).value();
    EXPECT_EQ(p.shape(), (shaperef::Shape{1, 8, 64, 64}));
}

TEST(SaeModel, TinyLossGradientCheck) {
    std::mt19937_64 rng(5);
    SAEModel m(SAEConfig::tiny(), 8);
    const auto ref = random_mask(rng, {4, 16, 16});
    const auto noisy = random_mask(rng, {4, 16, 16});
    const auto target = random_mask(rng, {4, 16, 16});
    std::vector<ad::Var> vars;
    for (auto& item : m.params().items()) vars.push_back(item.var);
    auto loss = [&] { return shaperef::sae_loss(m.forward(ref, noisy), target, 1e-7); };
    const auto r = shaperef::grad_check(loss, vars, {.step = 1e-5, .samples = 60, .seed = 9});
    EXPECT_LT(r.max_relative_error, 1e-4) << r.worst;
}

TEST(Binarize, Rules) {
    const shaperef::Extent3 dims{2, 1, 1};
    const auto half = shaperef::binarize(NdArray({1, 1, 1, 2}, 0.5), 0.5, dims, {});
    EXPECT_EQ(half.foreground_count(), 2U);
    const auto mostly = shaperef::binarize(NdArray({2}, {0.3, 0.9995}), 0.999, dims, {});
    EXPECT_EQ(mostly.voxels()[0], 0);
    EXPECT_EQ(mostly.voxels()[1], 1);
    EXPECT_THROW((void)shaperef::binarize(NdArray({2}), 1.0, dims, {}), shaperef::ConfigError);
    EXPECT_THROW((void)shaperef::binarize(NdArray({2}), 0.0, dims, {}), shaperef::ConfigError);
    EXPECT_THROW((void)shaperef::binarize(NdArray({3}), 0.5, dims, {}), shaperef::ShapeError);
}

TEST(Binarize, IdempotentAndMatchesArrayLayout) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    NdArray p({3, 4, 5});
    for (auto& v : p.data()) v = u(rng);
    const shaperef::Extent3 dims{5, 4, 3};
    const auto once = shaperef::binarize(p, 0.5, dims, {0.5F, 0.5F, 2.0F});
    const auto twice = shaperef::binarize(shaperef::volume_to_array(once), 0.5, dims, once.spacing());
    EXPECT_EQ(once, twice);
    for (std::size_t z = 0; z < 3; ++z)
        for (std::size_t y = 0; y < 4; ++y)
            for (std::size_t x = 0; x < 5; ++x)
                EXPECT_EQ(once.at(x, y, z), p[(z * 4 + y) * 5 + x] >= 0.5 ? 1 : 0);
}

TEST(ModelFile, RoundTripIsBitExact) {
    std::mt19937_64 rng(7);
    const SAEModel m(SAEConfig::tiny(), 10);
    const auto bytes = shaperef::encode_model(m);
    const auto back = shaperef::decode_model(bytes);
    EXPECT_EQ(back.config(), m.config());
    EXPECT_EQ(shaperef::encode_model(back), bytes);
    const auto ref = random_mask(rng, {4, 16, 16});
    const auto noisy = random_mask(rng, {4, 16, 16});
    EXPECT_EQ(back.forward(ref, noisy).value(), m.forward(ref, noisy).value());

    const auto path = std::filesystem::temp_directory_path() / "shaperef_model_roundtrip.bin";
    shaperef::save_model(m, path);
    EXPECT_EQ(shaperef::encode_model(shaperef::load_model(path)), bytes);
    std::filesystem::remove(path);
}

TEST(ModelFile, HeaderCountMatchesPayloadAndValuesAreLittleEndian) {
    const SAEModel m(SAEConfig::tiny(), 11);
    const auto bytes = shaperef::encode_model(m);
    const auto [header, payload] = split_model(bytes);
    EXPECT_EQ(header.at("format"), "shaperef-sae");
    EXPECT_EQ(header.at("version"), 1);
    EXPECT_EQ(header.at("parameter_count").get<std::size_t>(), payload / 8);
    EXPECT_EQ(header.at("parameter_count").get<std::size_t>(), m.params().scalar_count());
    EXPECT_EQ(header.at("manifest").size(), m.manifest().size());
    const std::size_t start = bytes.size() - payload;
    std::uint64_t raw = 0;
    for (int b = 0; b < 8; ++b) raw |= static_cast<std::uint64_t>(bytes[start + b]) << (8 * b);
    EXPECT_EQ(std::bit_cast<double>(raw), m.params().items()[0].value()[0]);
}

TEST(ModelFile, CorruptionsAreFormatErrors) {
    const SAEModel m(SAEConfig::tiny(), 12);
    const auto bytes = shaperef::encode_model(m);
    auto truncated = bytes;
    truncated.resize(bytes.size() - 8);
    EXPECT_THROW((void)shaperef::decode_model(truncated), shaperef::TruncationError);
    auto extended = bytes;
    extended.push_back(0);
    EXPECT_THROW((void)shaperef::decode_model(extended), shaperef::TruncationError);

    const auto sep = static_cast<std::size_t>(std::find(bytes.begin(), bytes.end(), std::uint8_t{0}) - bytes.begin());
    auto header = nlohmann::json::parse(std::string(bytes.begin(), bytes.begin() + static_cast<long>(sep)));
    auto rebuild = [&](const nlohmann::json& h) {
        const auto text = h.dump();
        std::vector<std::uint8_t> out(text.begin(), text.end());
        out.insert(out.end(), bytes.begin() + static_cast<long>(sep), bytes.end());
        return out;
    };
    auto renamed = header;
    renamed["manifest"][0]["name"] = "stem.weight";
    EXPECT_THROW((void)shaperef::decode_model(rebuild(renamed)), shaperef::FormatError);
    auto miscounted = header;
    miscounted["parameter_count"] = miscounted["parameter_count"].get<std::size_t>() + 1;
    EXPECT_THROW((void)shaperef::decode_model(rebuild(miscounted)), shaperef::FormatError);
    auto version = header;
    version["version"] = 2;
    EXPECT_THROW((void)shaperef::decode_model(rebuild(version)), shaperef::FormatError);
    EXPECT_THROW((void)shaperef::decode_model(std::vector<std::uint8_t>{'{', '}'}), shaperef::FormatError);
    EXPECT_THROW((void)shaperef::load_model("/nonexistent/model.bin"), shaperef::IoError);
}

}  // namespace
