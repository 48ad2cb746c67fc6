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
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "shaperef/errors.hpp"
#include "shaperef/volume.hpp"

namespace {

using shaperef::Axis;
using shaperef::Extent3;
using shaperef::MaskVolume;
using shaperef::Spacing3;

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("shaperef_volume_" + name);
}

// Hand-assembled MVOL bytes, independent of the encoder.
std::vector<std::uint8_t> manual_mvol(Extent3 d, Spacing3 s, const std::vector<std::uint8_t>& payload) {
    std::vector<std::uint8_t> out{'M', 'V', 'O', 'L'};
    auto put32 = [&](std::uint32_t v) {
        for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
    };
    put32(1);
    put32(static_cast<std::uint32_t>(d.x));
    put32(static_cast<std::uint32_t>(d.y));
    put32(static_cast<std::uint32_t>(d.z));
    put32(std::bit_cast<std::uint32_t>(s.x));
    put32(std::bit_cast<std::uint32_t>(s.y));
    put32(std::bit_cast<std::uint32_t>(s.z));
    out.push_back(0);
    out.push_back(0);
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

TEST(MaskVolume, RejectsInvalidConstruction) {
    EXPECT_THROW(MaskVolume({0, 2, 2}, {}), shaperef::ShapeError);
    EXPECT_THROW(MaskVolume({2, 2, 2}, {1.0F, 0.0F, 1.0F}), shaperef::ValueError);
    EXPECT_THROW(MaskVolume({2, 2, 2}, {}, std::vector<std::uint8_t>(7, 0)), shaperef::ShapeError);
    EXPECT_THROW(MaskVolume({1, 1, 2}, {}, {0, 2}), shaperef::ValueError);
}

TEST(Mvol, AllOnesRoundTrip) {
    const MaskVolume v({2, 2, 2}, {}, std::vector<std::uint8_t>(8, 1));
    const auto path = temp_path("ones.mvol");
    shaperef::write_volume(v, path);
    EXPECT_EQ(shaperef::read_volume(path), v);
    std::filesystem::remove(path);
}

TEST(Mvol, CenterVoxelMatchesManualBytes) {
    MaskVolume v({3, 3, 3}, {0.5F, 1.25F, 2.0F});
    v.set(1, 1, 1, true);
    std::vector<std::uint8_t> payload(27, 0);
    payload[13] = 1;
    const auto expected = manual_mvol({3, 3, 3}, {0.5F, 1.25F, 2.0F}, payload);
    EXPECT_EQ(shaperef::encode_volume(v), expected);
    EXPECT_EQ(shaperef::decode_volume(expected), v);
}

TEST(Mvol, SingleVoxelFileIsHeaderPlusOneByte) {
    const MaskVolume v({1, 1, 1}, {}, {1});
    const auto path = temp_path("one.mvol");
    shaperef::write_volume(v, path);
    EXPECT_EQ(shaperef::kMvolHeaderBytes, 34U);
    EXPECT_EQ(std::filesystem::file_size(path), 35U);
    std::filesystem::remove(path);
}

TEST(Mvol, PayloadIsDimsProduct) {
    const MaskVolume v({2, 2, 2}, {});
    EXPECT_EQ(shaperef::encode_volume(v).size() - shaperef::kMvolHeaderBytes, 8U);
}

TEST(Mvol, EmptyVolumeRejectedBeforeWrite) {
    const auto path = temp_path("empty.mvol");
    std::filesystem::remove(path);
    EXPECT_THROW(shaperef::write_volume(MaskVolume{}, path), shaperef::ShapeError);
    EXPECT_FALSE(std::filesystem::exists(path));
}

TEST(Mvol, DecodeErrors) {
    auto good = manual_mvol({2, 1, 1}, {}, {0, 1});
    auto bad_magic = good;
    bad_magic[0] = 'X';
    EXPECT_THROW(shaperef::decode_volume(bad_magic), shaperef::FormatError);
    auto bad_version = good;
    bad_version[4] = 2;
    EXPECT_THROW(shaperef::decode_volume(bad_version), shaperef::FormatError);
    auto bad_dtype = good;
    bad_dtype[32] = 1;
    EXPECT_THROW(shaperef::decode_volume(bad_dtype), shaperef::FormatError);
    auto short_payload = good;
    short_payload.pop_back();
    EXPECT_THROW(shaperef::decode_volume(short_payload), shaperef::TruncationError);
    auto long_payload = good;
    long_payload.push_back(0);
    EXPECT_THROW(shaperef::decode_volume(long_payload), shaperef::TruncationError);
    auto bad_voxel = good;
    bad_voxel.back() = 2;
    EXPECT_THROW(shaperef::decode_volume(bad_voxel), shaperef::ValueError);
    EXPECT_THROW(shaperef::decode_volume(std::span<const std::uint8_t>(good.data(), 10)), shaperef::FormatError);
}

TEST(Mvol, ReadMissingFileIsIoError) {
    EXPECT_THROW(shaperef::read_volume(temp_path("does_not_exist.mvol")), shaperef::IoError);
}

TEST(Mvol, UnwritablePathIsIoError) {
    const MaskVolume v({1, 1, 1}, {}, {1});
    EXPECT_THROW(shaperef::write_volume(v, "/nonexistent_dir/x/y.mvol"), shaperef::IoError);
}

TEST(Mvol, RandomRoundTripProperty) {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<std::size_t> extent(1, 9);
    std::uniform_real_distribution<float> spacing(0.1F, 4.0F);
    for (int trial = 0; trial < 50; ++trial) {
        const Extent3 d{extent(rng), extent(rng), extent(rng)};
        const auto v = oracle::random_volume(rng, d, 0.4, {spacing(rng), spacing(rng), spacing(rng)});
        const auto bytes = shaperef::encode_volume(v);
        const auto back = shaperef::decode_volume(bytes);
        ASSERT_EQ(back, v);
        ASSERT_EQ(shaperef::encode_volume(back), bytes);
    }
}

TEST(Slice, MiddleIndexIsFloorHalf) {
    for (std::size_t depth : {4U, 5U}) {
        MaskVolume v({3, 3, depth}, {});
        v.set(1, 2, 2, true);
        const auto s = shaperef::extract_middle_slice(v);
        EXPECT_EQ(s.width(), 3U);
        EXPECT_EQ(s.height(), 3U);
        EXPECT_EQ(s.foreground_count(), 1U);
        EXPECT_EQ(s.at(1, 2), 1);
    }
}

TEST(Slice, PatternAtMiddlePlaneMatchesDirectIndexing) {
    std::mt19937_64 rng(3);
    MaskVolume v({6, 7, 5}, {});
    std::bernoulli_distribution coin(0.5);
    for (std::size_t y = 0; y < 7; ++y)
        for (std::size_t x = 0; x < 6; ++x) v.set(x, y, 2, coin(rng));
    const auto s = shaperef::extract_middle_slice(v, Axis::Z);
    for (std::size_t y = 0; y < 7; ++y)
        for (std::size_t x = 0; x < 6; ++x) EXPECT_EQ(s.at(x, y), v.at(x, y, 2));
}

TEST(Slice, RemainingAxesInOrder) {
    std::mt19937_64 rng(5);
    const auto v = oracle::random_volume(rng, {4, 5, 6}, 0.5);
    const auto sx = shaperef::extract_middle_slice(v, Axis::X);
    ASSERT_EQ(sx.width(), 5U);
    ASSERT_EQ(sx.height(), 6U);
    for (std::size_t z = 0; z < 6; ++z)
        for (std::size_t y = 0; y < 5; ++y) EXPECT_EQ(sx.at(y, z), v.at(2, y, z));
    const auto sy = shaperef::extract_middle_slice(v, Axis::Y);
    ASSERT_EQ(sy.width(), 4U);
    ASSERT_EQ(sy.height(), 6U);
    for (std::size_t z = 0; z < 6; ++z)
        for (std::size_t x = 0; x < 4; ++x) EXPECT_EQ(sy.at(x, z), v.at(x, 2, z));
    EXPECT_THROW((void)shaperef::extract_slice(v, Axis::Z, 6), shaperef::ShapeError);
}

TEST(Axis, ParseNames) {
    EXPECT_EQ(shaperef::parse_axis("x"), Axis::X);
    EXPECT_EQ(shaperef::parse_axis("z"), Axis::Z);
    EXPECT_EQ(shaperef::axis_name(Axis::Y), "y");
    EXPECT_THROW((void)shaperef::parse_axis("w"), shaperef::ConfigError);
}

}  // namespace
