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

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "shaperef/augmentation.hpp"
#include "shaperef/errors.hpp"
#include "shaperef/random.hpp"

namespace {

using shaperef::MaskVolume;
using shaperef::NoiseParams;
using shaperef::TransformParams;

MaskVolume blob_volume(std::size_t n, std::size_t depth, double a, double b, double angle, double cx, double cy) {
    const auto slice = oracle::ellipse_mask(n, n, cx, cy, a, b, angle);
    MaskVolume v({n, n, depth}, {});
    for (std::size_t z = 1; z + 1 < depth; ++z)
        for (std::size_t y = 0; y < n; ++y)
            for (std::size_t x = 0; x < n; ++x) v.set(x, y, z, slice.at(x, y));
    return v;
}

std::array<double, 3> centroid(const MaskVolume& v) {
    std::array<double, 3> c{0, 0, 0};
    double n = 0;
    for (std::size_t z = 0; z < v.dims().z; ++z)
        for (std::size_t y = 0; y < v.dims().y; ++y)
            for (std::size_t x = 0; x < v.dims().x; ++x)
                if (v.at(x, y, z)) {
                    c[0] += static_cast<double>(x);
                    c[1] += static_cast<double>(y);
                    c[2] += static_cast<double>(z);
                    ++n;
                }
    for (auto& e : c) e /= n;
    return c;
}

bool inside_any(const std::vector<shaperef::Stain>& stains, std::size_t x, std::size_t y, std::size_t z) {
    for (const auto& s : stains) {
        const double dx = static_cast<double>(x) - static_cast<double>(s.center[0]);
        const double dy = static_cast<double>(y) - static_cast<double>(s.center[1]);
        const double dz = static_cast<double>(z) - static_cast<double>(s.center[2]);
        if (dx * dx + dy * dy + dz * dz <= s.radius * s.radius) return true;
    }
    return false;
}

TEST(Affine, IdentityIsExact) {
    std::mt19937_64 rng(1);
    const auto v = oracle::random_volume(rng, {12, 10, 4}, 0.4);
    EXPECT_EQ(shaperef::apply_affine(v, {}), v);
}

TEST(Affine, RightAngleRotationsAreExact) {
    std::mt19937_64 rng(2);
    for (std::size_t n : {9U, 10U}) {
        const auto v = oracle::random_volume(rng, {n, n, 3}, 0.4);
        const auto r90 = shaperef::apply_affine(v, {.rotation_deg = 90.0});
        const auto r180 = shaperef::apply_affine(v, {.rotation_deg = 180.0});
        const auto r270 = shaperef::apply_affine(v, {.rotation_deg = 270.0});
        const auto r360 = shaperef::apply_affine(v, {.rotation_deg = 360.0});
        EXPECT_EQ(r360, v);
        for (std::size_t z = 0; z < 3; ++z)
            for (std::size_t y = 0; y < n; ++y)
                for (std::size_t x = 0; x < n; ++x) {
                    EXPECT_EQ(r90.at(x, y, z), v.at(y, n - 1 - x, z));
                    EXPECT_EQ(r180.at(x, y, z), v.at(n - 1 - x, n - 1 - y, z));
                    EXPECT_EQ(r270.at(x, y, z), v.at(n - 1 - y, x, z));
                }
    }
}

TEST(Affine, TranslationShiftsCentroid) {
    const auto v = blob_volume(40, 6, 8, 6, 0.3, 19.5, 19.5);
    const auto moved = shaperef::apply_affine(v, {.translation = {5.0, 0.0, 0.0}});
    const auto c0 = centroid(v);
    const auto c1 = centroid(moved);
    EXPECT_NEAR(c1[0] - c0[0], 5.0, 0.5);
    EXPECT_NEAR(c1[1] - c0[1], 0.0, 0.5);
    EXPECT_NEAR(c1[2] - c0[2], 0.0, 1e-12);
    const auto up = shaperef::apply_affine(v, {.translation = {0.0, 0.0, 1.0}});
    EXPECT_NEAR(centroid(up)[2] - c0[2], 1.0, 1e-12);
}

TEST(Affine, ScaleChangesAreaQuadratically) {
    const auto v = blob_volume(64, 3, 14, 14, 0.0, 31.5, 31.5);
    const auto big = shaperef::apply_affine(v, {.scale = 1.1});
    const auto small = shaperef::apply_affine(v, {.scale = 0.9});
    const double n0 = static_cast<double>(v.foreground_count());
    EXPECT_NEAR(static_cast<double>(big.foreground_count()) / n0, 1.21, 0.05);
    EXPECT_NEAR(static_cast<double>(small.foreground_count()) / n0, 0.81, 0.05);
    EXPECT_THROW((void)shaperef::apply_affine(v, {.scale = 0.0}), shaperef::ConfigError);
}

TEST(Affine, OutOfFieldBecomesBackground) {
    MaskVolume full({8, 8, 2}, {}, std::vector<std::uint8_t>(128, 1));
    const auto shifted = shaperef::apply_affine(full, {.translation = {3.0, 0.0, 0.0}});
    for (std::size_t z = 0; z < 2; ++z)
        for (std::size_t y = 0; y < 8; ++y)
            for (std::size_t x = 0; x < 8; ++x) EXPECT_EQ(shifted.at(x, y, z), x >= 3 ? 1 : 0);
}

TEST(Transform, DrawsStayInRanges) {
    shaperef::Rng rng(3);
    const shaperef::AugmentationRanges r;
    for (int t = 0; t < 200; ++t) {
        const auto p = shaperef::draw_transform(r, rng);
        EXPECT_LE(std::abs(p.rotation_deg), 15.0);
        EXPECT_GE(p.scale, 0.9);
        EXPECT_LE(p.scale, 1.1);
        EXPECT_LE(std::abs(p.translation[0]), 5.0);
        EXPECT_LE(std::abs(p.translation[1]), 5.0);
        EXPECT_EQ(p.translation[2], 0.0);
    }
    shaperef::AugmentationRanges bad;
    bad.scale_lo = 0.0;
    EXPECT_THROW(bad.validate(), shaperef::ConfigError);
    bad = {};
    bad.scale_hi = 0.5;
    EXPECT_THROW(bad.validate(), shaperef::ConfigError);
    bad = {};
    bad.translation[1] = -1.0;
    EXPECT_THROW(bad.validate(), shaperef::ConfigError);
}

TEST(Noise, ZeroCountsAreIdentity) {
    std::mt19937_64 rng(4);
    const auto v = oracle::random_volume(rng, {10, 10, 4}, 0.5);
    EXPECT_EQ(shaperef::apply_noise(v, NoiseParams::none(), 99), v);
    EXPECT_TRUE(NoiseParams::none().disabled());
}

TEST(Noise, DeterministicForSeed) {
    const auto v = blob_volume(32, 8, 9, 7, 0.2, 15.5, 15.5);
    const NoiseParams n;
    EXPECT_EQ(shaperef::apply_noise(v, n, 5), shaperef::apply_noise(v, n, 5));
    EXPECT_NE(shaperef::apply_noise(v, n, 5), shaperef::apply_noise(v, n, 6));
}

TEST(Noise, FalsePositivesOnlyGrow) {
    MaskVolume v({16, 16, 8}, {});
    for (std::size_t i = 0; i < v.size() / 2; ++i) v.set(i, true);
    const NoiseParams fp{3, 3, 0, 0, 2.0, 2.0};
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto out = shaperef::apply_noise(v, fp, seed);
        EXPECT_GE(out.foreground_count(), v.foreground_count());
        for (std::size_t i = 0; i < v.size(); ++i)
            if (v[i]) EXPECT_EQ(out[i], 1);
    }
}

TEST(Noise, OnlyVoxelsInsideStainsChange) {
    const auto v = blob_volume(32, 8, 10, 6, 0.7, 15.5, 15.5);
    const NoiseParams n;
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        shaperef::Rng rng(seed);
        const auto stains = shaperef::draw_stains(v, n, rng);
        const auto out = shaperef::apply_noise(v, n, seed);
        EXPECT_EQ(out, shaperef::paint_stains(v, stains));
        std::size_t fp = 0, fn = 0;
        for (const auto& s : stains) {
            EXPECT_EQ(v.at(s.center[0], s.center[1], s.center[2]) != 0, !s.foreground);
            EXPECT_GE(s.radius, 2.0);
            EXPECT_LE(s.radius, 6.0);
            (s.foreground ? fp : fn)++;
        }
        EXPECT_GE(fp, 1U);
        EXPECT_LE(fp, 4U);
        EXPECT_GE(fn, 1U);
        EXPECT_LE(fn, 4U);
        for (std::size_t z = 0; z < 8; ++z)
            for (std::size_t y = 0; y < 32; ++y)
                for (std::size_t x = 0; x < 32; ++x)
                    if (out.at(x, y, z) != v.at(x, y, z)) EXPECT_TRUE(inside_any(stains, x, y, z));
    }
}

TEST(Noise, MissingSitesSkipThatClass) {
    const MaskVolume full({6, 6, 3}, {}, std::vector<std::uint8_t>(108, 1));
    const MaskVolume empty({6, 6, 3}, {});
    const NoiseParams n;
    shaperef::Rng rng(7);
    for (const auto& s : shaperef::draw_stains(full, n, rng)) EXPECT_FALSE(s.foreground);
    for (const auto& s : shaperef::draw_stains(empty, n, rng)) EXPECT_TRUE(s.foreground);
    EXPECT_EQ(shaperef::apply_noise(empty, {0, 0, 1, 4, 2.0, 6.0}, 1), empty);
}

TEST(Noise, ParameterValidation) {
    EXPECT_THROW((NoiseParams{3, 2, 1, 1, 2.0, 3.0}).validate(), shaperef::ConfigError);
    EXPECT_THROW((NoiseParams{1, 2, 1, 1, 0.5, 3.0}).validate(), shaperef::ConfigError);
    EXPECT_THROW((NoiseParams{1, 2, 1, 1, 4.0, 3.0}).validate(), shaperef::ConfigError);
}

TEST(Triplet, ReproducibleAndBuiltFromSameShape) {
    const auto y = blob_volume(32, 8, 10, 7, 0.4, 15.5, 15.5);
    const shaperef::AugmentationConfig cfg;
    const auto a = shaperef::make_training_triplet(y, cfg, 42);
    const auto b = shaperef::make_training_triplet(y, cfg, 42);
    EXPECT_EQ(a.reference, b.reference);
    EXPECT_EQ(a.target, b.target);
    EXPECT_EQ(a.noisy, b.noisy);
    auto r1 = shaperef::make_rng(42, 0, shaperef::SeedRole::TransformT1);
    auto r2 = shaperef::make_rng(42, 0, shaperef::SeedRole::TransformT2);
    EXPECT_EQ(a.reference, shaperef::apply_affine(y, shaperef::draw_transform(cfg.transform, r1)));
    EXPECT_EQ(a.target, shaperef::apply_affine(y, shaperef::draw_transform(cfg.transform, r2)));
    EXPECT_EQ(a.noisy, shaperef::apply_noise(a.target, cfg.noise,
                                             shaperef::derive_seed(42, 0, shaperef::SeedRole::Noise)));
    EXPECT_EQ(a.reference.dims(), y.dims());
}

TEST(Triplet, NoiseDisabledKeepsTarget) {
    const auto y = blob_volume(32, 8, 10, 7, 0.4, 15.5, 15.5);
    shaperef::AugmentationConfig cfg;
    cfg.noise = NoiseParams::none();
    const auto t = shaperef::make_training_triplet(y, cfg, 3);
    EXPECT_EQ(t.noisy, t.target);
}

TEST(Triplet, NoisyDiffersFromTargetInMostDraws) {
    const auto y = blob_volume(64, 8, 16, 12, 0.4, 31.5, 31.5);
    const shaperef::AugmentationConfig cfg;
    int strictly_below = 0;
    for (std::uint64_t seed = 100; seed < 110; ++seed) {
        const auto t = shaperef::make_training_triplet(y, cfg, seed);
        const auto c = oracle::confusion(t.noisy, t.target);
        const double dice = 2.0 * static_cast<double>(c.tp) / static_cast<double>(2 * c.tp + c.fp + c.fn);
        if (dice < 1.0) ++strictly_below;
    }
    EXPECT_GE(strictly_below, 8);
}

TEST(Triplet, EmptyLabelIsError) {
    EXPECT_THROW((void)shaperef::make_training_triplet(MaskVolume({4, 4, 4}, {}), {}, 1), shaperef::EmptyShapeError);
}

TEST(Seeds, DerivationIsStableAndRoleSeparated) {
    const auto a = shaperef::derive_seed(1, 2, shaperef::SeedRole::Noise);
    EXPECT_EQ(a, shaperef::derive_seed(1, 2, shaperef::SeedRole::Noise));
    EXPECT_NE(a, shaperef::derive_seed(1, 2, shaperef::SeedRole::Triplet));
    EXPECT_NE(a, shaperef::derive_seed(1, 3, shaperef::SeedRole::Noise));
    EXPECT_NE(a, shaperef::derive_seed(2, 2, shaperef::SeedRole::Noise));
}

}  // namespace
