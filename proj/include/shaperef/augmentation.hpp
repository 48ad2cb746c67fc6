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

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "shaperef/random.hpp"
#include "shaperef/volume.hpp"

namespace shaperef {

/// One in-plane similarity transform plus a translation, applied about the volume center.
struct TransformParams {
    double rotation_deg = 0.0;  // about the z axis
    double scale = 1.0;         // in-plane (x, y)
    std::array<double, 3> translation{0.0, 0.0, 0.0};  // voxels along x, y, z
};

/// Ranges the random transforms are drawn from: rotation in [-R, R], scale in
/// [scale_lo, scale_hi], translation in [-t, t] per axis.
struct AugmentationRanges {
    double rotation_deg = 15.0;
    double scale_lo = 0.9;
    double scale_hi = 1.1;
    std::array<double, 3> translation{5.0, 5.0, 0.0};

    void validate() const;
};

TransformParams draw_transform(const AugmentationRanges& ranges, Rng& rng);

/// Nearest-neighbor resampling of v under `t`; voxels mapped from outside the volume become 0.
MaskVolume apply_affine(const MaskVolume& v, const TransformParams& t);

/// Stain counts are drawn uniformly from [min, max] per class, radii from [radius_min, radius_max].
struct NoiseParams {
    std::size_t fp_min = 1;
    std::size_t fp_max = 4;
    std::size_t fn_min = 1;
    std::size_t fn_max = 4;
    double radius_min = 2.0;
    double radius_max = 6.0;

    void validate() const;
    [[nodiscard]] bool disabled() const { return fp_max == 0 && fn_max == 0; }
    static NoiseParams none() { return {0, 0, 0, 0, 1.0, 1.0}; }
};

struct Stain {
    bool foreground = true;  // true paints 1 (false positive), false paints 0 (false negative)
    std::array<std::size_t, 3> center{};  // x, y, z
    double radius = 1.0;
};

/// False-positive stains are centered on background voxels of v, false-negative stains on its
/// foreground voxels. A class with no available centers is skipped.
std::vector<Stain> draw_stains(const MaskVolume& v, const NoiseParams& n, Rng& rng);

/// Paints solid spheres (in voxel units) in order: every false positive, then every false negative.
MaskVolume paint_stains(const MaskVolume& v, const std::vector<Stain>& stains);

MaskVolume apply_noise(const MaskVolume& v, const NoiseParams& n, std::uint64_t seed);

struct AugmentationConfig {
    AugmentationRanges transform;
    NoiseParams noise;

    void validate() const {
        transform.validate();
        noise.validate();
    }
};

struct Triplet {
    MaskVolume reference;  // T1(y)
    MaskVolume target;     // T2(y)
    MaskVolume noisy;      // stains applied to T2(y)
};

/// Throws EmptyShapeError when y has no foreground.
Triplet make_training_triplet(const MaskVolume& y, const AugmentationConfig& config, std::uint64_t seed);

}  // namespace shaperef
