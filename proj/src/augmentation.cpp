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

#include "shaperef/augmentation.hpp"

#include <cmath>
#include <numbers>

#include "shaperef/errors.hpp"

namespace shaperef {

void AugmentationRanges::validate() const {
    if (!(rotation_deg >= 0.0) || !std::isfinite(rotation_deg)) throw ConfigError("rotation range must be >= 0");
    if (!(scale_lo > 0.0) || !(scale_hi >= scale_lo) || !std::isfinite(scale_hi)) {
        throw ConfigError("scale range must satisfy 0 < lo <= hi");
    }
    for (double t : translation) {
        if (!(t >= 0.0) || !std::isfinite(t)) throw ConfigError("translation range must be >= 0");
    }
}

TransformParams draw_transform(const AugmentationRanges& ranges, Rng& rng) {
    ranges.validate();
    TransformParams t;
    t.rotation_deg = uniform_real(rng, -ranges.rotation_deg, ranges.rotation_deg);
    t.scale = uniform_real(rng, ranges.scale_lo, ranges.scale_hi);
    for (std::size_t a = 0; a < 3; ++a) t.translation[a] = uniform_real(rng, -ranges.translation[a], ranges.translation[a]);
    return t;
}

MaskVolume apply_affine(const MaskVolume& v, const TransformParams& t) {
    if (!(t.scale > 0.0) || !std::isfinite(t.scale)) throw ConfigError("transform scale must be positive");
    const auto& d = v.dims();
    MaskVolume out(d, v.spacing());
    const double cx = (static_cast<double>(d.x) - 1.0) / 2.0;
    const double cy = (static_cast<double>(d.y) - 1.0) / 2.0;
    const double theta = t.rotation_deg * std::numbers::pi / 180.0;
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    // Inverse map: source = R^-1 (q - center - t) / scale + center.
    for (std::size_t z = 0; z < d.z; ++z) {
        const double sz = std::floor(static_cast<double>(z) - t.translation[2] + 0.5);
        if (sz < 0.0 || sz >= static_cast<double>(d.z)) continue;
        for (std::size_t y = 0; y < d.y; ++y) {
            for (std::size_t x = 0; x < d.x; ++x) {
                const double u = static_cast<double>(x) - cx - t.translation[0];
                const double w = static_cast<double>(y) - cy - t.translation[1];
                const double sx = std::floor((c * u + s * w) / t.scale + cx + 0.5);
                const double sy = std::floor((-s * u + c * w) / t.scale + cy + 0.5);
                if (sx < 0.0 || sy < 0.0 || sx >= static_cast<double>(d.x) || sy >= static_cast<double>(d.y)) continue;
                if (v.at(static_cast<std::size_t>(sx), static_cast<std::size_t>(sy), static_cast<std::size_t>(sz))) {
                    out.set(x, y, z, true);
                }
            }
        }
    }
    return out;
}

void NoiseParams::validate() const {
    if (fp_min > fp_max || fn_min > fn_max) throw ConfigError("stain count ranges must satisfy min <= max");
    if (!(radius_min >= 1.0) || !(radius_max >= radius_min) || !std::isfinite(radius_max)) {
        throw ConfigError("stain radii must satisfy 1 <= min <= max");
    }
}

std::vector<Stain> draw_stains(const MaskVolume& v, const NoiseParams& n, Rng& rng) {
    n.validate();
    const auto& d = v.dims();
    std::vector<std::size_t> background;
    std::vector<std::size_t> foreground;
    for (std::size_t i = 0; i < v.size(); ++i) (v[i] ? foreground : background).push_back(i);

    std::vector<Stain> stains;
    auto draw_class = [&](bool paint, std::size_t lo, std::size_t hi, const std::vector<std::size_t>& sites) {
        const auto count = static_cast<std::size_t>(uniform_int(rng, static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi)));
        if (sites.empty()) return;
        for (std::size_t k = 0; k < count; ++k) {
            const std::size_t i =
                sites[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(sites.size()) - 1))];
            Stain s;
            s.foreground = paint;
            s.center = {i % d.x, (i / d.x) % d.y, i / (d.x * d.y)};
            s.radius = uniform_real(rng, n.radius_min, n.radius_max);
            stains.push_back(s);
        }
    };
    draw_class(true, n.fp_min, n.fp_max, background);
    draw_class(false, n.fn_min, n.fn_max, foreground);
    return stains;
}

MaskVolume paint_stains(const MaskVolume& v, const std::vector<Stain>& stains) {
    std::vector<std::uint8_t> voxels(v.voxels().begin(), v.voxels().end());
    const auto& d = v.dims();
    for (const auto& s : stains) {
        const auto reach = static_cast<std::ptrdiff_t>(std::floor(s.radius));
        const double r2 = s.radius * s.radius;
        const std::uint8_t value = s.foreground ? 1 : 0;
        for (std::ptrdiff_t dz = -reach; dz <= reach; ++dz) {
            const auto z = static_cast<std::ptrdiff_t>(s.center[2]) + dz;
            if (z < 0 || z >= static_cast<std::ptrdiff_t>(d.z)) continue;
            for (std::ptrdiff_t dy = -reach; dy <= reach; ++dy) {
                const auto y = static_cast<std::ptrdiff_t>(s.center[1]) + dy;
                if (y < 0 || y >= static_cast<std::ptrdiff_t>(d.y)) continue;
                for (std::ptrdiff_t dx = -reach; dx <= reach; ++dx) {
                    const auto x = static_cast<std::ptrdiff_t>(s.center[0]) + dx;
                    if (x < 0 || x >= static_cast<std::ptrdiff_t>(d.x)) continue;
                    if (static_cast<double>(dx * dx + dy * dy + dz * dz) > r2) continue;
                    voxels[v.index(static_cast<std::size_t>(x), static_cast<std::size_t>(y), static_cast<std::size_t>(z))] = value;
                }
            }
        }
    }
    return MaskVolume(d, v.spacing(), std::move(voxels));
}

MaskVolume apply_noise(const MaskVolume& v, const NoiseParams& n, std::uint64_t seed) {
    Rng rng(seed);
    return paint_stains(v, draw_stains(v, n, rng));
}

Triplet make_training_triplet(const MaskVolume& y, const AugmentationConfig& config, std::uint64_t seed) {
    if (y.foreground_count() == 0) throw EmptyShapeError("training label has no foreground");
    Rng r1 = make_rng(seed, 0, SeedRole::TransformT1);
    Rng r2 = make_rng(seed, 0, SeedRole::TransformT2);
    Triplet t;
    t.reference = apply_affine(y, draw_transform(config.transform, r1));
    t.target = apply_affine(y, draw_transform(config.transform, r2));
    t.noisy = apply_noise(t.target, config.noise, derive_seed(seed, 0, SeedRole::Noise));
    return t;
}

}  // namespace shaperef
