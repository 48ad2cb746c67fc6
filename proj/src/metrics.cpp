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

#include "shaperef/metrics.hpp"

#include <cmath>
#include <cstdint>

#include <json.hpp>

#include "shaperef/errors.hpp"
#include "shaperef/kernels.hpp"

namespace shaperef {

namespace {

void require_same_dims(const MaskVolume& a, const MaskVolume& b) {
    if (!(a.dims() == b.dims())) {
        throw ShapeError("masks have different dims");
    }
}

struct Confusion {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;
};

Confusion confusion(const MaskVolume& pred, const MaskVolume& gt) {
    require_same_dims(pred, gt);
    Confusion c;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred[i] != 0;
        const bool g = gt[i] != 0;
        if (p && g) ++c.tp;
        else if (p) ++c.fp;
        else if (g) ++c.fn;
        else ++c.tn;
    }
    return c;
}

// Sum over surface voxels of `from` of the distance to the nearest surface voxel of `to`.
double directed_surface_sum(const std::vector<std::uint8_t>& from, const std::vector<std::uint8_t>& to,
                            const MaskVolume& geometry, std::size_t& count) {
    const auto& d = geometry.dims();
    const auto& s = geometry.spacing();
    std::vector<double> dist(to.size());
    kernels::squared_distance_transform(to, {d.z, d.y, d.x}, {s.z, s.y, s.x}, dist);
    double sum = 0.0;
    for (std::size_t i = 0; i < from.size(); ++i) {
        if (from[i]) {
            sum += std::sqrt(dist[i]);
            ++count;
        }
    }
    return sum;
}

}  // namespace

double dice(const MaskVolume& a, const MaskVolume& b) {
    const Confusion c = confusion(a, b);
    const std::size_t denom = 2 * c.tp + c.fp + c.fn;
    if (denom == 0) return 1.0;
    return 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

std::vector<std::uint8_t> surface_mask(const MaskVolume& v) {
    const auto& d = v.dims();
    std::vector<std::uint8_t> surface(v.size(), 0);
    auto background = [&](std::int64_t x, std::int64_t y, std::int64_t z) {
        if (x < 0 || y < 0 || z < 0 || x >= static_cast<std::int64_t>(d.x) || y >= static_cast<std::int64_t>(d.y) ||
            z >= static_cast<std::int64_t>(d.z)) {
            return true;
        }
        return v.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y), static_cast<std::size_t>(z)) == 0;
    };
    for (std::size_t z = 0; z < d.z; ++z)
        for (std::size_t y = 0; y < d.y; ++y)
            for (std::size_t x = 0; x < d.x; ++x) {
                if (!v.at(x, y, z)) continue;
                const auto xi = static_cast<std::int64_t>(x);
                const auto yi = static_cast<std::int64_t>(y);
                const auto zi = static_cast<std::int64_t>(z);
                if (background(xi - 1, yi, zi) || background(xi + 1, yi, zi) || background(xi, yi - 1, zi) ||
                    background(xi, yi + 1, zi) || background(xi, yi, zi - 1) || background(xi, yi, zi + 1)) {
                    surface[v.index(x, y, z)] = 1;
                }
            }
    return surface;
}

double asd(const MaskVolume& a, const MaskVolume& b) {
    require_same_dims(a, b);
    if (!(a.spacing() == b.spacing())) {
        throw ShapeError("masks have different spacing");
    }
    if (a.foreground_count() == 0 || b.foreground_count() == 0) {
        throw UndefinedMetricError("average surface distance needs two non-empty masks");
    }
    const auto sa = surface_mask(a);
    const auto sb = surface_mask(b);
    std::size_t count = 0;
    const double total = directed_surface_sum(sa, sb, a, count) + directed_surface_sum(sb, sa, a, count);
    return total / static_cast<double>(count);
}

SensitivitySpecificity sen_spe(const MaskVolume& pred, const MaskVolume& gt) {
    const Confusion c = confusion(pred, gt);
    SensitivitySpecificity r;
    if (c.tp + c.fn == 0) {
        r.sensitivity_degenerate = true;
    } else {
        r.sensitivity = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    }
    if (c.tn + c.fp == 0) {
        r.specificity_degenerate = true;
    } else {
        r.specificity = static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
    }
    return r;
}

MetricReport evaluate(const MaskVolume& pred, const MaskVolume& gt) {
    MetricReport r;
    r.dice = dice(pred, gt);
    const auto ss = sen_spe(pred, gt);
    r.sensitivity = ss.sensitivity;
    r.specificity = ss.specificity;
    if (pred.foreground_count() == 0 && gt.foreground_count() == 0) r.flags.emplace_back("dice_both_empty");
    if (ss.sensitivity_degenerate) r.flags.emplace_back("sensitivity_degenerate");
    if (ss.specificity_degenerate) r.flags.emplace_back("specificity_degenerate");
    try {
        r.asd_mm = asd(pred, gt);
    } catch (const UndefinedMetricError&) {
        r.flags.emplace_back("asd_undefined");
    }
    return r;
}

std::string report_to_json(const MetricReport& report) {
    nlohmann::ordered_json j;
    j["dice"] = report.dice;
    j["asd_mm"] = report.asd_mm ? nlohmann::ordered_json(*report.asd_mm) : nlohmann::ordered_json(nullptr);
    j["sensitivity"] = report.sensitivity;
    j["specificity"] = report.specificity;
    j["flags"] = report.flags;
    return j.dump();
}

}  // namespace shaperef
