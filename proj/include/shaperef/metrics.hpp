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

#include <optional>
#include <string>
#include <vector>

#include "shaperef/volume.hpp"

namespace shaperef {

/// 2|A and B| / (|A| + |B|); 1 when both masks are empty.
double dice(const MaskVolume& a, const MaskVolume& b);

/// Foreground voxels with at least one 6-connected background neighbor; the volume
/// border counts as background.
std::vector<std::uint8_t> surface_mask(const MaskVolume& v);

/// Symmetric average surface distance in millimeters: the mean, over the union of both
/// surface voxel sets, of each voxel's distance to the nearest surface voxel of the other mask.
double asd(const MaskVolume& a, const MaskVolume& b);

struct SensitivitySpecificity {
    double sensitivity = 1.0;
    double specificity = 1.0;
    bool sensitivity_degenerate = false;  // TP + FN == 0
    bool specificity_degenerate = false;  // TN + FP == 0
};

SensitivitySpecificity sen_spe(const MaskVolume& pred, const MaskVolume& gt);

struct MetricReport {
    double dice = 0.0;
    std::optional<double> asd_mm;  // empty when either mask has no foreground
    double sensitivity = 0.0;
    double specificity = 0.0;
    std::vector<std::string> flags;
};

MetricReport evaluate(const MaskVolume& pred, const MaskVolume& gt);

/// {"dice", "asd_mm", "sensitivity", "specificity", "flags"}; asd_mm is null when undefined.
std::string report_to_json(const MetricReport& report);

}  // namespace shaperef
