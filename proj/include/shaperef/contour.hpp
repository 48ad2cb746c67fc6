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

#include <cstddef>
#include <span>
#include <vector>

#include "shaperef/volume.hpp"

namespace shaperef {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

/// Closed polygonal curve; the last point connects back to the first, which is not repeated.
class Contour {
public:
    Contour() = default;
    /// Throws DegenerateShapeError unless there are at least 3 distinct points and
    /// consecutive points (including last -> first) differ.
    explicit Contour(std::vector<Point2> points);

    [[nodiscard]] std::span<const Point2> points() const { return points_; }
    [[nodiscard]] std::size_t size() const { return points_.size(); }
    [[nodiscard]] const Point2& operator[](std::size_t i) const { return points_[i]; }

    [[nodiscard]] double perimeter() const;

private:
    std::vector<Point2> points_;
};

/// Keeps only the largest 8-connected foreground component. Ties go to the component
/// whose first pixel comes first in row-major order.
MaskSlice largest_component(const MaskSlice& slice);

/// Number of 8-connected foreground components.
std::size_t count_components(const MaskSlice& slice);

/// Moore-neighbor trace of the outer boundary, clockwise in image coordinates (y down),
/// starting at the top-most then left-most foreground pixel. Points are pixel centers
/// translated so the start pixel sits at the origin. Stops on Jacob's criterion, or when
/// the first transition out of the start pixel repeats.
Contour trace_boundary(const MaskSlice& slice);

/// `samples` points spaced uniformly by arc length along the closed polygon, starting at
/// its first point.
Contour resample_contour(const Contour& contour, std::size_t samples);

}  // namespace shaperef
