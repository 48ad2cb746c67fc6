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

#include "shaperef/contour.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <set>
#include <utility>

#include "shaperef/errors.hpp"

namespace shaperef {

namespace {

// Clockwise on screen (y grows downward): E, SE, S, SW, W, NW, N, NE.
constexpr std::array<std::array<int, 2>, 8> kMoore{{{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}}};
constexpr int kWest = 4;

int direction_of(int dx, int dy) {
    for (int d = 0; d < 8; ++d) {
        if (kMoore[d][0] == dx && kMoore[d][1] == dy) return d;
    }
    return -1;
}

// Labels 8-connected components; returns per-pixel labels (0 = background) and sizes
// indexed by label - 1, in order of first pixel in row-major scan.
std::pair<std::vector<std::uint32_t>, std::vector<std::size_t>> label_components(const MaskSlice& slice) {
    const std::size_t w = slice.width();
    const std::size_t h = slice.height();
    std::vector<std::uint32_t> labels(w * h, 0);
    std::vector<std::size_t> sizes;
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < w * h; ++start) {
        if (slice.pixels()[start] == 0 || labels[start] != 0) continue;
        const auto label = static_cast<std::uint32_t>(sizes.size() + 1);
        std::size_t size = 0;
        labels[start] = label;
        stack.push_back(start);
        while (!stack.empty()) {
            const std::size_t p = stack.back();
            stack.pop_back();
            ++size;
            const auto pi = static_cast<std::ptrdiff_t>(p % w);
            const auto pj = static_cast<std::ptrdiff_t>(p / w);
            for (const auto& off : kMoore) {
                const std::ptrdiff_t qi = pi + off[0];
                const std::ptrdiff_t qj = pj + off[1];
                if (!slice.foreground(qi, qj)) continue;
                const std::size_t q = static_cast<std::size_t>(qi) + w * static_cast<std::size_t>(qj);
                if (labels[q] == 0) {
                    labels[q] = label;
                    stack.push_back(q);
                }
            }
        }
        sizes.push_back(size);
    }
    return {std::move(labels), std::move(sizes)};
}

}  // namespace

Contour::Contour(std::vector<Point2> points) : points_(std::move(points)) {
    const std::size_t n = points_.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (points_[i] == points_[(i + 1) % n]) {
            throw DegenerateShapeError("contour has repeated consecutive points");
        }
    }
    std::set<std::pair<double, double>> distinct;
    for (const auto& p : points_) distinct.emplace(p.x, p.y);
    if (distinct.size() < 3) {
        throw DegenerateShapeError("contour needs at least 3 distinct points, got " + std::to_string(distinct.size()));
    }
}

double Contour::perimeter() const {
    double total = 0.0;
    const std::size_t n = points_.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = points_[i];
        const auto& b = points_[(i + 1) % n];
        total += std::hypot(b.x - a.x, b.y - a.y);
    }
    return total;
}

std::size_t count_components(const MaskSlice& slice) { return label_components(slice).second.size(); }

MaskSlice largest_component(const MaskSlice& slice) {
    auto [labels, sizes] = label_components(slice);
    if (sizes.empty()) {
        throw EmptyShapeError("slice has no foreground pixels");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < sizes.size(); ++i) {
        if (sizes[i] > sizes[best]) best = i;
    }
    const auto keep = static_cast<std::uint32_t>(best + 1);
    MaskSlice out(slice.width(), slice.height());
    for (std::size_t j = 0; j < slice.height(); ++j)
        for (std::size_t i = 0; i < slice.width(); ++i)
            if (labels[i + slice.width() * j] == keep) out.set(i, j, true);
    return out;
}

Contour trace_boundary(const MaskSlice& slice) {
    const std::size_t w = slice.width();
    std::ptrdiff_t sx = -1;
    std::ptrdiff_t sy = -1;
    for (std::size_t p = 0; p < slice.pixels().size(); ++p) {
        if (slice.pixels()[p] != 0) {
            sx = static_cast<std::ptrdiff_t>(p % w);
            sy = static_cast<std::ptrdiff_t>(p / w);
            break;
        }
    }
    if (sx < 0) {
        throw EmptyShapeError("slice has no foreground pixels");
    }

    std::vector<std::array<std::ptrdiff_t, 2>> trace{{sx, sy}};
    std::ptrdiff_t px = sx;
    std::ptrdiff_t py = sy;
    int backtrack = kWest;  // the start pixel is entered from its (background) west side
    const std::size_t cap = 4 * slice.foreground_count() + 8;
    std::array<std::ptrdiff_t, 2> first_step{-1, -1};
    bool have_first = false;

    while (trace.size() <= cap) {
        int found = -1;
        for (int i = 1; i <= 8; ++i) {
            const int d = (backtrack + i) % 8;
            if (slice.foreground(px + kMoore[d][0], py + kMoore[d][1])) {
                found = d;
                break;
            }
        }
        if (found < 0) break;  // isolated pixel
        const std::ptrdiff_t nx = px + kMoore[found][0];
        const std::ptrdiff_t ny = py + kMoore[found][1];
        if (px == sx && py == sy) {
            if (have_first && nx == first_step[0] && ny == first_step[1]) break;
            if (!have_first) {
                first_step = {nx, ny};
                have_first = true;
            }
        }
        // The last background cell examined before the hit becomes the new backtrack.
        const int prev = (found + 7) % 8;
        const std::ptrdiff_t bx = px + kMoore[prev][0];
        const std::ptrdiff_t by = py + kMoore[prev][1];
        backtrack = direction_of(static_cast<int>(bx - nx), static_cast<int>(by - ny));
        px = nx;
        py = ny;
        if (px == sx && py == sy && backtrack == kWest) break;  // Jacob's stopping criterion
        trace.push_back({px, py});
    }
    // A walk that returns to the start without satisfying Jacob's rule leaves the start
    // pixel appended as the final point.
    if (trace.size() > 1 && trace.back() == trace.front()) trace.pop_back();

    std::vector<Point2> points;
    points.reserve(trace.size());
    for (const auto& t : trace) {
        points.push_back({static_cast<double>(t[0] - sx), static_cast<double>(t[1] - sy)});
    }
    return Contour(std::move(points));
}

Contour resample_contour(const Contour& contour, std::size_t samples) {
    if (samples < 8) {
        throw ConfigError("resample count must be at least 8");
    }
    const auto pts = contour.points();
    const std::size_t n = pts.size();
    std::vector<double> cumulative(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = pts[i];
        const auto& b = pts[(i + 1) % n];
        cumulative[i + 1] = cumulative[i] + std::hypot(b.x - a.x, b.y - a.y);
    }
    const double perimeter = cumulative[n];
    if (!(perimeter > 0.0)) {
        throw DegenerateShapeError("contour has zero perimeter");
    }
    std::vector<Point2> out;
    out.reserve(samples);
    std::size_t seg = 0;
    for (std::size_t k = 0; k < samples; ++k) {
        const double target = perimeter * static_cast<double>(k) / static_cast<double>(samples);
        while (seg + 1 < n && cumulative[seg + 1] <= target) ++seg;
        const double len = cumulative[seg + 1] - cumulative[seg];
        const double t = len > 0.0 ? (target - cumulative[seg]) / len : 0.0;
        const auto& a = pts[seg];
        const auto& b = pts[(seg + 1) % n];
        out.push_back({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
    }
    return Contour(std::move(out));
}

}  // namespace shaperef
