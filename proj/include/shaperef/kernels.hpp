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

// Data-parallel compute kernels. Every kernel has a serial counterpart in
// reference_kernels.hpp that the tests compare against.
//
// Parallel loops only split work over independent outputs; each output element is
// accumulated in a fixed order, so results are bit-identical for any thread count.

#include <array>
#include <cstddef>
#include <span>

namespace shaperef::kernels {

/// Geometry of a 3x3x3, pad-1 convolution over [C, D, H, W] tensors.
struct ConvGeometry {
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::array<std::size_t, 3> in_extent{};  // D, H, W
    std::array<std::size_t, 3> stride{1, 1, 1};

    [[nodiscard]] std::array<std::size_t, 3> out_extent() const {
        return {(in_extent[0] - 1) / stride[0] + 1, (in_extent[1] - 1) / stride[1] + 1,
                (in_extent[2] - 1) / stride[2] + 1};
    }
    [[nodiscard]] std::size_t in_voxels() const { return in_extent[0] * in_extent[1] * in_extent[2]; }
    [[nodiscard]] std::size_t out_voxels() const {
        const auto o = out_extent();
        return o[0] * o[1] * o[2];
    }
};

inline constexpr std::size_t kKernelVolume = 27;

void conv3d_forward(const ConvGeometry& g, std::span<const double> x, std::span<const double> w,
                    std::span<const double> b, std::span<double> y);

/// Accumulates (+=) gradients into gx, gw, gb; any of them may be empty to skip.
void conv3d_backward(const ConvGeometry& g, std::span<const double> x, std::span<const double> w,
                     std::span<const double> gy, std::span<double> gx, std::span<double> gw, std::span<double> gb);

/// c (+)= op(a) * op(b) with a: [m, k] (or [k, m] if trans_a), b: [k, n] (or [n, k] if trans_b),
/// all row-major, c: [m, n].
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
          std::span<const double> b, std::span<double> c, bool accumulate);

/// Same as gemm for `batch` independent problems laid out back to back.
void batched_gemm(std::size_t batch, bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
                  std::span<const double> a, std::span<const double> b, std::span<double> c, bool accumulate);

/// Exact squared Euclidean distance from every voxel of a [nz, ny, nx] grid to the nearest
/// site (sites[i] != 0), with per-axis spacing. Voxels get +inf when there are no sites.
void squared_distance_transform(std::span<const unsigned char> sites, std::array<std::size_t, 3> extent_zyx,
                                std::array<double, 3> spacing_zyx, std::span<double> out);

}  // namespace shaperef::kernels
