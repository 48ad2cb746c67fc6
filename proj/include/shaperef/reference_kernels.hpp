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

// Straightforward serial versions of the kernels in kernels.hpp, kept for testing and
// benchmarking. They loop in the textbook order and make no attempt at speed.

#include <span>

#include "shaperef/kernels.hpp"

namespace shaperef::reference {

void conv3d_forward(const kernels::ConvGeometry& g, std::span<const double> x, std::span<const double> w,
                    std::span<const double> b, std::span<double> y);

void conv3d_backward(const kernels::ConvGeometry& g, std::span<const double> x, std::span<const double> w,
                     std::span<const double> gy, std::span<double> gx, std::span<double> gw, std::span<double> gb);

void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
          std::span<const double> b, std::span<double> c, bool accumulate);

/// Brute force over every (voxel, site) pair.
void squared_distance_transform(std::span<const unsigned char> sites, std::array<std::size_t, 3> extent_zyx,
                                std::array<double, 3> spacing_zyx, std::span<double> out);

}  // namespace shaperef::reference
