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
#include <complex>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "shaperef/contour.hpp"
#include "shaperef/volume.hpp"

namespace shaperef {

using Complex = std::complex<double>;

/// Z(0..N-1) under the 1/N-forward convention: Z(k) = (1/N) sum_m z(m) exp(-j 2 pi m k / N).
struct FourierCoefficients {
    std::vector<Complex> coeffs;

    [[nodiscard]] std::size_t size() const { return coeffs.size(); }
};

inline constexpr std::size_t kDescriptorSize = 10;
inline constexpr std::size_t kDefaultResample = 128;
/// Tag stored with dictionaries so descriptors built under other conventions are rejected.
inline constexpr std::string_view kDescriptorConvention = "dft-1/N;drop-k0;abs;div-|Z1|;k=1..5,N-5..N-1";

/// Normalized magnitudes at k = 1..5 then N-5..N-1. values[0] == 1 by construction.
struct ShapeDescriptor {
    std::array<double, kDescriptorSize> values{};

    friend bool operator==(const ShapeDescriptor&, const ShapeDescriptor&) = default;
};

double descriptor_distance(const ShapeDescriptor& a, const ShapeDescriptor& b);

std::vector<Complex> complex_encode(const Contour& contour);

/// Forward DFT of any length >= 1; radix-2 for powers of two, Bluestein otherwise.
FourierCoefficients dft(std::span<const Complex> z);

ShapeDescriptor normalize_descriptor(const FourierCoefficients& f);

/// Descriptor of a contour taken as-is (no resampling).
ShapeDescriptor contour_descriptor(const Contour& contour);

struct DescriptorOptions {
    /// Arc-length resample count; 0 keeps the raw traced boundary points.
    std::size_t resample = kDefaultResample;
};

/// largest_component -> trace_boundary -> resample -> encode -> dft -> normalize.
ShapeDescriptor compute_descriptor(const MaskSlice& slice, const DescriptorOptions& options = {});

}  // namespace shaperef
