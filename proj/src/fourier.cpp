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

#include "shaperef/fourier.hpp"

#include <bit>
#include <cmath>
#include <numbers>

#include "shaperef/errors.hpp"

namespace shaperef {

namespace {

constexpr double kDegenerateFirstHarmonic = 1e-12;

// In-place iterative radix-2 transform with the e^{sign j 2 pi mk/N} kernel, unscaled.
void fft_pow2(std::vector<Complex>& a, int sign) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        for (std::size_t k = 0; k < half; ++k) {
            // Twiddles evaluated directly keep the error independent of the stage count.
            const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(len);
            const Complex w(std::cos(angle), std::sin(angle));
            for (std::size_t start = 0; start < n; start += len) {
                const Complex u = a[start + k];
                const Complex v = a[start + k + half] * w;
                a[start + k] = u + v;
                a[start + k + half] = u - v;
            }
        }
    }
}

// Unscaled forward DFT of arbitrary length via the chirp-z identity mk = (m^2 + k^2 - (k-m)^2) / 2.
std::vector<Complex> bluestein(std::span<const Complex> z) {
    const std::size_t n = z.size();
    const std::size_t m = std::bit_ceil(2 * n - 1);
    std::vector<Complex> chirp(n);
    for (std::size_t k = 0; k < n; ++k) {
        // k^2 mod 2n keeps the angle argument small and exact.
        const std::size_t k2 = (k * k) % (2 * n);
        const double angle = std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n);
        chirp[k] = Complex(std::cos(angle), -std::sin(angle));
    }
    std::vector<Complex> a(m, Complex{});
    std::vector<Complex> b(m, Complex{});
    for (std::size_t k = 0; k < n; ++k) a[k] = z[k] * chirp[k];
    b[0] = std::conj(chirp[0]);
    for (std::size_t k = 1; k < n; ++k) {
        b[k] = std::conj(chirp[k]);
        b[m - k] = std::conj(chirp[k]);
    }
    fft_pow2(a, -1);
    fft_pow2(b, -1);
    for (std::size_t i = 0; i < m; ++i) a[i] *= b[i];
    fft_pow2(a, +1);
    std::vector<Complex> out(n);
    const double inv_m = 1.0 / static_cast<double>(m);
    for (std::size_t k = 0; k < n; ++k) out[k] = a[k] * inv_m * chirp[k];
    return out;
}

}  // namespace

double descriptor_distance(const ShapeDescriptor& a, const ShapeDescriptor& b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < kDescriptorSize; ++i) {
        const double d = a.values[i] - b.values[i];
        sum += d * d;
    }
    return std::sqrt(sum);
}

std::vector<Complex> complex_encode(const Contour& contour) {
    std::vector<Complex> z;
    z.reserve(contour.size());
    for (const auto& p : contour.points()) z.emplace_back(p.x, p.y);
    return z;
}

FourierCoefficients dft(std::span<const Complex> z) {
    const std::size_t n = z.size();
    if (n == 0) {
        throw ShapeError("dft of an empty sequence");
    }
    std::vector<Complex> out;
    if (std::has_single_bit(n)) {
        out.assign(z.begin(), z.end());
        fft_pow2(out, -1);
    } else {
        out = bluestein(z);
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    for (auto& c : out) c *= inv_n;
    return FourierCoefficients{std::move(out)};
}

ShapeDescriptor normalize_descriptor(const FourierCoefficients& f) {
    const std::size_t n = f.size();
    if (n < 2 * 5 + 1) {
        throw DegenerateShapeError("descriptor needs at least 11 coefficients, got " + std::to_string(n));
    }
    const double first = std::abs(f.coeffs[1]);
    if (first <= kDegenerateFirstHarmonic) {
        throw DegenerateShapeError("first harmonic vanishes; shape has no scale anchor");
    }
    ShapeDescriptor d;
    for (std::size_t i = 0; i < 5; ++i) {
        d.values[i] = std::abs(f.coeffs[i + 1]) / first;
        d.values[5 + i] = std::abs(f.coeffs[n - 5 + i]) / first;
    }
    d.values[0] = 1.0;
    return d;
}

ShapeDescriptor contour_descriptor(const Contour& contour) {
    const auto z = complex_encode(contour);
    return normalize_descriptor(dft(z));
}

ShapeDescriptor compute_descriptor(const MaskSlice& slice, const DescriptorOptions& options) {
    const Contour traced = trace_boundary(largest_component(slice));
    if (options.resample == 0) {
        return contour_descriptor(traced);
    }
    return contour_descriptor(resample_contour(traced, options.resample));
}

}  // namespace shaperef
