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

#include "shaperef/reference_kernels.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>

#include "shaperef/errors.hpp"

namespace shaperef::reference {

using kernels::ConvGeometry;

void conv3d_forward(const ConvGeometry& g, std::span<const double> x, std::span<const double> w,
                    std::span<const double> b, std::span<double> y) {
    const auto [D, H, W] = g.in_extent;
    const auto [OD, OH, OW] = g.out_extent();
    if (y.size() != g.out_channels * OD * OH * OW || x.size() != g.in_channels * D * H * W) {
        throw ShapeError("conv3d buffer sizes do not match geometry");
    }
    for (std::size_t co = 0; co < g.out_channels; ++co)
        for (std::size_t od = 0; od < OD; ++od)
            for (std::size_t oh = 0; oh < OH; ++oh)
                for (std::size_t ow = 0; ow < OW; ++ow) {
                    double s = b.empty() ? 0.0 : b[co];
                    for (std::size_t ci = 0; ci < g.in_channels; ++ci)
                        for (std::size_t kd = 0; kd < 3; ++kd)
                            for (std::size_t kh = 0; kh < 3; ++kh)
                                for (std::size_t kw = 0; kw < 3; ++kw) {
                                    const auto id = static_cast<std::int64_t>(od * g.stride[0] + kd) - 1;
                                    const auto ih = static_cast<std::int64_t>(oh * g.stride[1] + kh) - 1;
                                    const auto iw = static_cast<std::int64_t>(ow * g.stride[2] + kw) - 1;
                                    if (id < 0 || ih < 0 || iw < 0 || id >= static_cast<std::int64_t>(D) ||
                                        ih >= static_cast<std::int64_t>(H) || iw >= static_cast<std::int64_t>(W)) {
                                        continue;
                                    }
                                    s += w[((co * g.in_channels + ci) * 3 + kd) * 9 + kh * 3 + kw] *
                                         x[((ci * D + static_cast<std::size_t>(id)) * H + static_cast<std::size_t>(ih)) * W +
                                           static_cast<std::size_t>(iw)];
                                }
                    y[((co * OD + od) * OH + oh) * OW + ow] = s;
                }
}

void conv3d_backward(const ConvGeometry& g, std::span<const double> x, std::span<const double> w,
                     std::span<const double> gy, std::span<double> gx, std::span<double> gw, std::span<double> gb) {
    const auto [D, H, W] = g.in_extent;
    const auto [OD, OH, OW] = g.out_extent();
    for (std::size_t co = 0; co < g.out_channels; ++co)
        for (std::size_t od = 0; od < OD; ++od)
            for (std::size_t oh = 0; oh < OH; ++oh)
                for (std::size_t ow = 0; ow < OW; ++ow) {
                    const double grad = gy[((co * OD + od) * OH + oh) * OW + ow];
                    if (!gb.empty()) gb[co] += grad;
                    for (std::size_t ci = 0; ci < g.in_channels; ++ci)
                        for (std::size_t kd = 0; kd < 3; ++kd)
                            for (std::size_t kh = 0; kh < 3; ++kh)
                                for (std::size_t kw = 0; kw < 3; ++kw) {
                                    const auto id = static_cast<std::int64_t>(od * g.stride[0] + kd) - 1;
                                    const auto ih = static_cast<std::int64_t>(oh * g.stride[1] + kh) - 1;
                                    const auto iw = static_cast<std::int64_t>(ow * g.stride[2] + kw) - 1;
                                    if (id < 0 || ih < 0 || iw < 0 || id >= static_cast<std::int64_t>(D) ||
                                        ih >= static_cast<std::int64_t>(H) || iw >= static_cast<std::int64_t>(W)) {
                                        continue;
                                    }
                                    const std::size_t xi =
                                        ((ci * D + static_cast<std::size_t>(id)) * H + static_cast<std::size_t>(ih)) * W +
                                        static_cast<std::size_t>(iw);
                                    const std::size_t wi = ((co * g.in_channels + ci) * 3 + kd) * 9 + kh * 3 + kw;
                                    if (!gw.empty()) gw[wi] += grad * x[xi];
                                    if (!gx.empty()) gx[xi] += grad * w[wi];
                                }
                }
}

void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
          std::span<const double> b, std::span<double> c, bool accumulate) {
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) {
                const double av = trans_a ? a[p * m + i] : a[i * k + p];
                const double bv = trans_b ? b[j * k + p] : b[p * n + j];
                s += av * bv;
            }
            c[i * n + j] = accumulate ? c[i * n + j] + s : s;
        }
}

void squared_distance_transform(std::span<const unsigned char> sites, std::array<std::size_t, 3> extent_zyx,
                                std::array<double, 3> spacing_zyx, std::span<double> out) {
    const auto [nz, ny, nx] = extent_zyx;
    for (std::size_t p = 0; p < nz * ny * nx; ++p) {
        const double pz = static_cast<double>(p / (ny * nx));
        const double py = static_cast<double>((p / nx) % ny);
        const double px = static_cast<double>(p % nx);
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t q = 0; q < nz * ny * nx; ++q) {
            if (!sites[q]) continue;
            const double dz = spacing_zyx[0] * (pz - static_cast<double>(q / (ny * nx)));
            const double dy = spacing_zyx[1] * (py - static_cast<double>((q / nx) % ny));
            const double dx = spacing_zyx[2] * (px - static_cast<double>(q % nx));
            best = std::min(best, dz * dz + dy * dy + dx * dx);
        }
        out[p] = best;
    }
}

}  // namespace shaperef::reference
