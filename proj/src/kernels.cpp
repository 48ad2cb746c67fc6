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

#include "shaperef/kernels.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <vector>

#include "shaperef/errors.hpp"

namespace shaperef::kernels {

namespace {

using Index = std::int64_t;

void check_conv(const ConvGeometry& g, std::size_t x, std::size_t w, std::size_t b, std::size_t y) {
    for (auto s : g.stride) {
        if (s != 1 && s != 2) throw ShapeError("conv3d stride must be 1 or 2");
    }
    if (x != g.in_channels * g.in_voxels() || w != g.out_channels * g.in_channels * kKernelVolume ||
        (b != 0 && b != g.out_channels) || y != g.out_channels * g.out_voxels()) {
        throw ShapeError("conv3d buffer sizes do not match geometry");
    }
}

// Zero-padded copy of a [C, D, H, W] map with one voxel of padding on every side. With stride 2
// along W each padded row is stored as its even entries followed by its odd entries, so the three
// taps of output column ow all read contiguous runs starting at ow.
class PaddedMap {
public:
    PaddedMap(std::size_t channels, std::array<std::size_t, 3> extent, std::size_t w_stride)
        : channels_(channels),
          dp_(extent[0] + 2),
          hp_(extent[1] + 2),
          wp_(extent[2] + 2),
          half_(w_stride == 2 ? (wp_ + 1) / 2 : 0),
          data_(channels * dp_ * hp_ * wp_, 0.0) {
        offset_ = w_stride == 1 ? std::array<std::size_t, 3>{0, 1, 2} : std::array<std::size_t, 3>{0, half_, 1};
    }

    [[nodiscard]] std::size_t slot(std::size_t j) const { return half_ == 0 ? j : (j % 2) * half_ + j / 2; }
    [[nodiscard]] double* row(std::size_t c, std::size_t d, std::size_t h) { return data_.data() + ((c * dp_ + d) * hp_ + h) * wp_; }
    [[nodiscard]] const double* row(std::size_t c, std::size_t d, std::size_t h) const {
        return data_.data() + ((c * dp_ + d) * hp_ + h) * wp_;
    }
    [[nodiscard]] const std::array<std::size_t, 3>& tap_offset() const { return offset_; }

    void load(const double* src, std::size_t d, std::size_t h, std::size_t w) {
        for (std::size_t c = 0; c < channels_; ++c)
            for (std::size_t z = 0; z < d; ++z)
                for (std::size_t y = 0; y < h; ++y) {
                    double* r = row(c, z + 1, y + 1);
                    const double* s = src + ((c * d + z) * h + y) * w;
                    for (std::size_t x = 0; x < w; ++x) r[slot(x + 1)] = s[x];
                }
    }

    // Adds the interior of channel c into dst [D, H, W].
    void add_interior(std::size_t c, double* dst, std::size_t d, std::size_t h, std::size_t w) const {
        for (std::size_t z = 0; z < d; ++z)
            for (std::size_t y = 0; y < h; ++y) {
                const double* r = row(c, z + 1, y + 1);
                double* o = dst + (z * h + y) * w;
                for (std::size_t x = 0; x < w; ++x) o[x] += r[slot(x + 1)];
            }
    }


private:
    std::size_t channels_, dp_, hp_, wp_, half_;
    std::vector<double> data_;
    std::array<std::size_t, 3> offset_{};
};

// y[co, od, oh, :] (+)= bias + sum over (ci, kd, kh, kw) of w * x, accumulated in that order.
void conv_rows(std::size_t in_channels, std::size_t out_channels, const std::array<std::size_t, 3>& out,
               const std::array<std::size_t, 3>& stride, const PaddedMap& xp, const double* w, const double* b,
               double* y, bool accumulate) {
    const auto [OD, OH, OW] = out;
    const auto off = xp.tap_offset();
    const Index rows = static_cast<Index>(OD * OH);
#pragma omp parallel
    {
        std::vector<double> acc(OW);
#pragma omp for schedule(static)
        for (Index r = 0; r < rows; ++r) {
            const std::size_t od = static_cast<std::size_t>(r) / OH;
            const std::size_t oh = static_cast<std::size_t>(r) % OH;
            for (std::size_t co = 0; co < out_channels; ++co) {
                double* yrow = y + ((co * OD + od) * OH + oh) * OW;
                if (accumulate) {
                    std::copy(yrow, yrow + OW, acc.begin());
                } else {
                    std::fill(acc.begin(), acc.end(), b == nullptr ? 0.0 : b[co]);
                }
                double* a = acc.data();
                for (std::size_t ci = 0; ci < in_channels; ++ci) {
                    const double* wk = w + (co * in_channels + ci) * kKernelVolume;
                    for (std::size_t kd = 0; kd < 3; ++kd) {
                        for (std::size_t kh = 0; kh < 3; ++kh) {
                            const double* xr = xp.row(ci, od * stride[0] + kd, oh * stride[1] + kh);
                            const double* x0 = xr + off[0];
                            const double* x1 = xr + off[1];
                            const double* x2 = xr + off[2];
                            const double w0 = wk[(kd * 3 + kh) * 3];
                            const double w1 = wk[(kd * 3 + kh) * 3 + 1];
                            const double w2 = wk[(kd * 3 + kh) * 3 + 2];
#pragma omp simd
                            for (std::size_t ow = 0; ow < OW; ++ow) a[ow] = a[ow] + w0 * x0[ow] + w1 * x1[ow] + w2 * x2[ow];
                        }
                    }
                }
                std::copy(acc.begin(), acc.end(), yrow);
            }
        }
    }
}

constexpr std::size_t kLanes = 8;

}  // namespace

void conv3d_forward(const ConvGeometry& g, std::span<const double> x, std::span<const double> w,
                    std::span<const double> b, std::span<double> y) {
    check_conv(g, x.size(), w.size(), b.size(), y.size());
    PaddedMap xp(g.in_channels, g.in_extent, g.stride[2]);
    xp.load(x.data(), g.in_extent[0], g.in_extent[1], g.in_extent[2]);
    conv_rows(g.in_channels, g.out_channels, g.out_extent(), g.stride, xp, w.data(), b.empty() ? nullptr : b.data(),
              y.data(), false);
}

void conv3d_backward(const ConvGeometry& g, std::span<const double> x, std::span<const double> w,
                     std::span<const double> gy, std::span<double> gx, std::span<double> gw, std::span<double> gb) {
    check_conv(g, x.size(), w.size(), 0, gy.size());
    const auto [D, H, W] = g.in_extent;
    const auto out = g.out_extent();
    const auto [OD, OH, OW] = out;
    const std::size_t ovox = g.out_voxels();
    const std::size_t cin = g.in_channels;
    const std::size_t cout = g.out_channels;

    if (!gb.empty()) {
        if (gb.size() != cout) throw ShapeError("conv3d bias gradient size mismatch");
        for (std::size_t co = 0; co < cout; ++co) {
            double s = 0.0;
            const double* row = gy.data() + co * ovox;
            for (std::size_t i = 0; i < ovox; ++i) s += row[i];
            gb[co] += s;
        }
    }

    if (!gw.empty()) {
        if (gw.size() != w.size()) throw ShapeError("conv3d weight gradient size mismatch");
        PaddedMap xp(cin, g.in_extent, g.stride[2]);
        xp.load(x.data(), D, H, W);
        const auto off = xp.tap_offset();
        const Index pairs = static_cast<Index>(cout * cin);
#pragma omp parallel for schedule(static)
        for (Index p = 0; p < pairs; ++p) {
            const std::size_t co = static_cast<std::size_t>(p) / cin;
            const std::size_t ci = static_cast<std::size_t>(p) % cin;
            double* gk = gw.data() + (co * cin + ci) * kKernelVolume;
            for (std::size_t kd = 0; kd < 3; ++kd) {
                for (std::size_t kh = 0; kh < 3; ++kh) {
                    // Per-tap partial sums in kLanes lanes, reduced in lane order.
                    double l0[kLanes] = {};
                    double l1[kLanes] = {};
                    double l2[kLanes] = {};
                    for (std::size_t od = 0; od < OD; ++od) {
                        for (std::size_t oh = 0; oh < OH; ++oh) {
                            const double* gr = gy.data() + ((co * OD + od) * OH + oh) * OW;
                            const double* xr = xp.row(ci, od * g.stride[0] + kd, oh * g.stride[1] + kh);
                            const double* x0 = xr + off[0];
                            const double* x1 = xr + off[1];
                            const double* x2 = xr + off[2];
                            std::size_t ow = 0;
                            for (; ow + kLanes <= OW; ow += kLanes) {
#pragma omp simd
                                for (std::size_t l = 0; l < kLanes; ++l) {
                                    l0[l] += gr[ow + l] * x0[ow + l];
                                    l1[l] += gr[ow + l] * x1[ow + l];
                                    l2[l] += gr[ow + l] * x2[ow + l];
                                }
                            }
                            for (std::size_t l = 0; ow < OW; ++ow, ++l) {
                                l0[l] += gr[ow] * x0[ow];
                                l1[l] += gr[ow] * x1[ow];
                                l2[l] += gr[ow] * x2[ow];
                            }
                        }
                    }
                    double s0 = 0.0;
                    double s1 = 0.0;
                    double s2 = 0.0;
                    for (std::size_t l = 0; l < kLanes; ++l) {
                        s0 += l0[l];
                        s1 += l1[l];
                        s2 += l2[l];
                    }
                    gk[(kd * 3 + kh) * 3] += s0;
                    gk[(kd * 3 + kh) * 3 + 1] += s1;
                    gk[(kd * 3 + kh) * 3 + 2] += s2;
                }
            }
        }
    }

    if (!gx.empty()) {
        if (gx.size() != x.size()) throw ShapeError("conv3d input gradient size mismatch");
        if (g.stride == std::array<std::size_t, 3>{1, 1, 1}) {
            // Stride 1: the input gradient is a convolution of gy with the flipped, channel-swapped kernel.
            std::vector<double> flipped(w.size());
            for (std::size_t co = 0; co < cout; ++co)
                for (std::size_t ci = 0; ci < cin; ++ci)
                    for (std::size_t k = 0; k < kKernelVolume; ++k)
                        flipped[(ci * cout + co) * kKernelVolume + (kKernelVolume - 1 - k)] =
                            w[(co * cin + ci) * kKernelVolume + k];
            PaddedMap gp(cout, out, 1);
            gp.load(gy.data(), OD, OH, OW);
            conv_rows(cout, cin, g.in_extent, {1, 1, 1}, gp, flipped.data(), nullptr, gx.data(), true);
        } else {
            // Strided: scatter into a padded buffer per input channel, one channel per thread.
            PaddedMap gp(cin, g.in_extent, g.stride[2]);
            const auto off = gp.tap_offset();
            const Index channels = static_cast<Index>(cin);
#pragma omp parallel for schedule(static)
            for (Index c = 0; c < channels; ++c) {
                const std::size_t ci = static_cast<std::size_t>(c);
                for (std::size_t co = 0; co < cout; ++co) {
                    const double* wk = w.data() + (co * cin + ci) * kKernelVolume;
                    for (std::size_t od = 0; od < OD; ++od) {
                        for (std::size_t oh = 0; oh < OH; ++oh) {
                            const double* gr = gy.data() + ((co * OD + od) * OH + oh) * OW;
                            for (std::size_t kd = 0; kd < 3; ++kd) {
                                for (std::size_t kh = 0; kh < 3; ++kh) {
                                    double* r = gp.row(ci, od * g.stride[0] + kd, oh * g.stride[1] + kh);
                                    for (std::size_t kw = 0; kw < 3; ++kw) {
                                        const double wv = wk[(kd * 3 + kh) * 3 + kw];
                                        double* t = r + off[kw];
#pragma omp simd
                                        for (std::size_t ow = 0; ow < OW; ++ow) t[ow] += wv * gr[ow];
                                    }
                                }
                            }
                        }
                    }
                }
                gp.add_interior(ci, gx.data() + ci * D * H * W, D, H, W);
            }
        }
    }
}

namespace {

// c[i, :] (+)= sum_p a[i, p] * b[p, :], accumulated in ascending p.
template <std::size_t N>
void gemm_row_fixed(std::size_t i, std::size_t k, const double* a, const double* b, double* c, bool accumulate) {
    double acc[N];
    double* crow = c + i * N;
    for (std::size_t j = 0; j < N; ++j) acc[j] = accumulate ? crow[j] : 0.0;
    const double* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
        const double aip = arow[p];
        const double* brow = b + p * N;
#pragma omp simd
        for (std::size_t j = 0; j < N; ++j) acc[j] += aip * brow[j];
    }
    for (std::size_t j = 0; j < N; ++j) crow[j] = acc[j];
}

void gemm_row(std::size_t i, std::size_t n, std::size_t k, const double* a, const double* b, double* c,
              bool accumulate) {
    switch (n) {
        case 8: return gemm_row_fixed<8>(i, k, a, b, c, accumulate);
        case 16: return gemm_row_fixed<16>(i, k, a, b, c, accumulate);
        case 32: return gemm_row_fixed<32>(i, k, a, b, c, accumulate);
        default: break;
    }
    double* crow = c + i * n;
    if (!accumulate) std::fill(crow, crow + n, 0.0);
    const double* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
        const double aip = arow[p];
        const double* brow = b + p * n;
#pragma omp simd
        for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
}

// Row-major [rows, cols] blocks -> [cols, rows], for `batch` consecutive blocks.
std::vector<double> transposed(const double* src, std::size_t batch, std::size_t rows, std::size_t cols) {
    constexpr std::size_t kTile = 16;
    std::vector<double> out(batch * rows * cols);
    for (std::size_t bi = 0; bi < batch; ++bi) {
        const double* s = src + bi * rows * cols;
        double* d = out.data() + bi * rows * cols;
        for (std::size_t r0 = 0; r0 < rows; r0 += kTile)
            for (std::size_t c0 = 0; c0 < cols; c0 += kTile)
                for (std::size_t r = r0; r < std::min(rows, r0 + kTile); ++r)
                    for (std::size_t c = c0; c < std::min(cols, c0 + kTile); ++c) d[c * rows + r] = s[r * cols + c];
    }
    return out;
}

}  // namespace

void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
          std::span<const double> b, std::span<double> c, bool accumulate) {
    batched_gemm(1, trans_a, trans_b, m, n, k, a, b, c, accumulate);
}

void batched_gemm(std::size_t batch, bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
                  std::span<const double> a, std::span<const double> b, std::span<double> c, bool accumulate) {
    if (a.size() != batch * m * k || b.size() != batch * k * n || c.size() != batch * m * n) {
        throw ShapeError("gemm buffer sizes do not match");
    }
    std::vector<double> at;
    std::vector<double> bt;
    const double* ap = a.data();
    const double* bp = b.data();
    if (trans_a) {
        at = transposed(a.data(), batch, k, m);
        ap = at.data();
    }
    if (trans_b) {
        bt = transposed(b.data(), batch, n, k);
        bp = bt.data();
    }
    const Index total = static_cast<Index>(batch * m);
#pragma omp parallel for schedule(static) if (batch * m * n * k > 32768)
    for (Index r = 0; r < total; ++r) {
        const std::size_t bi = static_cast<std::size_t>(r) / m;
        const std::size_t i = static_cast<std::size_t>(r) % m;
        gemm_row(i, n, k, ap + bi * m * k, bp + bi * k * n, c.data() + bi * m * n, accumulate);
    }
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Lower envelope of parabolas (Felzenszwalb & Huttenlocher) along one strided line:
// out[p] = min_q f[q] + (step * (p - q))^2.
void edt_line(const double* f, double* out, std::size_t n, std::size_t stride, double step,
              std::vector<std::size_t>& v, std::vector<double>& z, std::vector<double>& buf) {
    const double s2 = step * step;
    buf.resize(n);
    for (std::size_t i = 0; i < n; ++i) buf[i] = f[i * stride];
    v.resize(n);
    z.resize(n + 1);
    std::size_t k = 0;
    bool any = false;
    for (std::size_t q = 0; q < n; ++q) {
        if (buf[q] == kInf) continue;
        if (!any) {
            v[0] = q;
            z[0] = -kInf;
            z[1] = kInf;
            k = 0;
            any = true;
            continue;
        }
        const double fq = buf[q] + s2 * static_cast<double>(q * q);
        double s = 0.0;
        while (true) {
            const std::size_t r = v[k];
            const double fr = buf[r] + s2 * static_cast<double>(r * r);
            s = (fq - fr) / (2.0 * s2 * static_cast<double>(q - r));
            if (s <= z[k] && k > 0) {
                --k;
                continue;
            }
            break;
        }
        if (s <= z[k]) {
            // k == 0 and the new parabola dominates everywhere.
            v[0] = q;
            z[0] = -kInf;
            z[1] = kInf;
            continue;
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kInf;
    }
    if (!any) {
        for (std::size_t i = 0; i < n; ++i) out[i * stride] = kInf;
        return;
    }
    std::size_t j = 0;
    for (std::size_t p = 0; p < n; ++p) {
        while (z[j + 1] < static_cast<double>(p)) ++j;
        const double d = step * (static_cast<double>(p) - static_cast<double>(v[j]));
        out[p * stride] = d * d + buf[v[j]];
    }
}

}  // namespace

void squared_distance_transform(std::span<const unsigned char> sites, std::array<std::size_t, 3> extent_zyx,
                                std::array<double, 3> spacing_zyx, std::span<double> out) {
    const auto [nz, ny, nx] = extent_zyx;
    if (sites.size() != nz * ny * nx || out.size() != sites.size()) {
        throw ShapeError("distance transform buffer sizes do not match extent");
    }
    for (std::size_t i = 0; i < sites.size(); ++i) out[i] = sites[i] ? 0.0 : kInf;

    // Pass along x, then y, then z; each line is independent.
    const Index xlines = static_cast<Index>(nz * ny);
#pragma omp parallel
    {
        std::vector<std::size_t> v;
        std::vector<double> z;
        std::vector<double> buf;
#pragma omp for schedule(static)
        for (Index l = 0; l < xlines; ++l) {
            double* base = out.data() + static_cast<std::size_t>(l) * nx;
            edt_line(base, base, nx, 1, spacing_zyx[2], v, z, buf);
        }
#pragma omp for schedule(static)
        for (Index l = 0; l < static_cast<Index>(nz * nx); ++l) {
            const std::size_t zi = static_cast<std::size_t>(l) / nx;
            const std::size_t xi = static_cast<std::size_t>(l) % nx;
            double* base = out.data() + zi * ny * nx + xi;
            edt_line(base, base, ny, nx, spacing_zyx[1], v, z, buf);
        }
#pragma omp for schedule(static)
        for (Index l = 0; l < static_cast<Index>(ny * nx); ++l) {
            double* base = out.data() + static_cast<std::size_t>(l);
            edt_line(base, base, nz, ny * nx, spacing_zyx[0], v, z, buf);
        }
    }
}

}  // namespace shaperef::kernels
