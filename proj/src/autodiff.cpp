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

#include "shaperef/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <unordered_set>

#include "shaperef/errors.hpp"
#include "shaperef/kernels.hpp"

namespace shaperef::ad {

namespace {

using Index = std::int64_t;
using NodePtr = std::shared_ptr<Node>;

Var make_result(NdArray value, std::vector<NodePtr> inputs, std::function<void(Node&)> bw) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    node->requires_grad = std::any_of(inputs.begin(), inputs.end(), [](const NodePtr& n) { return n->requires_grad; });
    if (node->requires_grad) {
        node->inputs = std::move(inputs);
        node->backward = std::move(bw);
    }
    return Var(std::move(node));
}

// Gradient buffer of an input, or an empty span if the input takes no gradient.
std::span<double> grad_of(const NodePtr& n) {
    if (!n->requires_grad) return {};
    return n->grad_buffer().data();
}

void require(bool ok, const std::string& message) {
    if (!ok) throw ShapeError(message);
}

template <typename F>
Var unary(const Var& a, F&& f, std::function<void(Node&)> bw) {
    const auto& x = a.value();
    NdArray out(x.shape());
    auto xs = x.data();
    auto ys = out.data();
    const Index n = static_cast<Index>(xs.size());
#pragma omp parallel for simd schedule(static) if (n > 65536)
    for (Index i = 0; i < n; ++i) ys[i] = f(xs[i]);
    return make_result(std::move(out), {a.node()}, std::move(bw));
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x * std::numbers::sqrt2 * 0.5); }
double normal_pdf(double x) { return std::exp(-0.5 * x * x) * (std::numbers::inv_sqrtpi * std::numbers::sqrt2 * 0.5); }

}  // namespace

NdArray& Node::grad_buffer() {
    if (grad.size() != value.size() || grad.shape() != value.shape()) {
        grad = NdArray(value.shape(), 0.0);
    }
    return grad;
}

const NdArray& Var::grad() const { return node_->grad_buffer(); }

void Var::zero_grad() { node_->grad_buffer().fill(0.0); }

Var constant(NdArray value) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    return Var(std::move(node));
}

Var leaf(NdArray value) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    node->requires_grad = true;
    return Var(std::move(node));
}

void backward(const Var& root, double seed) {
    const NodePtr& top = root.node();
    if (top->value.size() != 1) {
        throw ShapeError("backward needs a single-valued root, got " + shape_string(top->value.shape()));
    }
    if (!top->requires_grad) return;

    // Iterative post-order DFS gives a topological order (inputs before users).
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack{{top.get(), 0}};
    seen.insert(top.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->inputs.size()) {
            Node* child = node->inputs[next++].get();
            if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    top->grad_buffer()[0] += seed;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* node = *it;
        if (!node->backward) continue;  // leaf
        if (node->grad.size() == node->value.size()) node->backward(*node);
        node->grad = NdArray();  // interior gradients are no longer needed
    }
}

Var matmul(const Var& a, const Var& b, bool transpose_b) {
    const Shape& as = a.shape();
    const Shape& bs = b.shape();
    require(as.size() >= 2 && bs.size() >= 2, "matmul needs rank >= 2 operands");
    const std::size_t m = as[as.size() - 2];
    const std::size_t k = as.back();
    const std::size_t bk = transpose_b ? bs.back() : bs[bs.size() - 2];
    const std::size_t n = transpose_b ? bs[bs.size() - 2] : bs.back();
    require(k == bk, "matmul inner dims differ: " + shape_string(as) + " x " + shape_string(bs));
    Shape out_shape(as.begin(), as.end() - 1);
    out_shape.push_back(n);
    NdArray out(out_shape);

    if (bs.size() == 2) {
        const std::size_t rows = shape_size(as) / k;
        kernels::gemm(false, transpose_b, rows, n, k, a.value().data(), b.value().data(), out.data(), false);
        return make_result(std::move(out), {a.node(), b.node()}, [rows, n, k, transpose_b](Node& self) {
            const auto& g = self.grad.data();
            const NodePtr& an = self.inputs[0];
            const NodePtr& bn = self.inputs[1];
            if (auto ga = grad_of(an); !ga.empty()) {
                kernels::gemm(false, !transpose_b, rows, k, n, g, bn->value.data(), ga, true);
            }
            if (auto gb = grad_of(bn); !gb.empty()) {
                if (!transpose_b) {
                    kernels::gemm(true, false, k, n, rows, an->value.data(), g, gb, true);
                } else {
                    kernels::gemm(true, false, n, k, rows, g, an->value.data(), gb, true);
                }
            }
        });
    }

    require(as.size() == bs.size() && std::equal(as.begin(), as.end() - 2, bs.begin()),
            "matmul batch dims differ: " + shape_string(as) + " x " + shape_string(bs));
    const std::size_t batch = shape_size(as) / (m * k);
    kernels::batched_gemm(batch, false, transpose_b, m, n, k, a.value().data(), b.value().data(), out.data(), false);
    return make_result(std::move(out), {a.node(), b.node()}, [batch, m, n, k, transpose_b](Node& self) {
        const auto& g = self.grad.data();
        const NodePtr& an = self.inputs[0];
        const NodePtr& bn = self.inputs[1];
        if (auto ga = grad_of(an); !ga.empty()) {
            kernels::batched_gemm(batch, false, !transpose_b, m, k, n, g, bn->value.data(), ga, true);
        }
        if (auto gb = grad_of(bn); !gb.empty()) {
            if (!transpose_b) {
                kernels::batched_gemm(batch, true, false, k, n, m, an->value.data(), g, gb, true);
            } else {
                kernels::batched_gemm(batch, true, false, n, k, m, g, an->value.data(), gb, true);
            }
        }
    });
}

Var softmax_lastdim(const Var& a) {
    const auto& x = a.value();
    require(x.rank() >= 1 && x.shape().back() >= 1, "softmax needs a non-empty last axis");
    const std::size_t cols = x.shape().back();
    const std::size_t rows = x.size() / cols;
    NdArray out(x.shape());
    const auto xs = x.data();
    auto ys = out.data();
#pragma omp parallel for schedule(static) if (x.size() > 65536)
    for (Index r = 0; r < static_cast<Index>(rows); ++r) {
        const double* xr = xs.data() + static_cast<std::size_t>(r) * cols;
        double* yr = ys.data() + static_cast<std::size_t>(r) * cols;
        const double mx = *std::max_element(xr, xr + cols);
        double sum = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            yr[j] = std::exp(xr[j] - mx);
            sum += yr[j];
        }
        const double inv = 1.0 / sum;
        for (std::size_t j = 0; j < cols; ++j) yr[j] *= inv;
    }
    return make_result(std::move(out), {a.node()}, [](Node& self) {
        auto gx = grad_of(self.inputs[0]);
        const auto y = self.value.data();
        const auto g = self.grad.data();
        const std::size_t cols = self.value.shape().back();
        const std::size_t rows = y.size() / cols;
#pragma omp parallel for schedule(static) if (y.size() > 65536)
        for (Index r = 0; r < static_cast<Index>(rows); ++r) {
            const std::size_t o = static_cast<std::size_t>(r) * cols;
            double dot = 0.0;
            for (std::size_t j = 0; j < cols; ++j) dot += g[o + j] * y[o + j];
            for (std::size_t j = 0; j < cols; ++j) gx[o + j] += y[o + j] * (g[o + j] - dot);
        }
    });
}

Var conv3d(const Var& x, const Var& w, const Var& b, Stride3 stride) {
    const Shape& xs = x.shape();
    const Shape& ws = w.shape();
    require(xs.size() == 4, "conv3d input must be [C, D, H, W], got " + shape_string(xs));
    require(ws.size() == 5 && ws[1] == xs[0] && ws[2] == 3 && ws[3] == 3 && ws[4] == 3,
            "conv3d weight " + shape_string(ws) + " does not fit input " + shape_string(xs));
    require(b.shape() == Shape{ws[0]}, "conv3d bias must be [C_out]");
    for (auto s : stride) {
        if (s != 1 && s != 2) throw ShapeError("conv3d stride must be 1 or 2");
    }
    kernels::ConvGeometry g{xs[0], ws[0], {xs[1], xs[2], xs[3]}, stride};
    const auto o = g.out_extent();
    NdArray out(Shape{ws[0], o[0], o[1], o[2]});
    kernels::conv3d_forward(g, x.value().data(), w.value().data(), b.value().data(), out.data());
    return make_result(std::move(out), {x.node(), w.node(), b.node()}, [g](Node& self) {
        kernels::conv3d_backward(g, self.inputs[0]->value.data(), self.inputs[1]->value.data(), self.grad.data(),
                                 grad_of(self.inputs[0]), grad_of(self.inputs[1]), grad_of(self.inputs[2]));
    });
}

Var upsample_nearest(const Var& x, Stride3 factor) {
    const Shape& xs = x.shape();
    require(xs.size() == 4, "upsample input must be [C, D, H, W]");
    const Shape os{xs[0], xs[1] * factor[0], xs[2] * factor[1], xs[3] * factor[2]};
    NdArray out(os);
    const auto in = x.value().data();
    auto y = out.data();
    for (std::size_t c = 0; c < os[0]; ++c)
        for (std::size_t d = 0; d < os[1]; ++d)
            for (std::size_t h = 0; h < os[2]; ++h) {
                const double* src = in.data() + ((c * xs[1] + d / factor[0]) * xs[2] + h / factor[1]) * xs[3];
                double* dst = y.data() + ((c * os[1] + d) * os[2] + h) * os[3];
                for (std::size_t w = 0; w < os[3]; ++w) dst[w] = src[w / factor[2]];
            }
    return make_result(std::move(out), {x.node()}, [xs, os, factor](Node& self) {
        auto gx = grad_of(self.inputs[0]);
        const auto g = self.grad.data();
        for (std::size_t c = 0; c < os[0]; ++c)
            for (std::size_t d = 0; d < os[1]; ++d)
                for (std::size_t h = 0; h < os[2]; ++h) {
                    double* dst = gx.data() + ((c * xs[1] + d / factor[0]) * xs[2] + h / factor[1]) * xs[3];
                    const double* src = g.data() + ((c * os[1] + d) * os[2] + h) * os[3];
                    for (std::size_t w = 0; w < os[3]; ++w) dst[w / factor[2]] += src[w];
                }
    });
}

Var add(const Var& a, const Var& b) {
    require(a.shape() == b.shape(), "add shapes differ: " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
    NdArray out(a.shape());
    const auto x = a.value().data();
    const auto y = b.value().data();
    auto z = out.data();
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] + y[i];
    return make_result(std::move(out), {a.node(), b.node()}, [](Node& self) {
        const auto g = self.grad.data();
        for (const auto& in : self.inputs) {
            auto gi = grad_of(in);
            for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += g[i];
        }
    });
}

Var add_broadcast(const Var& a, const Var& b) {
    const Shape& as = a.shape();
    const Shape& bs = b.shape();
    require(bs.size() <= as.size() && std::equal(bs.begin(), bs.end(), as.end() - static_cast<std::ptrdiff_t>(bs.size())),
            "add_broadcast: " + shape_string(bs) + " is not a suffix of " + shape_string(as));
    const std::size_t inner = b.value().size();
    const std::size_t outer = a.value().size() / inner;
    NdArray out(as);
    const auto x = a.value().data();
    const auto y = b.value().data();
    auto z = out.data();
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t i = 0; i < inner; ++i) z[o * inner + i] = x[o * inner + i] + y[i];
    return make_result(std::move(out), {a.node(), b.node()}, [outer, inner](Node& self) {
        const auto g = self.grad.data();
        if (auto ga = grad_of(self.inputs[0]); !ga.empty()) {
            for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i];
        }
        if (auto gb = grad_of(self.inputs[1]); !gb.empty()) {
            for (std::size_t o = 0; o < outer; ++o)
                for (std::size_t i = 0; i < inner; ++i) gb[i] += g[o * inner + i];
        }
    });
}

Var mul(const Var& a, const Var& b) {
    require(a.shape() == b.shape(), "mul shapes differ");
    NdArray out(a.shape());
    const auto x = a.value().data();
    const auto y = b.value().data();
    auto z = out.data();
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] * y[i];
    return make_result(std::move(out), {a.node(), b.node()}, [](Node& self) {
        const auto g = self.grad.data();
        const auto x = self.inputs[0]->value.data();
        const auto y = self.inputs[1]->value.data();
        if (auto ga = grad_of(self.inputs[0]); !ga.empty()) {
            for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * y[i];
        }
        if (auto gb = grad_of(self.inputs[1]); !gb.empty()) {
            for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[i] * x[i];
        }
    });
}

Var scale(const Var& a, double factor) {
    return unary(a, [factor](double v) { return v * factor; }, [factor](Node& self) {
        auto gx = grad_of(self.inputs[0]);
        const auto g = self.grad.data();
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += factor * g[i];
    });
}

Var relu(const Var& a) {
    return unary(a, [](double v) { return v > 0.0 ? v : 0.0; }, [](Node& self) {
        auto gx = grad_of(self.inputs[0]);
        const auto x = self.inputs[0]->value.data();
        const auto g = self.grad.data();
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += x[i] > 0.0 ? g[i] : 0.0;
    });
}

Var gelu(const Var& a) {
    return unary(a, [](double v) { return v * normal_cdf(v); }, [](Node& self) {
        auto gx = grad_of(self.inputs[0]);
        const auto x = self.inputs[0]->value.data();
        const auto g = self.grad.data();
        const Index n = static_cast<Index>(gx.size());
#pragma omp parallel for schedule(static) if (n > 65536)
        for (Index i = 0; i < n; ++i) gx[i] += g[i] * (normal_cdf(x[i]) + x[i] * normal_pdf(x[i]));
    });
}

Var sigmoid(const Var& a) {
    return unary(
        a,
        [](double v) {
            if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
            const double e = std::exp(v);
            return e / (1.0 + e);
        },
        [](Node& self) {
            auto gx = grad_of(self.inputs[0]);
            const auto y = self.value.data();
            const auto g = self.grad.data();
            for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i] * y[i] * (1.0 - y[i]);
        });
}

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
    const Shape& xs = x.shape();
    require(!xs.empty(), "layer_norm needs rank >= 1");
    const std::size_t c = xs.back();
    require(gamma.shape() == Shape{c} && beta.shape() == Shape{c}, "layer_norm gamma/beta must be [C]");
    const std::size_t rows = x.value().size() / c;
    auto xhat = std::make_shared<std::vector<double>>(x.value().size());
    auto rstd = std::make_shared<std::vector<double>>(rows);
    NdArray out(xs);
    const auto in = x.value().data();
    const auto gm = gamma.value().data();
    const auto bt = beta.value().data();
    auto y = out.data();
#pragma omp parallel for schedule(static) if (rows * c > 65536)
    for (Index r = 0; r < static_cast<Index>(rows); ++r) {
        const std::size_t o = static_cast<std::size_t>(r) * c;
        double mu = 0.0;
        for (std::size_t j = 0; j < c; ++j) mu += in[o + j];
        mu /= static_cast<double>(c);
        double var = 0.0;
        for (std::size_t j = 0; j < c; ++j) var += (in[o + j] - mu) * (in[o + j] - mu);
        var /= static_cast<double>(c);
        const double rs = 1.0 / std::sqrt(var + eps);
        (*rstd)[static_cast<std::size_t>(r)] = rs;
        for (std::size_t j = 0; j < c; ++j) {
            const double h = (in[o + j] - mu) * rs;
            (*xhat)[o + j] = h;
            y[o + j] = h * gm[j] + bt[j];
        }
    }
    return make_result(std::move(out), {x.node(), gamma.node(), beta.node()}, [xhat, rstd, rows, c](Node& self) {
        const auto g = self.grad.data();
        const auto gm = self.inputs[1]->value.data();
        if (auto gg = grad_of(self.inputs[1]); !gg.empty()) {
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t j = 0; j < c; ++j) gg[j] += g[r * c + j] * (*xhat)[r * c + j];
        }
        if (auto gb = grad_of(self.inputs[2]); !gb.empty()) {
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t j = 0; j < c; ++j) gb[j] += g[r * c + j];
        }
        if (auto gx = grad_of(self.inputs[0]); !gx.empty()) {
#pragma omp parallel for schedule(static) if (rows * c > 65536)
            for (Index r = 0; r < static_cast<Index>(rows); ++r) {
                const std::size_t o = static_cast<std::size_t>(r) * c;
                double mean_g = 0.0;
                double mean_gx = 0.0;
                for (std::size_t j = 0; j < c; ++j) {
                    const double gh = g[o + j] * gm[j];
                    mean_g += gh;
                    mean_gx += gh * (*xhat)[o + j];
                }
                mean_g /= static_cast<double>(c);
                mean_gx /= static_cast<double>(c);
                const double rs = (*rstd)[static_cast<std::size_t>(r)];
                for (std::size_t j = 0; j < c; ++j) {
                    const double gh = g[o + j] * gm[j];
                    gx[o + j] += rs * (gh - mean_g - (*xhat)[o + j] * mean_gx);
                }
            }
        }
    });
}

Var reshape(const Var& a, Shape shape) {
    NdArray out = a.value().reshaped(std::move(shape));
    return make_result(std::move(out), {a.node()}, [](Node& self) {
        auto gx = grad_of(self.inputs[0]);
        const auto g = self.grad.data();
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i];
    });
}

namespace {

// Source offset of every output element of permute(shape, axes).
std::shared_ptr<std::vector<std::size_t>> permutation_source(const Shape& in, const std::vector<std::size_t>& axes,
                                                             Shape& out_shape) {
    const std::size_t rank = in.size();
    std::vector<std::size_t> in_stride(rank, 1);
    for (std::size_t i = rank; i-- > 1;) in_stride[i - 1] = in_stride[i] * in[i];
    out_shape.resize(rank);
    std::vector<std::size_t> stride(rank);
    for (std::size_t i = 0; i < rank; ++i) {
        out_shape[i] = in[axes[i]];
        stride[i] = in_stride[axes[i]];
    }
    const std::size_t total = shape_size(in);
    auto src = std::make_shared<std::vector<std::size_t>>(total);
    std::vector<std::size_t> idx(rank, 0);
    std::size_t offset = 0;
    for (std::size_t o = 0; o < total; ++o) {
        (*src)[o] = offset;
        for (std::size_t ax = rank; ax-- > 0;) {
            ++idx[ax];
            offset += stride[ax];
            if (idx[ax] < out_shape[ax]) break;
            offset -= stride[ax] * idx[ax];
            idx[ax] = 0;
        }
    }
    return src;
}

}  // namespace

Var permute(const Var& a, const std::vector<std::size_t>& axes) {
    const Shape& in = a.shape();
    std::vector<std::size_t> sorted = axes;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        require(sorted.size() == in.size() && sorted[i] == i, "permute axes must be a permutation of 0..rank-1");
    }
    Shape out_shape;
    auto src = permutation_source(in, axes, out_shape);
    return gather(a, std::move(src), std::move(out_shape));
}

Var concat0(const std::vector<Var>& parts) {
    require(!parts.empty(), "concat0 of nothing");
    Shape out_shape = parts[0].shape();
    require(!out_shape.empty(), "concat0 needs rank >= 1");
    out_shape[0] = 0;
    std::vector<NodePtr> inputs;
    for (const auto& p : parts) {
        const Shape& s = p.shape();
        require(s.size() == out_shape.size() && std::equal(s.begin() + 1, s.end(), out_shape.begin() + 1),
                "concat0 trailing shapes differ");
        out_shape[0] += s[0];
        inputs.push_back(p.node());
    }
    NdArray out(out_shape);
    std::size_t offset = 0;
    for (const auto& p : parts) {
        const auto v = p.value().data();
        std::copy(v.begin(), v.end(), out.data().begin() + static_cast<std::ptrdiff_t>(offset));
        offset += v.size();
    }
    return make_result(std::move(out), std::move(inputs), [](Node& self) {
        const auto g = self.grad.data();
        std::size_t offset = 0;
        for (const auto& in : self.inputs) {
            auto gi = grad_of(in);
            for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += g[offset + i];
            offset += in->value.size();
        }
    });
}

Var mean(const Var& a) {
    const auto v = a.value().data();
    double s = 0.0;
    for (double x : v) s += x;
    const double n = static_cast<double>(v.size());
    return make_result(NdArray::scalar(s / n), {a.node()}, [n](Node& self) {
        auto gx = grad_of(self.inputs[0]);
        const double g = self.grad[0] / n;
        for (auto& x : gx) x += g;
    });
}

Var gather(const Var& a, std::shared_ptr<const std::vector<std::size_t>> source, Shape out_shape) {
    require(source->size() == shape_size(out_shape), "gather index count does not match output shape");
    const auto x = a.value().data();
    NdArray out(std::move(out_shape));
    auto y = out.data();
    const auto& src = *source;
    for (std::size_t i = 0; i < y.size(); ++i) {
        require(src[i] < x.size(), "gather index out of range");
        y[i] = x[src[i]];
    }
    return make_result(std::move(out), {a.node()}, [source](Node& self) {
        auto gx = grad_of(self.inputs[0]);
        const auto g = self.grad.data();
        const auto& src = *source;
        for (std::size_t i = 0; i < g.size(); ++i) gx[src[i]] += g[i];
    });
}

Var bce_loss(const Var& pred, const NdArray& target, double eps) {
    require(pred.shape() == target.shape(),
            "loss shapes differ: " + shape_string(pred.shape()) + " vs " + shape_string(target.shape()));
    const auto p = pred.value().data();
    const auto t = target.data();
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double q = std::clamp(p[i], eps, 1.0 - eps);
        s -= t[i] * std::log(q) + (1.0 - t[i]) * std::log(1.0 - q);
    }
    const double n = static_cast<double>(p.size());
    auto tgt = std::make_shared<NdArray>(target);
    return make_result(NdArray::scalar(s / n), {pred.node()}, [tgt, eps, n](Node& self) {
        auto gx = grad_of(self.inputs[0]);
        const auto p = self.inputs[0]->value.data();
        const auto t = tgt->data();
        const double g = self.grad[0] / n;
        for (std::size_t i = 0; i < gx.size(); ++i) {
            if (p[i] < eps || p[i] > 1.0 - eps) continue;
            gx[i] += g * (p[i] - t[i]) / (p[i] * (1.0 - p[i]));
        }
    });
}

}  // namespace shaperef::ad
