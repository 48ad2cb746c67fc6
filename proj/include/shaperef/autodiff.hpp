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

// Reverse-mode differentiation over a fixed set of primitives. Each primitive records a
// closure that maps its output gradient to exact input gradients; `backward` replays the
// tape in reverse topological order.

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "shaperef/ndarray.hpp"

namespace shaperef::ad {

struct Node {
    NdArray value;
    NdArray grad;  // allocated on first accumulation
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> inputs;
    std::function<void(Node&)> backward;

    /// Zero-initialized gradient buffer of the value's shape.
    NdArray& grad_buffer();
};

class Var {
public:
    Var() = default;
    explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

    [[nodiscard]] const NdArray& value() const { return node_->value; }
    [[nodiscard]] NdArray& mutable_value() { return node_->value; }
    [[nodiscard]] const Shape& shape() const { return node_->value.shape(); }
    [[nodiscard]] bool requires_grad() const { return node_->requires_grad; }
    [[nodiscard]] const NdArray& grad() const;
    void zero_grad();
    [[nodiscard]] const std::shared_ptr<Node>& node() const { return node_; }
    [[nodiscard]] explicit operator bool() const { return static_cast<bool>(node_); }

private:
    std::shared_ptr<Node> node_;
};

/// Input that never receives gradient.
Var constant(NdArray value);
/// Leaf that accumulates gradient (a trainable parameter).
Var leaf(NdArray value);

/// Propagates d(root)/d(.) into every reachable leaf; root must hold a single value.
void backward(const Var& root, double seed = 1.0);

using Stride3 = std::array<std::size_t, 3>;

// a: [..., m, k], b: [..., k, n] with matching batch dims, or b: [k, n] shared by every batch.
// With transpose_b, b is read as [..., n, k].
Var matmul(const Var& a, const Var& b, bool transpose_b = false);
Var softmax_lastdim(const Var& a);
/// x: [C_in, D, H, W], w: [C_out, C_in, 3, 3, 3], b: [C_out]; pad 1, stride 1 or 2 per axis.
Var conv3d(const Var& x, const Var& w, const Var& b, Stride3 stride = {1, 1, 1});
/// Nearest-neighbor upsampling of [C, D, H, W] by integer factors per spatial axis.
Var upsample_nearest(const Var& x, Stride3 factor);
Var add(const Var& a, const Var& b);
/// b's shape must be a trailing suffix of a's; b is repeated over the leading axes.
Var add_broadcast(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double factor);
Var relu(const Var& a);
/// Exact form x * Phi(x).
Var gelu(const Var& a);
Var sigmoid(const Var& a);
/// Normalizes over the last axis (the channel axis of token matrices), then applies gamma, beta.
Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);
Var reshape(const Var& a, Shape shape);
/// out axis i is input axis axes[i].
Var permute(const Var& a, const std::vector<std::size_t>& axes);
/// Concatenation along axis 0.
Var concat0(const std::vector<Var>& parts);
/// Mean over all elements, as a rank-0 value.
Var mean(const Var& a);
/// out[i] = a[source[i]]; gradients scatter-add back in index order.
Var gather(const Var& a, std::shared_ptr<const std::vector<std::size_t>> source, Shape out_shape);
/// Mean binary cross-entropy after clipping pred to [eps, 1 - eps]. Clipped entries pass no gradient.
Var bce_loss(const Var& pred, const NdArray& target, double eps);

}  // namespace shaperef::ad
