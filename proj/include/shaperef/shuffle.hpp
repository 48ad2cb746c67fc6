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

// Shuffled window partitioning and windowed multi-head attention with a learned
// relative-position bias.
//
// A feature map [C, D, H, W] with block counts (n1, n2, n3) is split into n1*n2*n3 blocks of
// extent (D/n1, H/n2, W/n3). In the shuffled layout voxel (d, h, w) goes to block
// (d mod n1, h mod n2, w mod n3) at intra-block position (d / n1, h / n2, w / n3): every block
// is a strided sample of the whole map and keeps the relative order of its voxels. The
// contiguous layout (plain non-overlapping windows) is kept as a variant.

#include <array>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "shaperef/autodiff.hpp"
#include "shaperef/ndarray.hpp"
#include "shaperef/parameters.hpp"
#include "shaperef/random.hpp"

namespace shaperef {

using Extent3d = std::array<std::size_t, 3>;  // D, H, W

struct ShuffleSpec {
    std::array<std::size_t, 3> blocks{1, 1, 1};  // n1, n2, n3

    [[nodiscard]] std::size_t block_count() const { return blocks[0] * blocks[1] * blocks[2]; }
    friend bool operator==(const ShuffleSpec&, const ShuffleSpec&) = default;
};

enum class WindowMode { Shuffled, Contiguous };

/// Index maps between a [C, D, H, W] map and its blocks, for one spec and extent.
class BlockLayout {
public:
    /// Throws ShapeError unless every block count divides its extent.
    BlockLayout(Extent3d extent, ShuffleSpec spec, WindowMode mode = WindowMode::Shuffled);

    [[nodiscard]] const Extent3d& extent() const { return extent_; }
    [[nodiscard]] const ShuffleSpec& spec() const { return spec_; }
    [[nodiscard]] WindowMode mode() const { return mode_; }
    [[nodiscard]] Extent3d block_extent() const;
    [[nodiscard]] std::size_t block_count() const { return spec_.block_count(); }
    [[nodiscard]] std::size_t tokens_per_block() const;

    struct Location {
        std::size_t block;
        Extent3d intra;
    };
    [[nodiscard]] Location locate(std::size_t d, std::size_t h, std::size_t w) const;
    /// Inverse of locate.
    [[nodiscard]] Extent3d voxel_of(std::size_t block, Extent3d intra) const;

    /// For tokens [nb, T, C]: flat source offset into [C, D, H, W] of every token element.
    [[nodiscard]] std::shared_ptr<const std::vector<std::size_t>> to_tokens_index(std::size_t channels) const;
    /// For [C, D, H, W]: flat source offset into tokens [nb, T, C].
    [[nodiscard]] std::shared_ptr<const std::vector<std::size_t>> from_tokens_index(std::size_t channels) const;

private:
    Extent3d extent_;
    ShuffleSpec spec_;
    WindowMode mode_;
};

/// [C, D, H, W] -> [n1*n2*n3, C, D/n1, H/n2, W/n3].
NdArray shuffle_partition(const NdArray& x, const ShuffleSpec& spec, WindowMode mode = WindowMode::Shuffled);
/// Exact inverse of shuffle_partition.
NdArray unshuffle_merge(const NdArray& blocks, const ShuffleSpec& spec, WindowMode mode = WindowMode::Shuffled);

/// Differentiable views: [C, D, H, W] <-> tokens [nb, T, C].
ad::Var to_tokens(const ad::Var& x, const BlockLayout& layout);
ad::Var from_tokens(const ad::Var& tokens, const BlockLayout& layout);

/// Index into the per-head bias table of the offset between intra-block positions i and j
/// (row-major flattened positions). Table extent is (2bd-1)(2bh-1)(2bw-1).
std::size_t relative_offset_index(const Extent3d& block, std::size_t i, std::size_t j);
std::size_t relative_table_size(const Extent3d& block);

struct AttentionConfig {
    std::size_t channels = 0;
    std::size_t heads = 1;
    Extent3d block{1, 1, 1};

    [[nodiscard]] std::size_t head_dim() const { return channels / heads; }
    [[nodiscard]] std::size_t tokens() const { return block[0] * block[1] * block[2]; }
    /// Throws ConfigError when channels is not a multiple of heads.
    void validate() const;
};

struct AttentionParams {
    ad::Var wq, bq, wk, bk, wv, bv, wo, bo;
    ad::Var rel_bias;  // [heads, relative_table_size]
};

/// Registers "<prefix>.wq" ... "<prefix>.rel_bias" in `params`.
AttentionParams declare_attention(ParameterSet& params, const std::string& prefix, const AttentionConfig& cfg,
                                  Rng& rng);

/// Multi-head attention inside each block: softmax(Q K^T / sqrt(d_k) + B) V, heads concatenated
/// and projected. tokens: [nb, T, C] or [T, C]. If `weights` is given it receives the
/// attention matrix [nb, heads, T, T].
ad::Var windowed_attention(const ad::Var& tokens, const AttentionParams& p, const AttentionConfig& cfg,
                           NdArray* weights = nullptr);

struct ShuffleBlockParams {
    ad::Var norm1_gamma, norm1_beta;
    AttentionParams attention;
    ad::Var norm2_gamma, norm2_beta;
    ad::Var mlp_w1, mlp_b1, mlp_w2, mlp_b2;
};

inline constexpr std::size_t kMlpRatio = 2;

ShuffleBlockParams declare_shuffle_block(ParameterSet& params, const std::string& prefix, const AttentionConfig& cfg,
                                         Rng& rng);

/// Pre-norm block on tokens [nb, T, C]: y = x + Attn(LN(x)); y' = y + MLP(LN(y)).
ad::Var shuffle_block_tokens(const ad::Var& tokens, const ShuffleBlockParams& p, const AttentionConfig& cfg);

/// Same block on a feature map [C, D, H, W]: partition, attend per block, merge, MLP.
ad::Var shuffle_block_forward(const ad::Var& x, const BlockLayout& layout, const ShuffleBlockParams& p,
                              const AttentionConfig& cfg);

/// Attention config matching a layout and channel count.
AttentionConfig attention_config_for(const BlockLayout& layout, std::size_t channels, std::size_t heads);

}  // namespace shaperef
