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

#include "shaperef/shuffle.hpp"

#include <cmath>

#include "shaperef/errors.hpp"

namespace shaperef {

namespace {

std::size_t volume_of(const Extent3d& e) { return e[0] * e[1] * e[2]; }

Extent3d unflatten(const Extent3d& e, std::size_t i) { return {i / (e[1] * e[2]), (i / e[2]) % e[1], i % e[2]}; }

std::size_t flatten(const Extent3d& e, const Extent3d& p) { return (p[0] * e[1] + p[1]) * e[2] + p[2]; }

NdArray init_normal(Shape shape, double stddev, Rng& rng) {
    NdArray a(std::move(shape));
    for (auto& v : a.data()) v = normal(rng, 0.0, stddev);
    return a;
}

}  // namespace

BlockLayout::BlockLayout(Extent3d extent, ShuffleSpec spec, WindowMode mode)
    : extent_(extent), spec_(spec), mode_(mode) {
    for (std::size_t a = 0; a < 3; ++a) {
        if (spec_.blocks[a] == 0 || extent_[a] == 0 || extent_[a] % spec_.blocks[a] != 0) {
            throw ShapeError("block count " + std::to_string(spec_.blocks[a]) + " does not divide extent " +
                             std::to_string(extent_[a]) + " on axis " + std::to_string(a));
        }
    }
}

Extent3d BlockLayout::block_extent() const {
    return {extent_[0] / spec_.blocks[0], extent_[1] / spec_.blocks[1], extent_[2] / spec_.blocks[2]};
}

std::size_t BlockLayout::tokens_per_block() const { return volume_of(block_extent()); }

BlockLayout::Location BlockLayout::locate(std::size_t d, std::size_t h, std::size_t w) const {
    const Extent3d v{d, h, w};
    const Extent3d be = block_extent();
    Extent3d block{};
    Extent3d intra{};
    for (std::size_t a = 0; a < 3; ++a) {
        if (mode_ == WindowMode::Shuffled) {
            block[a] = v[a] % spec_.blocks[a];
            intra[a] = v[a] / spec_.blocks[a];
        } else {
            block[a] = v[a] / be[a];
            intra[a] = v[a] % be[a];
        }
    }
    return {flatten(spec_.blocks, block), intra};
}

Extent3d BlockLayout::voxel_of(std::size_t block, Extent3d intra) const {
    const Extent3d b = unflatten(spec_.blocks, block);
    const Extent3d be = block_extent();
    Extent3d v{};
    for (std::size_t a = 0; a < 3; ++a) {
        v[a] = mode_ == WindowMode::Shuffled ? intra[a] * spec_.blocks[a] + b[a] : b[a] * be[a] + intra[a];
    }
    return v;
}

std::shared_ptr<const std::vector<std::size_t>> BlockLayout::to_tokens_index(std::size_t channels) const {
    const std::size_t nb = block_count();
    const std::size_t t = tokens_per_block();
    const std::size_t vox = volume_of(extent_);
    const Extent3d be = block_extent();
    auto idx = std::make_shared<std::vector<std::size_t>>(nb * t * channels);
    for (std::size_t b = 0; b < nb; ++b)
        for (std::size_t i = 0; i < t; ++i) {
            const std::size_t v = flatten(extent_, voxel_of(b, unflatten(be, i)));
            for (std::size_t c = 0; c < channels; ++c) (*idx)[(b * t + i) * channels + c] = c * vox + v;
        }
    return idx;
}

std::shared_ptr<const std::vector<std::size_t>> BlockLayout::from_tokens_index(std::size_t channels) const {
    const std::size_t t = tokens_per_block();
    const std::size_t vox = volume_of(extent_);
    const Extent3d be = block_extent();
    auto idx = std::make_shared<std::vector<std::size_t>>(channels * vox);
    for (std::size_t v = 0; v < vox; ++v) {
        const Extent3d p = unflatten(extent_, v);
        const Location loc = locate(p[0], p[1], p[2]);
        const std::size_t token = loc.block * t + flatten(be, loc.intra);
        for (std::size_t c = 0; c < channels; ++c) (*idx)[c * vox + v] = token * channels + c;
    }
    return idx;
}

NdArray shuffle_partition(const NdArray& x, const ShuffleSpec& spec, WindowMode mode) {
    if (x.rank() != 4) {
        throw ShapeError("shuffle_partition expects [C, D, H, W], got " + shape_string(x.shape()));
    }
    const std::size_t channels = x.extent(0);
    const BlockLayout layout({x.extent(1), x.extent(2), x.extent(3)}, spec, mode);
    const Extent3d be = layout.block_extent();
    const std::size_t t = layout.tokens_per_block();
    const std::size_t vox = volume_of(layout.extent());
    NdArray out(Shape{layout.block_count(), channels, be[0], be[1], be[2]});
    for (std::size_t b = 0; b < layout.block_count(); ++b)
        for (std::size_t i = 0; i < t; ++i) {
            const std::size_t v = flatten(layout.extent(), layout.voxel_of(b, unflatten(be, i)));
            for (std::size_t c = 0; c < channels; ++c) out[(b * channels + c) * t + i] = x[c * vox + v];
        }
    return out;
}

NdArray unshuffle_merge(const NdArray& blocks, const ShuffleSpec& spec, WindowMode mode) {
    if (blocks.rank() != 5 || blocks.extent(0) != spec.block_count()) {
        throw ShapeError("unshuffle_merge expects [n1*n2*n3, C, d, h, w] matching the spec, got " +
                         shape_string(blocks.shape()));
    }
    const std::size_t channels = blocks.extent(1);
    const Extent3d be{blocks.extent(2), blocks.extent(3), blocks.extent(4)};
    const BlockLayout layout({be[0] * spec.blocks[0], be[1] * spec.blocks[1], be[2] * spec.blocks[2]}, spec, mode);
    const std::size_t t = layout.tokens_per_block();
    const std::size_t vox = volume_of(layout.extent());
    NdArray out(Shape{channels, layout.extent()[0], layout.extent()[1], layout.extent()[2]});
    for (std::size_t b = 0; b < layout.block_count(); ++b)
        for (std::size_t i = 0; i < t; ++i) {
            const std::size_t v = flatten(layout.extent(), layout.voxel_of(b, unflatten(be, i)));
            for (std::size_t c = 0; c < channels; ++c) out[c * vox + v] = blocks[(b * channels + c) * t + i];
        }
    return out;
}

ad::Var to_tokens(const ad::Var& x, const BlockLayout& layout) {
    const Shape& s = x.shape();
    if (s.size() != 4 || s[1] != layout.extent()[0] || s[2] != layout.extent()[1] || s[3] != layout.extent()[2]) {
        throw ShapeError("feature map " + shape_string(s) + " does not match block layout");
    }
    return ad::gather(x, layout.to_tokens_index(s[0]), Shape{layout.block_count(), layout.tokens_per_block(), s[0]});
}

ad::Var from_tokens(const ad::Var& tokens, const BlockLayout& layout) {
    const Shape& s = tokens.shape();
    if (s.size() != 3 || s[0] != layout.block_count() || s[1] != layout.tokens_per_block()) {
        throw ShapeError("tokens " + shape_string(s) + " do not match block layout");
    }
    const auto& e = layout.extent();
    return ad::gather(tokens, layout.from_tokens_index(s[2]), Shape{s[2], e[0], e[1], e[2]});
}

std::size_t relative_table_size(const Extent3d& block) {
    return (2 * block[0] - 1) * (2 * block[1] - 1) * (2 * block[2] - 1);
}

std::size_t relative_offset_index(const Extent3d& block, std::size_t i, std::size_t j) {
    const Extent3d pi = unflatten(block, i);
    const Extent3d pj = unflatten(block, j);
    std::size_t index = 0;
    for (std::size_t a = 0; a < 3; ++a) {
        const std::size_t shifted = pi[a] + block[a] - 1 - pj[a];  // in [0, 2 * block - 2]
        index = index * (2 * block[a] - 1) + shifted;
    }
    return index;
}

void AttentionConfig::validate() const {
    if (heads == 0 || channels == 0 || channels % heads != 0) {
        throw ConfigError("channels " + std::to_string(channels) + " not divisible by heads " + std::to_string(heads));
    }
}

AttentionConfig attention_config_for(const BlockLayout& layout, std::size_t channels, std::size_t heads) {
    AttentionConfig cfg{channels, heads, layout.block_extent()};
    cfg.validate();
    return cfg;
}

AttentionParams declare_attention(ParameterSet& params, const std::string& prefix, const AttentionConfig& cfg,
                                  Rng& rng) {
    cfg.validate();
    const std::size_t c = cfg.channels;
    const double std_proj = 1.0 / std::sqrt(static_cast<double>(c));
    AttentionParams p;
    p.wq = params.add(prefix + ".wq", init_normal({c, c}, std_proj, rng));
    p.bq = params.add(prefix + ".bq", NdArray({c}));
    p.wk = params.add(prefix + ".wk", init_normal({c, c}, std_proj, rng));
    p.bk = params.add(prefix + ".bk", NdArray({c}));
    p.wv = params.add(prefix + ".wv", init_normal({c, c}, std_proj, rng));
    p.bv = params.add(prefix + ".bv", NdArray({c}));
    p.wo = params.add(prefix + ".wo", init_normal({c, c}, std_proj, rng));
    p.bo = params.add(prefix + ".bo", NdArray({c}));
    p.rel_bias = params.add(prefix + ".rel_bias", init_normal({cfg.heads, relative_table_size(cfg.block)}, 0.02, rng));
    return p;
}

ad::Var windowed_attention(const ad::Var& tokens, const AttentionParams& p, const AttentionConfig& cfg,
                           NdArray* weights) {
    cfg.validate();
    const Shape& s = tokens.shape();
    const bool single = s.size() == 2;
    if ((s.size() != 2 && s.size() != 3) || s.back() != cfg.channels || s[s.size() - 2] != cfg.tokens()) {
        throw ShapeError("attention tokens " + shape_string(s) + " do not match config");
    }
    const std::size_t nb = single ? 1 : s[0];
    const std::size_t t = cfg.tokens();
    const std::size_t c = cfg.channels;
    const std::size_t h = cfg.heads;
    const std::size_t dk = cfg.head_dim();
    const ad::Var x = single ? ad::reshape(tokens, {1, t, c}) : tokens;

    auto project = [&](const ad::Var& w, const ad::Var& b) { return ad::add_broadcast(ad::matmul(x, w), b); };
    auto split_heads = [&](const ad::Var& v) { return ad::permute(ad::reshape(v, {nb, t, h, dk}), {0, 2, 1, 3}); };
    const ad::Var q = split_heads(project(p.wq, p.bq));
    const ad::Var k = split_heads(project(p.wk, p.bk));
    const ad::Var v = split_heads(project(p.wv, p.bv));

    auto bias_index = std::make_shared<std::vector<std::size_t>>(h * t * t);
    const std::size_t table = relative_table_size(cfg.block);
    for (std::size_t head = 0; head < h; ++head)
        for (std::size_t i = 0; i < t; ++i)
            for (std::size_t j = 0; j < t; ++j)
                (*bias_index)[(head * t + i) * t + j] = head * table + relative_offset_index(cfg.block, i, j);
    const ad::Var bias = ad::gather(p.rel_bias, bias_index, {h, t, t});

    ad::Var scores = ad::scale(ad::matmul(q, k, true), 1.0 / std::sqrt(static_cast<double>(dk)));
    scores = ad::add_broadcast(scores, bias);
    const ad::Var attn = ad::softmax_lastdim(scores);
    if (weights != nullptr) *weights = attn.value();
    const ad::Var context = ad::reshape(ad::permute(ad::matmul(attn, v), {0, 2, 1, 3}), {nb, t, c});
    const ad::Var out = ad::add_broadcast(ad::matmul(context, p.wo), p.bo);
    return single ? ad::reshape(out, {t, c}) : out;
}

ShuffleBlockParams declare_shuffle_block(ParameterSet& params, const std::string& prefix, const AttentionConfig& cfg,
                                         Rng& rng) {
    const std::size_t c = cfg.channels;
    const std::size_t hidden = kMlpRatio * c;
    ShuffleBlockParams p;
    p.norm1_gamma = params.add(prefix + ".norm1.gamma", NdArray({c}, 1.0));
    p.norm1_beta = params.add(prefix + ".norm1.beta", NdArray({c}));
    p.attention = declare_attention(params, prefix + ".attn", cfg, rng);
    p.norm2_gamma = params.add(prefix + ".norm2.gamma", NdArray({c}, 1.0));
    p.norm2_beta = params.add(prefix + ".norm2.beta", NdArray({c}));
    p.mlp_w1 = params.add(prefix + ".mlp.w1", init_normal({c, hidden}, 1.0 / std::sqrt(static_cast<double>(c)), rng));
    p.mlp_b1 = params.add(prefix + ".mlp.b1", NdArray({hidden}));
    p.mlp_w2 =
        params.add(prefix + ".mlp.w2", init_normal({hidden, c}, 1.0 / std::sqrt(static_cast<double>(hidden)), rng));
    p.mlp_b2 = params.add(prefix + ".mlp.b2", NdArray({c}));
    return p;
}

ad::Var shuffle_block_tokens(const ad::Var& tokens, const ShuffleBlockParams& p, const AttentionConfig& cfg) {
    const ad::Var attended = windowed_attention(ad::layer_norm(tokens, p.norm1_gamma, p.norm1_beta), p.attention, cfg);
    const ad::Var y = ad::add(tokens, attended);
    const ad::Var normed = ad::layer_norm(y, p.norm2_gamma, p.norm2_beta);
    const ad::Var hidden = ad::gelu(ad::add_broadcast(ad::matmul(normed, p.mlp_w1), p.mlp_b1));
    return ad::add(y, ad::add_broadcast(ad::matmul(hidden, p.mlp_w2), p.mlp_b2));
}

ad::Var shuffle_block_forward(const ad::Var& x, const BlockLayout& layout, const ShuffleBlockParams& p,
                              const AttentionConfig& cfg) {
    return from_tokens(shuffle_block_tokens(to_tokens(x, layout), p, cfg), layout);
}

}  // namespace shaperef
