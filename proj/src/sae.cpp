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

#include "shaperef/sae.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "shaperef/errors.hpp"

namespace shaperef {

namespace {

constexpr int kModelVersion = 1;
constexpr const char* kModelFormat = "shaperef-sae";

using Json = nlohmann::ordered_json;

NdArray he_normal(Shape shape, std::size_t fan_in, Rng& rng) {
    NdArray a(std::move(shape));
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (auto& v : a.data()) v = normal(rng, 0.0, stddev);
    return a;
}

NdArray as_channel(const NdArray& a, const Extent3d& dims) {
    const Shape want{1, dims[0], dims[1], dims[2]};
    if (a.shape() == want) return a;
    if (a.shape() == Shape{dims[0], dims[1], dims[2]}) return a.reshaped(want);
    throw ShapeError("input " + shape_string(a.shape()) + " does not match model input " +
                     shape_string({dims[0], dims[1], dims[2]}));
}

Json config_json(const SAEConfig& c) {
    Json j;
    j["input_dims"] = c.input_dims;
    j["base_channels"] = c.base_channels;
    Json stages = Json::array();
    for (const auto& s : c.stages) stages.push_back({{"shuffle", s.shuffle.blocks}, {"heads", s.heads}});
    j["stages"] = stages;
    j["blocks_per_stage"] = c.blocks_per_stage;
    j["window"] = c.window == WindowMode::Shuffled ? "shuffled" : "contiguous";
    return j;
}

SAEConfig config_from(const Json& j) {
    SAEConfig c;
    c.input_dims = j.at("input_dims").get<Extent3d>();
    c.base_channels = j.at("base_channels").get<std::size_t>();
    c.stages.clear();
    for (const auto& s : j.at("stages")) {
        c.stages.push_back({ShuffleSpec{s.at("shuffle").get<std::array<std::size_t, 3>>()}, s.at("heads").get<std::size_t>()});
    }
    c.blocks_per_stage = j.at("blocks_per_stage").get<std::size_t>();
    const auto window = j.at("window").get<std::string>();
    if (window == "shuffled") {
        c.window = WindowMode::Shuffled;
    } else if (window == "contiguous") {
        c.window = WindowMode::Contiguous;
    } else {
        throw ConfigError("unknown window mode '" + window + "'");
    }
    c.validate();
    return c;
}

}  // namespace

SAEConfig SAEConfig::tiny() {
    SAEConfig c;
    c.input_dims = {4, 16, 16};
    c.base_channels = 8;
    c.stages = {{{{1, 2, 2}}, 2}, {{{1, 2, 2}}, 2}};
    return c;
}

SAEConfig SAEConfig::full_scale() {
    SAEConfig c;
    c.input_dims = {8, 256, 256};
    return c;
}

std::array<std::size_t, 3> SAEConfig::stage_stride(std::size_t stage) const {
    const Extent3d prev = stage == 0 ? input_dims : stage_extent(stage - 1);
    const std::size_t depth_stride = (prev[0] % 2 == 0 && prev[0] / 2 >= 2) ? 2 : 1;
    return {depth_stride, 2, 2};
}

Extent3d SAEConfig::stage_extent(std::size_t stage) const {
    Extent3d e = input_dims;
    for (std::size_t s = 0; s <= stage; ++s) {
        const std::size_t depth_stride = (e[0] % 2 == 0 && e[0] / 2 >= 2) ? 2 : 1;
        e = {e[0] / depth_stride, e[1] / 2, e[2] / 2};
    }
    return e;
}

void SAEConfig::validate() const {
    if (input_dims[0] == 0 || input_dims[1] == 0 || input_dims[2] == 0) {
        throw ConfigError("input dims must be positive");
    }
    if (stages.empty()) throw ConfigError("at least one stage is required");
    if (base_channels == 0) throw ConfigError("base_channels must be positive");
    if (blocks_per_stage == 0) throw ConfigError("blocks_per_stage must be positive");
    Extent3d e = input_dims;
    for (std::size_t s = 0; s < stages.size(); ++s) {
        if (e[1] % 2 != 0 || e[2] % 2 != 0) {
            throw ConfigError("in-plane extent not divisible by 2 before stage " + std::to_string(s));
        }
        e = stage_extent(s);
        for (std::size_t a = 0; a < 3; ++a) {
            const std::size_t n = stages[s].shuffle.blocks[a];
            if (n == 0 || e[a] % n != 0) {
                throw ConfigError("stage " + std::to_string(s) + " block count " + std::to_string(n) +
                                  " does not divide extent " + std::to_string(e[a]));
            }
        }
        if (stages[s].heads == 0 || stage_channels(s) % stages[s].heads != 0) {
            throw ConfigError("stage " + std::to_string(s) + " channels not divisible by heads");
        }
    }
}

std::string config_to_json(const SAEConfig& config) { return config_json(config).dump(); }

SAEConfig config_from_json(const std::string& text) {
    try {
        return config_from(Json::parse(text));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed model config: ") + e.what());
    }
}

SAEModel::ConvParams SAEModel::declare_conv(const std::string& name, std::size_t in, std::size_t out, Rng& rng) {
    ConvParams p;
    p.w = params_.add(name + ".w", he_normal({out, in, 3, 3, 3}, in * 27, rng));
    p.b = params_.add(name + ".b", NdArray({out}));
    return p;
}

SAEModel::SAEModel(SAEConfig config, std::uint64_t init_seed) : config_(std::move(config)) {
    config_.validate();
    Rng rng = make_rng(init_seed, 0, SeedRole::Init);
    const std::size_t base = config_.base_channels;
    stem_ = declare_conv("stem", 2, base, rng);
    std::size_t prev_channels = base;
    for (std::size_t s = 0; s < config_.stages.size(); ++s) {
        const std::size_t ch = config_.stage_channels(s);
        const std::string prefix = "stage" + std::to_string(s);
        ConvParams down = declare_conv(prefix + ".down", prev_channels, ch, rng);
        BlockLayout layout(config_.stage_extent(s), config_.stages[s].shuffle, config_.window);
        const AttentionConfig attention = attention_config_for(layout, ch, config_.stages[s].heads);
        std::vector<ShuffleBlockParams> blocks;
        for (std::size_t b = 0; b < config_.blocks_per_stage; ++b) {
            blocks.push_back(declare_shuffle_block(params_, prefix + ".block" + std::to_string(b), attention, rng));
        }
        stages_.push_back({down, std::move(blocks), layout, attention});
        prev_channels = ch;
    }
    // Level 0 is the stem, level l >= 1 is the output of stage l - 1.
    auto level_channels = [&](std::size_t l) { return l == 0 ? base : config_.stage_channels(l - 1); };
    const std::size_t levels = config_.stages.size();
    decoder_.resize(levels);
    for (std::size_t l = levels - 1; l >= 1; --l) {
        decoder_[l] = declare_conv("decoder" + std::to_string(l), level_channels(l + 1) + level_channels(l),
                                   level_channels(l), rng);
    }
    head_ = declare_conv("head", level_channels(1) + level_channels(0), 1, rng);
}

std::vector<ManifestEntry> SAEModel::manifest() const {
    std::vector<ManifestEntry> m;
    for (const auto& p : params_.items()) m.push_back({p.name, p.value().shape()});
    return m;
}

ad::Var SAEModel::logits(const NdArray& reference, const NdArray& noisy) const {
    const ad::Var x =
        ad::concat0({ad::constant(as_channel(reference, config_.input_dims)), ad::constant(as_channel(noisy, config_.input_dims))});
    std::vector<ad::Var> levels;
    levels.push_back(ad::gelu(ad::conv3d(x, stem_.w, stem_.b)));
    for (std::size_t s = 0; s < stages_.size(); ++s) {
        const Stage& stage = stages_[s];
        ad::Var cur = ad::gelu(ad::conv3d(levels.back(), stage.down.w, stage.down.b, config_.stage_stride(s)));
        ad::Var tokens = to_tokens(cur, stage.layout);
        for (const auto& block : stage.blocks) tokens = shuffle_block_tokens(tokens, block, stage.attention);
        levels.push_back(from_tokens(tokens, stage.layout));
    }
    ad::Var cur = levels.back();
    for (std::size_t l = stages_.size(); l >= 1; --l) {
        const ad::Var up = ad::upsample_nearest(cur, config_.stage_stride(l - 1));
        const ad::Var fused = ad::concat0({up, levels[l - 1]});
        if (l - 1 == 0) {
            cur = ad::conv3d(fused, head_.w, head_.b);
        } else {
            cur = ad::gelu(ad::conv3d(fused, decoder_[l - 1].w, decoder_[l - 1].b));
        }
    }
    return cur;
}

ad::Var SAEModel::forward(const NdArray& reference, const NdArray& noisy) const {
    return ad::sigmoid(logits(reference, noisy));
}

void SAEModel::fill_parameters(double value) {
    for (auto& p : params_.items()) p.mutable_value().fill(value);
}

NdArray volume_to_array(const MaskVolume& volume) {
    const auto& d = volume.dims();
    NdArray a(Shape{d.z, d.y, d.x});
    const auto v = volume.voxels();
    for (std::size_t i = 0; i < v.size(); ++i) a[i] = v[i];
    return a;
}

MaskVolume binarize(const NdArray& probabilities, double threshold, const Extent3& dims, const Spacing3& spacing) {
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw ConfigError("binarization threshold must lie in (0, 1)");
    }
    if (probabilities.size() != dims.count()) {
        throw ShapeError("probability array size does not match volume dims");
    }
    std::vector<std::uint8_t> voxels(dims.count());
    for (std::size_t i = 0; i < voxels.size(); ++i) voxels[i] = probabilities[i] >= threshold ? 1 : 0;
    return MaskVolume(dims, spacing, std::move(voxels));
}

std::vector<std::uint8_t> encode_model(const SAEModel& model) {
    Json header;
    header["format"] = kModelFormat;
    header["version"] = kModelVersion;
    header["config"] = config_json(model.config());
    header["parameter_count"] = model.params().scalar_count();
    Json manifest = Json::array();
    for (const auto& e : model.manifest()) manifest.push_back({{"name", e.name}, {"shape", e.shape}});
    header["manifest"] = manifest;
    const std::string text = header.dump();

    std::vector<std::uint8_t> out(text.begin(), text.end());
    out.push_back(0);
    for (const auto& p : model.params().items()) {
        for (double v : p.value().data()) {
            const auto bits = std::bit_cast<std::uint64_t>(v);
            for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
        }
    }
    return out;
}

SAEModel decode_model(const std::vector<std::uint8_t>& bytes) {
    const auto sep = std::find(bytes.begin(), bytes.end(), std::uint8_t{0});
    if (sep == bytes.end()) {
        throw FormatError("model file has no header separator");
    }
    Json header;
    try {
        header = Json::parse(std::string(bytes.begin(), sep));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("model header is not valid JSON: ") + e.what());
    }
    std::size_t count = 0;
    std::vector<ManifestEntry> listed;
    SAEConfig config;
    try {
        if (header.at("format").get<std::string>() != kModelFormat || header.at("version").get<int>() != kModelVersion) {
            throw FormatError("unsupported model format or version");
        }
        config = config_from(header.at("config"));
        count = header.at("parameter_count").get<std::size_t>();
        for (const auto& e : header.at("manifest")) {
            listed.push_back({e.at("name").get<std::string>(), e.at("shape").get<Shape>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed model header: ") + e.what());
    } catch (const ConfigError& e) {
        throw FormatError(std::string("malformed model config: ") + e.what());
    }

    SAEModel model(config);
    if (listed != model.manifest()) {
        throw FormatError("model manifest does not match the architecture its config describes");
    }
    if (count != model.params().scalar_count()) {
        throw FormatError("parameter_count disagrees with the manifest");
    }
    const std::size_t payload = static_cast<std::size_t>(bytes.end() - sep) - 1;
    if (payload != count * 8) {
        throw TruncationError("model payload has " + std::to_string(payload) + " bytes, header promises " +
                              std::to_string(count * 8));
    }
    auto it = sep + 1;
    for (auto& p : model.params().items()) {
        for (auto& v : p.mutable_value().data()) {
            std::uint64_t bits = 0;
            for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(*it++) << (8 * i);
            v = std::bit_cast<double>(bits);
        }
    }
    return model;
}

void save_model(const SAEModel& model, const std::filesystem::path& path) {
    const auto bytes = encode_model(model);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write model " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + path.string());
}

SAEModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_model(bytes);
}

}  // namespace shaperef
