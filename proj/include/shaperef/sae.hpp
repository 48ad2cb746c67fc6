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
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "shaperef/autodiff.hpp"
#include "shaperef/ndarray.hpp"
#include "shaperef/parameters.hpp"
#include "shaperef/shuffle.hpp"
#include "shaperef/volume.hpp"

namespace shaperef {

struct StageConfig {
    ShuffleSpec shuffle;
    std::size_t heads = 1;

    friend bool operator==(const StageConfig&, const StageConfig&) = default;
};

/// U-shaped autoencoder layout. Stage s works at 1/2^(s+1) in-plane resolution with
/// base_channels * 2^s channels; depth is halved only while it stays >= 2.
struct SAEConfig {
    Extent3d input_dims{8, 64, 64};  // D, H, W
    std::size_t base_channels = 16;
    std::vector<StageConfig> stages{{{{2, 4, 4}}, 2}, {{{2, 4, 4}}, 4}};
    std::size_t blocks_per_stage = 2;
    WindowMode window = WindowMode::Shuffled;

    /// 2 stages, 8 base channels, 4x16x16 input.
    static SAEConfig tiny();
    /// The full 8x256x256 input size.
    static SAEConfig full_scale();

    [[nodiscard]] std::size_t stage_channels(std::size_t stage) const { return base_channels << stage; }
    /// Downsampling stride into stage `stage` (D, H, W).
    [[nodiscard]] std::array<std::size_t, 3> stage_stride(std::size_t stage) const;
    /// Feature extent inside stage `stage`.
    [[nodiscard]] Extent3d stage_extent(std::size_t stage) const;

    /// Throws ConfigError if extents, block counts or head counts do not fit.
    void validate() const;

    friend bool operator==(const SAEConfig&, const SAEConfig&) = default;
};

std::string config_to_json(const SAEConfig& config);
SAEConfig config_from_json(const std::string& text);

struct ManifestEntry {
    std::string name;
    Shape shape;

    friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

class SAEModel {
public:
    /// Parameters drawn from `init_seed`; the manifest depends on the config only.
    explicit SAEModel(SAEConfig config, std::uint64_t init_seed = 0);

    [[nodiscard]] const SAEConfig& config() const { return config_; }
    [[nodiscard]] ParameterSet& params() { return params_; }
    [[nodiscard]] const ParameterSet& params() const { return params_; }
    [[nodiscard]] std::vector<ManifestEntry> manifest() const;

    /// reference, noisy: [D, H, W] (or [1, D, H, W]) arrays with values in [0, 1].
    /// Returns foreground probabilities [1, D, H, W], strictly inside (0, 1).
    [[nodiscard]] ad::Var forward(const NdArray& reference, const NdArray& noisy) const;
    /// Logits before the sigmoid, [1, D, H, W].
    [[nodiscard]] ad::Var logits(const NdArray& reference, const NdArray& noisy) const;

    /// Sets every parameter value to `value`.
    void fill_parameters(double value);

private:
    struct ConvParams {
        ad::Var w, b;
    };
    struct Stage {
        ConvParams down;
        std::vector<ShuffleBlockParams> blocks;
        BlockLayout layout;
        AttentionConfig attention;
    };

    ConvParams declare_conv(const std::string& name, std::size_t in, std::size_t out, Rng& rng);

    SAEConfig config_;
    ParameterSet params_;
    ConvParams stem_;
    std::vector<Stage> stages_;
    std::vector<ConvParams> decoder_;  // decoder_[l] fuses into level l (l >= 1)
    ConvParams head_;
};

/// Mask volume as a [D, H, W] array of 0/1 values (x fastest, so W = dims.x).
NdArray volume_to_array(const MaskVolume& volume);

/// voxel = 1 iff p >= threshold.
MaskVolume binarize(const NdArray& probabilities, double threshold, const Extent3& dims, const Spacing3& spacing);

/// Header: JSON with config, parameter_count and the ordered manifest; then '\0'; then
/// parameter_count little-endian doubles in manifest order.
std::vector<std::uint8_t> encode_model(const SAEModel& model);
SAEModel decode_model(const std::vector<std::uint8_t>& bytes);
void save_model(const SAEModel& model, const std::filesystem::path& path);
SAEModel load_model(const std::filesystem::path& path);

}  // namespace shaperef
