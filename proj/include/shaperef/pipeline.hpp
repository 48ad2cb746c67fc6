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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "shaperef/augmentation.hpp"
#include "shaperef/dictionary.hpp"
#include "shaperef/sae.hpp"
#include "shaperef/training.hpp"
#include "shaperef/volume.hpp"

namespace shaperef {

enum class ShapeFamily { Round, Elongated, Boxy };

std::string_view family_name(ShapeFamily family);
ShapeFamily parse_family(std::string_view name);

struct CorpusParams {
    std::size_t count = 64;
    Extent3 dims{64, 64, 8};
    Spacing3 spacing{};
    std::uint64_t seed = 1;
    /// Volume i uses families[i % families.size()].
    std::vector<ShapeFamily> families{ShapeFamily::Round, ShapeFamily::Elongated, ShapeFamily::Boxy};

    void validate() const;
};

struct SyntheticVolume {
    MaskVolume volume;
    ShapeFamily family = ShapeFamily::Round;
};

/// Superellipse slab with a low-frequency radial perturbation and a random in-plane pose.
/// Depends only on (params, index), so held-out volumes are indices >= params.count.
SyntheticVolume synth_volume(const CorpusParams& params, std::size_t index);

/// Writes vol_0000.mvol ... and manifest.json into out_dir; returns the volume paths.
std::vector<std::filesystem::path> synth_corpus(const CorpusParams& params, const std::filesystem::path& out_dir);

struct PipelineConfig {
    std::filesystem::path dictionary;
    std::filesystem::path model;
    Axis axis = Axis::Z;
    std::size_t resample = kDefaultResample;
    double threshold = 0.5;
    bool pass_through_empty = false;
    AugmentationConfig augmentation;
    TrainConfig train;
    SAEConfig model_config;
    CorpusParams corpus;

    void validate() const;
};

/// Every key is optional; unknown keys are a ConfigError.
PipelineConfig pipeline_config_from_json(const std::string& text);
std::string pipeline_config_to_json(const PipelineConfig& config);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

using LabelLoader = std::function<MaskVolume(const DictionaryEntry&)>;

/// Reads an entry's label volume, resolving relative paths against dictionary_dir.
LabelLoader file_label_loader(std::filesystem::path dictionary_dir);

struct RefineOptions {
    double threshold = 0.5;
    /// Return the input unchanged (flagged) instead of failing when it has no usable shape.
    bool pass_through_empty = false;
};

struct RefineResult {
    MaskVolume refined;
    std::string retrieved_id;
    std::optional<double> distance;
    std::size_t slabs = 0;
    bool passed_through = false;
    std::vector<std::string> flags;
};

/// Retrieves one label from the middle slice of seg, then refines seg slab by slab along z.
/// The last slab is zero-padded to the model depth and cropped back.
RefineResult refine(const MaskVolume& seg, const ShapeDictionary& dictionary, const SAEModel& model,
                    const RefineOptions& options, const LabelLoader& load_label);

/// {"retrieved_id", "distance", "slabs", "passed_through", "flags"}.
std::string refine_summary_json(const RefineResult& result);

}  // namespace shaperef
