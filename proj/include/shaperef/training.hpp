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
#include <span>
#include <string>
#include <vector>

#include "shaperef/augmentation.hpp"
#include "shaperef/autodiff.hpp"
#include "shaperef/parameters.hpp"
#include "shaperef/sae.hpp"
#include "shaperef/volume.hpp"

namespace shaperef {

struct TrainConfig {
    double learning_rate = 2e-4;
    double beta1 = 0.97;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 5e-4;
    std::size_t batch_size = 4;
    std::size_t iterations = 2000;
    std::uint64_t seed = 0;
    double clip_eps = 1e-7;

    void validate() const;
};

/// Mean binary cross-entropy of pred against a 0/1 target after clipping pred to
/// [clip_eps, 1 - clip_eps]. Throws ShapeError if the element counts differ.
ad::Var sae_loss(const ad::Var& pred, const NdArray& target, double clip_eps);

struct AdamState {
    std::vector<NdArray> first;
    std::vector<NdArray> second;
    std::size_t step = 0;

    AdamState() = default;
    explicit AdamState(const ParameterSet& params);
};

/// One decoupled-weight-decay Adam update (p -= lr * wd * p, then the bias-corrected step).
/// grads[i] belongs to params.items()[i]. Throws EvaluationError naming the first parameter
/// with a non-finite gradient, before anything is modified.
void adam_step(ParameterSet& params, AdamState& state, std::span<const NdArray> grads, const TrainConfig& config);

struct TrainResult {
    std::vector<double> losses;  // one per iteration
    std::vector<std::string> warnings;
};

using TrainProgress = std::function<void(std::size_t iteration, double loss)>;

/// Self-supervised training. Each iteration draws batch_size corpus indices with replacement,
/// builds one triplet per draw, and averages the per-sample gradients in sample order. Batch
/// members run in parallel; the result does not depend on the thread count.
TrainResult train_sae(SAEModel& model, const std::vector<MaskVolume>& corpus, const TrainConfig& config,
                      const AugmentationConfig& augmentation, const TrainProgress& progress = {});

/// "iteration,loss" header, then one row per iteration starting at 1.
void write_loss_csv(const std::vector<double>& losses, const std::filesystem::path& path);

}  // namespace shaperef
