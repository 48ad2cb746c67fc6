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

#include "shaperef/training.hpp"

#include <cmath>
#include <exception>
#include <fstream>
#include <memory>

#include "shaperef/dictionary.hpp"
#include "shaperef/errors.hpp"
#include "shaperef/random.hpp"

namespace shaperef {

namespace {

constexpr double kDivergenceFactor = 10.0;
constexpr std::size_t kDivergenceRun = 100;

}  // namespace

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("beta1 must lie in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("beta2 must lie in [0, 1)");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
    if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) throw ConfigError("weight_decay must be >= 0");
    if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
    if (!(clip_eps > 0.0 && clip_eps < 0.5)) throw ConfigError("clip_eps must lie in (0, 0.5)");
}

ad::Var sae_loss(const ad::Var& pred, const NdArray& target, double clip_eps) {
    if (pred.value().size() != target.size()) {
        throw ShapeError("loss operands differ: " + shape_string(pred.shape()) + " vs " + shape_string(target.shape()));
    }
    return ad::bce_loss(pred, target.shape() == pred.shape() ? target : target.reshaped(pred.shape()), clip_eps);
}

AdamState::AdamState(const ParameterSet& params) {
    for (const auto& p : params.items()) {
        first.emplace_back(p.value().shape());
        second.emplace_back(p.value().shape());
    }
}

void adam_step(ParameterSet& params, AdamState& state, std::span<const NdArray> grads, const TrainConfig& config) {
    auto& items = params.items();
    if (grads.size() != items.size() || state.first.size() != items.size() || state.second.size() != items.size()) {
        throw ShapeError("optimizer state does not match the parameter set");
    }
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (grads[i].shape() != items[i].value().shape() || state.first[i].shape() != items[i].value().shape()) {
            throw ShapeError("gradient shape mismatch for parameter " + items[i].name);
        }
        for (double g : grads[i].data()) {
            if (!std::isfinite(g)) throw EvaluationError("non-finite gradient in parameter " + items[i].name);
        }
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(config.beta1, t);
    const double c2 = 1.0 - std::pow(config.beta2, t);
    const double lr = config.learning_rate;
    const double decay = lr * config.weight_decay;
    for (std::size_t i = 0; i < items.size(); ++i) {
        auto p = items[i].mutable_value().data();
        const auto g = grads[i].data();
        auto m = state.first[i].data();
        auto v = state.second[i].data();
        for (std::size_t j = 0; j < p.size(); ++j) {
            p[j] -= decay * p[j];
            m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * g[j];
            v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * g[j] * g[j];
            const double mhat = m[j] / c1;
            const double vhat = v[j] / c2;
            p[j] -= lr * mhat / (std::sqrt(vhat) + config.epsilon);
        }
    }
}

TrainResult train_sae(SAEModel& model, const std::vector<MaskVolume>& corpus, const TrainConfig& config,
                      const AugmentationConfig& augmentation, const TrainProgress& progress) {
    config.validate();
    augmentation.validate();
    if (config.iterations > 0 && corpus.empty()) throw ConfigError("training corpus is empty");
    const auto& in = model.config().input_dims;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& d = corpus[i].dims();
        if (d.z != in[0] || d.y != in[1] || d.x != in[2]) {
            throw ShapeError("corpus volume " + std::to_string(i) + " does not match the model input dims");
        }
        if (corpus[i].foreground_count() == 0) {
            throw EmptyShapeError("corpus volume " + std::to_string(i) + " has no foreground");
        }
    }

    const std::size_t batch = config.batch_size;
    auto& master = model.params().items();
    // One replica per batch slot; gradients are reduced in slot order.
    std::vector<std::unique_ptr<SAEModel>> replicas;
    for (std::size_t b = 0; b < batch; ++b) replicas.push_back(std::make_unique<SAEModel>(model.config()));

    AdamState state(model.params());
    std::vector<NdArray> grads;
    for (const auto& p : master) grads.emplace_back(p.value().shape());

    TrainResult result;
    result.losses.reserve(config.iterations);
    std::size_t above = 0;
    std::vector<double> sample_loss(batch);

    for (std::size_t it = 0; it < config.iterations; ++it) {
        Rng draw = make_rng(config.seed, it, SeedRole::BatchDraw);
        std::vector<std::size_t> picks(batch);
        for (auto& p : picks) {
            p = static_cast<std::size_t>(uniform_int(draw, 0, static_cast<std::int64_t>(corpus.size()) - 1));
        }

        for (auto& r : replicas) {
            auto& items = r->params().items();
            for (std::size_t i = 0; i < items.size(); ++i) {
                auto dst = items[i].mutable_value().data();
                const auto src = master[i].value().data();
                std::copy(src.begin(), src.end(), dst.begin());
            }
            r->params().zero_grad();
        }

        const auto members = static_cast<std::int64_t>(batch);
        std::vector<std::exception_ptr> failures(batch);
#pragma omp parallel for schedule(static, 1)
        for (std::int64_t b = 0; b < members; ++b) {
            const auto slot = static_cast<std::size_t>(b);
            try {
                const Triplet t = make_training_triplet(corpus[picks[slot]], augmentation,
                                                        derive_seed(config.seed, it * batch + slot, SeedRole::Triplet));
                const SAEModel& replica = *replicas[slot];
                const ad::Var pred = replica.forward(volume_to_array(t.reference), volume_to_array(t.noisy));
                const ad::Var loss = sae_loss(pred, volume_to_array(t.target), config.clip_eps);
                sample_loss[slot] = loss.value()[0];
                ad::backward(loss);
            } catch (...) {
                failures[slot] = std::current_exception();
            }
        }
        for (const auto& f : failures) {
            if (f) std::rethrow_exception(f);
        }

        double loss = 0.0;
        for (double l : sample_loss) loss += l;
        loss /= static_cast<double>(batch);
        if (!std::isfinite(loss)) throw EvaluationError("non-finite loss at iteration " + std::to_string(it + 1));

        const double inv = 1.0 / static_cast<double>(batch);
        for (std::size_t i = 0; i < master.size(); ++i) {
            auto g = grads[i].data();
            std::fill(g.begin(), g.end(), 0.0);
            for (const auto& r : replicas) {
                const auto& node = r->params().items()[i].var.node();
                if (node->grad.size() == 0) continue;
                const auto src = node->grad.data();
                for (std::size_t j = 0; j < g.size(); ++j) g[j] += src[j];
            }
            for (auto& v : g) v *= inv;
        }
        adam_step(model.params(), state, grads, config);

        result.losses.push_back(loss);
        if (loss > kDivergenceFactor * result.losses.front()) {
            if (++above == kDivergenceRun) {
                result.warnings.push_back("loss above " + format_double17(kDivergenceFactor) + "x the initial value for " +
                                          std::to_string(kDivergenceRun) + " consecutive iterations (iteration " +
                                          std::to_string(it + 1) + ")");
            }
        } else {
            above = 0;
        }
        if (progress) progress(it + 1, loss);
    }
    return result;
}

void write_loss_csv(const std::vector<double>& losses, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write loss trace " + path.string());
    out << "iteration,loss\n";
    for (std::size_t i = 0; i < losses.size(); ++i) out << (i + 1) << ',' << format_double17(losses[i]) << '\n';
    if (!out) throw IoError("short write to " + path.string());
}

}  // namespace shaperef
