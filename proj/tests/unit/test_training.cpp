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

#include <gtest/gtest.h>
#include <omp.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "shaperef/errors.hpp"
#include "shaperef/training.hpp"

namespace {

namespace ad = shaperef::ad;
using shaperef::NdArray;
using shaperef::ParameterSet;
using shaperef::TrainConfig;

std::vector<shaperef::MaskVolume> tiny_corpus(std::size_t count) {
    std::vector<shaperef::MaskVolume> out;
    for (std::size_t i = 0; i < count; ++i) {
        const auto s = oracle::ellipse_mask(16, 16, 7.5, 7.5, 4.0 + static_cast<double>(i % 3), 3.0, 0.5 * static_cast<double>(i));
        shaperef::MaskVolume v({16, 16, 4}, {});
        for (std::size_t z = 0; z < 4; ++z)
            for (std::size_t y = 0; y < 16; ++y)
                for (std::size_t x = 0; x < 16; ++x) v.set(x, y, z, s.at(x, y));
        out.push_back(v);
    }
    return out;
}

shaperef::AugmentationConfig tiny_augmentation() {
    shaperef::AugmentationConfig a;
    a.transform.translation = {2.0, 2.0, 0.0};
    a.noise = {1, 2, 1, 2, 1.0, 2.0};
    return a;
}

TEST(Loss, ClosedForms) {
    const auto half = ad::constant(NdArray({1, 2, 2, 2}, 0.5));
    NdArray target({2, 2, 2}, {0, 1, 1, 0, 1, 1, 1, 0});
    EXPECT_DOUBLE_EQ(shaperef::sae_loss(half, target, 1e-7).value()[0], std::numbers::ln2);
    const auto p = ad::constant(NdArray({2}, {0.25, 0.75}));
    EXPECT_NEAR(shaperef::sae_loss(p, NdArray({2}, {0, 1}), 1e-7).value()[0], 0.287682, 1e-6);
    const auto exact = ad::constant(NdArray({3}, {0, 1, 0}));
    const double l = shaperef::sae_loss(exact, NdArray({3}, {0, 1, 0}), 1e-7).value()[0];
    EXPECT_GE(l, 0.0);
    EXPECT_LE(l, -std::log1p(-1e-7) + 1e-16);
    EXPECT_THROW((void)shaperef::sae_loss(p, NdArray({3}), 1e-7), shaperef::ShapeError);
}

TEST(Loss, NonNegativeOnRandomInputs) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 50; ++t) {
        NdArray p({20}), y({20});
        for (std::size_t i = 0; i < 20; ++i) {
            p[i] = u(rng);
            y[i] = u(rng) < 0.5 ? 0.0 : 1.0;
        }
        EXPECT_GE(shaperef::sae_loss(ad::constant(p), y, 1e-7).value()[0], 0.0);
    }
}

// Scalar Adam with decoupled decay, written out directly.
struct ScalarAdam {
    double m = 0, v = 0;
    int t = 0;
    double step(double p, double g, const TrainConfig& c) {
        ++t;
        p -= c.learning_rate * c.weight_decay * p;
        m = c.beta1 * m + (1 - c.beta1) * g;
        v = c.beta2 * v + (1 - c.beta2) * g * g;
        const double mh = m / (1 - std::pow(c.beta1, t));
        const double vh = v / (1 - std::pow(c.beta2, t));
        return p - c.learning_rate * mh / (std::sqrt(vh) + c.epsilon);
    }
};

TEST(Adam, MatchesScalarOracle) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g(0.0, 1.0);
    ParameterSet params;
    params.add("a", NdArray({3}, {0.5, -1.0, 2.0}));
    params.add("b", NdArray({2, 2}, {0.1, 0.2, 0.3, 0.4}));
    const TrainConfig cfg;
    shaperef::AdamState state(params);
    std::vector<std::vector<ScalarAdam>> oracles{std::vector<ScalarAdam>(3), std::vector<ScalarAdam>(4)};
    std::vector<std::vector<double>> expected{{0.5, -1.0, 2.0}, {0.1, 0.2, 0.3, 0.4}};
    for (int step = 0; step < 25; ++step) {
        std::vector<NdArray> grads{NdArray({3}), NdArray({2, 2})};
        for (std::size_t p = 0; p < 2; ++p)
            for (std::size_t i = 0; i < grads[p].size(); ++i) {
                grads[p][i] = g(rng);
                expected[p][i] = oracles[p][i].step(expected[p][i], grads[p][i], cfg);
            }
        shaperef::adam_step(params, state, grads, cfg);
        for (std::size_t p = 0; p < 2; ++p)
            for (std::size_t i = 0; i < grads[p].size(); ++i)
                EXPECT_NEAR(params.items()[p].value()[i], expected[p][i], 1e-15);
    }
    EXPECT_EQ(state.step, 25U);
}

TEST(Adam, FirstStepMovesByLearningRate) {
    TrainConfig cfg;
    cfg.weight_decay = 0.0;
    for (double g : {1e-3, 0.5, -7.0, 1e4}) {
        ParameterSet params;
        params.add("w", NdArray({1}, 1.0));
        shaperef::AdamState state(params);
        shaperef::adam_step(params, state, std::vector<NdArray>{NdArray({1}, g)}, cfg);
        const double moved = 1.0 - params.items()[0].value()[0];
        EXPECT_NEAR(moved, std::copysign(cfg.learning_rate, g), cfg.learning_rate * 1e-4);
    }
}

TEST(Adam, ZeroGradientWithoutDecayIsFixedPoint) {
    TrainConfig cfg;
    cfg.weight_decay = 0.0;
    ParameterSet params;
    params.add("w", NdArray({4}, {1, -2, 3, 0.5}));
    const auto before = params.items()[0].value();
    shaperef::AdamState state(params);
    for (int i = 0; i < 5; ++i) shaperef::adam_step(params, state, std::vector<NdArray>{NdArray({4})}, cfg);
    EXPECT_EQ(params.items()[0].value(), before);
}

TEST(Adam, NonFiniteGradientNamesParameterAndChangesNothing) {
    ParameterSet params;
    params.add("first", NdArray({2}, 1.0));
    params.add("second.w", NdArray({2}, 1.0));
    shaperef::AdamState state(params);
    std::vector<NdArray> grads{NdArray({2}, 0.1), NdArray({2}, {0.1, std::nan("")})};
    try {
        shaperef::adam_step(params, state, grads, {});
        FAIL() << "expected EvaluationError";
    } catch (const shaperef::EvaluationError& e) {
        EXPECT_NE(std::string(e.what()).find("second.w"), std::string::npos);
    }
    EXPECT_EQ(params.items()[0].value(), NdArray({2}, 1.0));
    EXPECT_EQ(state.step, 0U);
    grads[1] = NdArray({3});
    EXPECT_THROW(shaperef::adam_step(params, state, grads, {}), shaperef::ShapeError);
}

TEST(TrainConfigTest, Validation) {
    EXPECT_NO_THROW(TrainConfig{}.validate());
    const TrainConfig d;
    EXPECT_EQ(d.learning_rate, 2e-4);
    EXPECT_EQ(d.beta1, 0.97);
    EXPECT_EQ(d.beta2, 0.999);
    EXPECT_EQ(d.weight_decay, 5e-4);
    EXPECT_EQ(d.batch_size, 4U);
    EXPECT_EQ(d.iterations, 2000U);
    EXPECT_EQ(d.clip_eps, 1e-7);
    TrainConfig c;
    c.learning_rate = 0.0;
    EXPECT_THROW(c.validate(), shaperef::ConfigError);
    c = {};
    c.beta1 = 1.0;
    EXPECT_THROW(c.validate(), shaperef::ConfigError);
    c = {};
    c.clip_eps = 0.5;
    EXPECT_THROW(c.validate(), shaperef::ConfigError);
    c = {};
    c.batch_size = 0;
    EXPECT_THROW(c.validate(), shaperef::ConfigError);
}

TEST(Training, ZeroIterationsLeaveModelUnchanged) {
    shaperef::SAEModel model(shaperef::SAEConfig::tiny(), 1);
    const auto before = shaperef::encode_model(model);
    TrainConfig cfg;
    cfg.iterations = 0;
    const auto result = shaperef::train_sae(model, tiny_corpus(3), cfg, tiny_augmentation());
    EXPECT_TRUE(result.losses.empty());
    EXPECT_EQ(shaperef::encode_model(model), before);
}

TEST(Training, DeterministicAndThreadCountIndependent) {
    TrainConfig cfg;
    cfg.iterations = 4;
    cfg.batch_size = 3;
    cfg.seed = 5;
    const auto corpus = tiny_corpus(5);
    auto run = [&](int threads) {
        omp_set_num_threads(threads);
        shaperef::SAEModel model(shaperef::SAEConfig::tiny(), 2);
        std::vector<std::pair<std::size_t, double>> seen;
        const auto r = shaperef::train_sae(model, corpus, cfg, tiny_augmentation(),
                                           [&](std::size_t it, double loss) { seen.emplace_back(it, loss); });
        EXPECT_EQ(seen.size(), cfg.iterations);
        return std::make_pair(r.losses, shaperef::encode_model(model));
    };
    const auto a = run(1);
    const auto b = run(1);
    const auto c = run(3);
    omp_set_num_threads(omp_get_num_procs());
    ASSERT_EQ(a.first.size(), 4U);
    for (double l : a.first) {
        EXPECT_TRUE(std::isfinite(l));
        EXPECT_GT(l, 0.0);
    }
    EXPECT_EQ(a.first, b.first);
    EXPECT_EQ(a.second, b.second);
    EXPECT_EQ(a.first, c.first);
    EXPECT_EQ(a.second, c.second);
}

TEST(Training, DifferentSeedsDiffer) {
    TrainConfig cfg;
    cfg.iterations = 2;
    cfg.batch_size = 2;
    const auto corpus = tiny_corpus(4);
    shaperef::SAEModel m1(shaperef::SAEConfig::tiny(), 3), m2(shaperef::SAEConfig::tiny(), 3);
    const auto r1 = shaperef::train_sae(m1, corpus, cfg, tiny_augmentation());
    cfg.seed = 1;
    const auto r2 = shaperef::train_sae(m2, corpus, cfg, tiny_augmentation());
    EXPECT_NE(r1.losses, r2.losses);
}

TEST(Training, CorpusErrors) {
    shaperef::SAEModel model(shaperef::SAEConfig::tiny(), 4);
    TrainConfig cfg;
    cfg.iterations = 1;
    EXPECT_THROW((void)shaperef::train_sae(model, {}, cfg, tiny_augmentation()), shaperef::ConfigError);
    std::vector<shaperef::MaskVolume> wrong{shaperef::MaskVolume({16, 8, 4}, {}, std::vector<std::uint8_t>(512, 1))};
    EXPECT_THROW((void)shaperef::train_sae(model, wrong, cfg, tiny_augmentation()), shaperef::ShapeError);
    std::vector<shaperef::MaskVolume> empty{shaperef::MaskVolume({16, 16, 4}, {})};
    EXPECT_THROW((void)shaperef::train_sae(model, empty, cfg, tiny_augmentation()), shaperef::EmptyShapeError);
}

TEST(LossCsv, Format) {
    const auto path = std::filesystem::temp_directory_path() / "shaperef_loss.csv";
    shaperef::write_loss_csv({0.5, 0.1, 1.0 / 3.0}, path);
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    EXPECT_EQ(ss.str(), "iteration,loss\n1,0.5\n2,0.10000000000000001\n3,0.33333333333333331\n");
    std::filesystem::remove(path);
    EXPECT_THROW(shaperef::write_loss_csv({1.0}, "/nonexistent/dir/loss.csv"), shaperef::IoError);
}

}  // namespace
