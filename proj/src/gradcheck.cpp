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

#include "shaperef/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "shaperef/errors.hpp"

namespace shaperef {

namespace {

double evaluate(const std::function<double()>& f) {
    const double v = f();
    if (!std::isfinite(v)) {
        throw EvaluationError("objective is not finite during gradient check");
    }
    return v;
}

}  // namespace

GradCheckResult compare_with_central_differences(const std::function<double()>& f, std::span<ad::Var> params,
                                                 std::span<const NdArray> analytic, const GradCheckOptions& options) {
    if (options.step < 1e-6 || options.step > 1e-4) {
        throw ConfigError("gradient check step must lie in [1e-6, 1e-4]");
    }
    if (params.size() != analytic.size()) {
        throw ShapeError("one analytic gradient per parameter is required");
    }
    // Flat coordinate list (param, index). One coordinate per parameter first, then random fill.
    std::vector<std::pair<std::size_t, std::size_t>> coords;
    std::size_t total = 0;
    for (std::size_t p = 0; p < params.size(); ++p) {
        if (analytic[p].size() != params[p].value().size()) {
            throw ShapeError("analytic gradient shape differs from parameter shape");
        }
        total += params[p].value().size();
    }
    std::mt19937_64 rng(options.seed);
    if (total <= options.samples) {
        for (std::size_t p = 0; p < params.size(); ++p)
            for (std::size_t i = 0; i < params[p].value().size(); ++i) coords.emplace_back(p, i);
    } else {
        for (std::size_t p = 0; p < params.size() && coords.size() < options.samples; ++p) {
            coords.emplace_back(p, rng() % params[p].value().size());
        }
        while (coords.size() < options.samples) {
            std::size_t flat = rng() % total;
            std::size_t p = 0;
            while (flat >= params[p].value().size()) flat -= params[p++].value().size();
            coords.emplace_back(p, flat);
        }
    }

    GradCheckResult result;
    for (const auto& [p, i] : coords) {
        double& x = params[p].mutable_value()[i];
        const double saved = x;
        x = saved + options.step;
        const double up = evaluate(f);
        x = saved - options.step;
        const double down = evaluate(f);
        x = saved;
        const double numeric = (up - down) / (2.0 * options.step);
        const double a = analytic[p][i];
        const double err = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
        if (err > result.max_relative_error || result.coordinates == 0) {
            result.max_relative_error = std::max(err, result.max_relative_error);
            result.worst = "param" + std::to_string(p) + "[" + std::to_string(i) + "]";
        }
        ++result.coordinates;
    }
    return result;
}

GradCheckResult grad_check(const std::function<ad::Var()>& loss, std::span<ad::Var> params,
                           const GradCheckOptions& options) {
    for (auto& p : params) p.zero_grad();
    const ad::Var root = loss();
    if (!std::isfinite(root.value()[0])) {
        throw EvaluationError("objective is not finite during gradient check");
    }
    ad::backward(root);
    std::vector<NdArray> analytic;
    analytic.reserve(params.size());
    for (auto& p : params) analytic.push_back(p.grad());
    return compare_with_central_differences([&] { return loss().value()[0]; }, params, analytic, options);
}

}  // namespace shaperef
