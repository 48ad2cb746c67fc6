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
#include <functional>
#include <span>
#include <string>

#include "shaperef/autodiff.hpp"

namespace shaperef {

struct GradCheckOptions {
    double step = 1e-5;         // central-difference step, must lie in [1e-6, 1e-4]
    std::size_t samples = 200;  // coordinates checked; every coordinate when the total is smaller
    std::uint64_t seed = 7;
};

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::size_t coordinates = 0;
    std::string worst;  // "param[index]" of the worst coordinate
};

/// Compares `analytic` (one array per parameter) with central differences of `f` at sampled
/// coordinates. Error per coordinate is |a - c| / max(1, |a|, |c|).
GradCheckResult compare_with_central_differences(const std::function<double()>& f, std::span<ad::Var> params,
                                                 std::span<const NdArray> analytic,
                                                 const GradCheckOptions& options = {});

/// Runs `loss` once with backward to get analytic gradients, then compares them.
GradCheckResult grad_check(const std::function<ad::Var()>& loss, std::span<ad::Var> params,
                           const GradCheckOptions& options = {});

}  // namespace shaperef
