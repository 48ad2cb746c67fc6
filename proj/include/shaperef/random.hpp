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
#include <random>

namespace shaperef {

using Rng = std::mt19937_64;

/// Role tags for seed splitting.
enum class SeedRole : std::uint32_t {
    Init = 1,
    BatchDraw = 2,
    TransformT1 = 3,
    TransformT2 = 4,
    Noise = 5,
    Corpus = 6,
    Triplet = 7,
};

/// Sub-seed for (master, index, role), derived through std::seed_seq so it is identical on
/// every conforming standard library.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index, SeedRole role);

inline Rng make_rng(std::uint64_t master, std::uint64_t index, SeedRole role) {
    return Rng(derive_seed(master, index, role));
}

double uniform_real(Rng& rng, double lo, double hi);
/// Uniform integer in [lo, hi].
std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi);
double normal(Rng& rng, double mean, double stddev);

}  // namespace shaperef
