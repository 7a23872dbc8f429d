// Copyright 2026 the gtm authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <random>
#include <vector>

#include "gtm/autograd.hpp"
#include "gtm/model.hpp"
#include "gtm/tensor.hpp"

namespace gtm::testing {

inline Tensor<double> random_tensor(std::vector<std::size_t> shape, std::mt19937_64& rng, double scale = 1.0) {
    return Tensor<double>::randn(std::move(shape), rng, scale);
}

inline double max_abs_diff(const Tensor<double>& a, const Tensor<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline ModelConfig tiny_config(std::size_t d = 16, std::size_t layers = 1, std::size_t lp = 4, std::uint64_t seed = 1) {
    ModelConfig c;
    c.d_model = d;
    c.n_layers = layers;
    c.patch_len = lp;
    c.n_heads = 2;
    c.d_fk = 4;
    c.maxpos = 32;
    c.maxspan = 16;
    c.seed = seed;
    return c;
}

/// Patch matrix with rows drawn from N(0, 1).
inline PatchMatrix random_patches(std::size_t n, std::size_t lp, std::mt19937_64& rng) {
    PatchMatrix pm;
    pm.patches = random_tensor({n, lp}, rng);
    pm.window_len = n * lp;
    return pm;
}

}  // namespace gtm::testing
