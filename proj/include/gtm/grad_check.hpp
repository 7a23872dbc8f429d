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

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gtm/autograd.hpp"

namespace gtm {

struct GradCheckOptions {
    double step = 1e-5;
    /// Denominator floor for the relative error, so that entries whose true
    /// gradient is ~0 are judged on absolute error.
    double floor = 1e-6;
    /// Entries checked per parameter; 0 checks every entry.
    std::size_t max_entries = 0;
    std::uint64_t seed = 0;
};

struct ParamGradError {
    std::string name;
    double max_rel_err = 0.0;
    std::size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
};

struct GradCheckReport {
    std::vector<ParamGradError> params;
    double max_rel_err = 0.0;
};

using ScalarFn = std::function<Var<double>(Tape<double>&)>;

/// Compares reverse-mode gradients of a scalar-valued computation against
/// central finite differences on every listed parameter. `fn` must build its
/// whole computation on the tape it is handed and read parameters through
/// Tape::param. Parameter grads are left zeroed.
GradCheckReport grad_check(const ScalarFn& fn, std::span<Parameter<double>* const> params,
                           const GradCheckOptions& options = {});

}  // namespace gtm
