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

#include "gtm/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace gtm {

namespace {

double evaluate(const ScalarFn& fn) {
    Tape<double> tape;
    const Var<double> out = fn(tape);
    if (out.value().size() != 1) throw DimensionError("grad_check: computation must return a single value");
    return out.value()[0];
}

}  // namespace

GradCheckReport grad_check(const ScalarFn& fn, std::span<Parameter<double>* const> params,
                           const GradCheckOptions& options) {
    for (auto* p : params) p->zero_grad();
    {
        Tape<double> tape;
        const Var<double> out = fn(tape);
        tape.backward(out);
    }

    std::mt19937_64 rng(options.seed);
    GradCheckReport report;
    for (auto* p : params) {
        ParamGradError entry;
        entry.name = p->name;
        std::vector<std::size_t> idx(p->value.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        if (options.max_entries != 0 && idx.size() > options.max_entries) {
            std::shuffle(idx.begin(), idx.end(), rng);
            idx.resize(options.max_entries);
        }
        for (const std::size_t i : idx) {
            const double saved = p->value[i];
            p->value[i] = saved + options.step;
            const double up = evaluate(fn);
            p->value[i] = saved - options.step;
            const double down = evaluate(fn);
            p->value[i] = saved;
            if (!std::isfinite(up) || !std::isfinite(down)) {
                throw NumericError("grad_check: non-finite output perturbing " + p->name + "[" + std::to_string(i) + "]");
            }
            const double numeric = (up - down) / (2.0 * options.step);
            const double analytic = p->grad[i];
            const double denom = std::max({std::abs(numeric), std::abs(analytic), options.floor});
            const double rel = std::abs(numeric - analytic) / denom;
            if (rel > entry.max_rel_err || (i == idx.front() && entry.max_rel_err == 0.0)) {
                entry.max_rel_err = rel;
                entry.worst_index = i;
                entry.analytic = analytic;
                entry.numeric = numeric;
            }
        }
        report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
        report.params.push_back(std::move(entry));
    }
    for (auto* p : params) p->zero_grad();
    return report;
}

}  // namespace gtm
