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

#include <string>

#include "run_config.hpp"

namespace gtm::cli {

struct RunContext {
    RunConfig config;
    std::string out_dir;
    bool quiet = false;
};

void run_analyze(const RunContext& ctx);
void run_pretrain(const RunContext& ctx);
void run_forecast(const RunContext& ctx);
void run_impute(const RunContext& ctx);
void run_detect(const RunContext& ctx);

}  // namespace gtm::cli
