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

// Run configuration for the command-line tool: one JSON document with
// per-command sections. Every key is optional; unknown keys are rejected.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "gtm/dataset.hpp"
#include "gtm/model.hpp"
#include "gtm/pretrain.hpp"
#include "gtm/tasks.hpp"
#include "json.hpp"

namespace gtm::cli {

struct DataEntry {
    std::string name;
    std::optional<std::string> path;
    std::optional<SyntheticSpec> synthetic;
    std::optional<GranularityQuintuple> granularity;
    bool allow_missing = false;
    TimestampColumn timestamp = TimestampColumn::detect;
    /// Column holding 0/1 anomaly labels; removed from the channels.
    std::optional<std::string> label_column;
};

struct ForecastSection {
    std::size_t lookback = 0;  // 0: 4 x horizon capped at 1440
    std::vector<std::size_t> horizons = {96};
    std::size_t stride = 0;       // 0: horizon
    std::size_t max_windows = 0;  // 0: every origin in the test split
};

struct ImputeSection {
    std::size_t window = 64;
    std::vector<double> ratios = {0.125, 0.25, 0.375, 0.5};
    std::size_t finetune_steps = 600;
    double finetune_lr = 1e-3;
    std::size_t finetune_batch = 8;
    std::size_t max_points = 0;  // 0: whole test split
};

struct DetectSection {
    std::size_t window = 256;
    std::size_t stride = 128;
    std::optional<double> threshold_quantile;  // default: anomaly rate of validation labels
};

struct AnalyzeSection {
    std::size_t grid_points = 100;
    double pad = 5.0;
    std::size_t max_points = 100000;
};

struct RunConfig {
    std::uint64_t seed = 0;
    std::vector<DataEntry> data;
    std::array<double, 3> split = {0.7, 0.1, 0.2};
    ModelConfig model;
    bool model_given = false;
    TrainConfig train;
    std::string checkpoint;
    std::string resume;
    ForecastSection forecast;
    ImputeSection impute;
    DetectSection detect;
    AnalyzeSection analyze;
};

RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

/// Every field, defaults included.
nlohmann::json to_json(const RunConfig& cfg);

}  // namespace gtm::cli
