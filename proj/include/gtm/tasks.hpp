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

// Downstream harnesses that reuse the pretrained backbone and its single
// projection head unchanged: forecasting, point-level imputation and
// reconstruction-based anomaly detection, plus their metrics.

#include <cstdint>
#include <span>
#include <vector>

#include "gtm/model.hpp"
#include "gtm/pretrain.hpp"

namespace gtm {

// ---------------------------------------------------------------------------
// Forecasting

struct ForecastSpec {
    std::size_t lookback = 384;
    std::size_t horizon = 96;

    /// 4 x horizon capped at 1440.
    static std::size_t default_lookback(std::size_t horizon);
    void validate(std::size_t patch_len) const;
};

/// Per channel: RevIN over the lookback, patch, generate horizon / L_p
/// patches, denormalize. history[c] holds at least `lookback` points; the
/// last `lookback` are used. Returns [C, horizon].
template <typename T>
Tensor<double> forecast(Model<T>& model, const std::vector<std::vector<double>>& history, const GranularityQuintuple& g,
                        const ForecastSpec& spec);

// ---------------------------------------------------------------------------
// Imputation

/// Every time point is one token carried as a constant patch (the point
/// value repeated L_p times); the imputed value is the mean of the generated
/// patch. Missing points form MASK spans over maximal missing runs.
struct ImputeSpec {
    std::size_t window = 64;
};

/// Spans over the maximal runs of missing[i] == 1, split so no span is
/// longer than max_len.
SpanSet missing_runs(std::span<const std::uint8_t> missing, std::size_t max_len);

/// Point-level instance for one normalized window.
InfillingInstance point_instance(std::span<const double> normalized, std::span<const std::uint8_t> missing,
                                 std::size_t patch_len, std::size_t max_span_len);

/// Returns a copy of `values` with missing points filled; observed points
/// are copied bit for bit.
template <typename T>
std::vector<double> impute_channel(Model<T>& model, std::span<const double> values,
                                   std::span<const std::uint8_t> missing, const GranularityQuintuple& g,
                                   const ImputeSpec& spec);

template <typename T>
std::vector<std::vector<double>> impute(Model<T>& model, const std::vector<std::vector<double>>& series,
                                        const std::vector<std::vector<std::uint8_t>>& missing,
                                        const GranularityQuintuple& g, const ImputeSpec& spec);

/// Random point mask with round(ratio * n) missing points.
std::vector<std::uint8_t> random_point_mask(std::size_t n, double ratio, Rng& rng);

struct FinetuneConfig {
    std::size_t steps = 200;
    std::size_t batch_size = 8;
    double lr = 1e-3;
    double grad_clip = 1.0;
    std::vector<double> ratios = {0.125, 0.25, 0.375, 0.5};
    std::uint64_t seed = 0;
};

/// Fine-tunes every parameter on point-level infilling of random masks.
/// Returns the per-step training loss.
std::vector<double> finetune_imputation(Model<float>& model, const std::vector<SeriesSource>& data,
                                        const ImputeSpec& spec, const FinetuneConfig& cfg);

// ---------------------------------------------------------------------------
// Anomaly detection

struct AnomalySpec {
    std::size_t window = 256;
    std::size_t stride = 128;
    double threshold_quantile = 0.99;
};

/// Squared reconstruction error per point, each patch of each sliding window
/// masked on its own and regenerated, averaged over covering windows. The
/// window is normalized with statistics of its unmasked patches.
template <typename T>
std::vector<double> reconstruction_scores(Model<T>& model, std::span<const double> values,
                                          const GranularityQuintuple& g, const AnomalySpec& spec);

/// Channel mean of per-channel reconstruction scores.
template <typename T>
std::vector<double> reconstruction_scores(Model<T>& model, const std::vector<std::vector<double>>& series,
                                          const GranularityQuintuple& g, const AnomalySpec& spec);

/// Linear-interpolation quantile of a nonempty sample.
double quantile(std::span<const double> values, double q);

/// 1 where score > quantile(validation, q); q == 0 flags everything.
std::vector<std::uint8_t> detect(std::span<const double> scores, std::span<const double> validation, double q);

/// Quantile matching the known anomaly rate of labelled validation data,
/// 0.99 without labels.
double default_threshold_quantile(std::span<const std::uint8_t> validation_labels);

/// Every truth segment containing at least one predicted point is marked
/// fully detected.
std::vector<std::uint8_t> point_adjust(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth);

// ---------------------------------------------------------------------------
// Metrics

struct RegressionMetrics {
    double mse = 0.0;
    double mae = 0.0;
};

RegressionMetrics regression_metrics(std::span<const double> pred, std::span<const double> target);

struct ClassificationMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    /// Neither prediction nor truth has a positive; F1 is reported as 0.
    bool degenerate = false;
};

ClassificationMetrics classification_metrics(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth);

}  // namespace gtm
