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

// Blank-infilling objective, Adam with a cosine schedule, and the
// pretraining loop.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gtm/embedding.hpp"
#include "gtm/model.hpp"

namespace gtm {

/// (1/m) sum_r ||pred_r - target_r||^2 over m >= 1 rows.
double infilling_loss(const Tensor<double>& pred, const Tensor<double>& target);

/// Loss of a Part-B prediction [part_b_len, L_p] against the instance's
/// patch targets; END rows carry no numeric target and are skipped.
template <typename T>
Var<T> infilling_loss(Var<T> pred, const InfillingInstance& inst);

struct AdamOptions {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

template <typename T>
struct AdamState {
    std::vector<Tensor<T>> m;
    std::vector<Tensor<T>> v;
    std::size_t t = 0;
};

/// One Adam update of every parameter from its accumulated grad.
template <typename T>
void adam_step(std::span<Parameter<T>* const> params, AdamState<T>& state, double lr,
               const AdamOptions& options = {});

/// Linear warmup to base_lr, then cosine decay to min_lr at total_steps.
double cosine_lr(std::size_t step, std::size_t total_steps, double base_lr, double min_lr = 0.0,
                 std::size_t warmup_steps = 0);

/// Scales all grads so their joint L2 norm is at most max_norm. Returns the
/// norm before clipping.
template <typename T>
double clip_grad_norm(std::span<Parameter<T>* const> params, double max_norm);

struct TrainConfig {
    double lr = 1e-3;
    double min_lr = 0.0;
    std::size_t warmup_steps = 0;
    std::size_t batch_size = 8;
    std::size_t epochs = 10;
    /// Stops after this many optimizer steps in total (0 = no cap).
    std::size_t max_steps = 0;
    std::size_t patience = 3;
    double grad_clip = 1.0;
    std::size_t window_len = 256;
    std::size_t stride = 64;
    double val_fraction = 0.1;
    SpanSampling sampling;
    double tail_prob = 0.5;
    std::uint64_t seed = 0;

    void validate() const;
};

/// One univariate channel with its sampling granularity.
struct SeriesSource {
    std::vector<double> values;
    GranularityQuintuple granularity;
};

struct Sample {
    InfillingInstance instance;
    GranularityQuintuple granularity;
};

/// RevIN-normalized windows of one channel, already patched.
std::vector<PatchMatrix> normalized_windows(std::span<const double> values, std::size_t window_len,
                                            std::size_t stride, std::size_t patch_len, std::size_t channel = 0);

/// Fixed, seed-determined validation instances from the held-out tail of
/// every channel.
std::vector<Sample> validation_samples(const std::vector<SeriesSource>& data, const TrainConfig& cfg,
                                       std::size_t patch_len);

/// Mean infilling loss over samples, evaluated without gradients.
double evaluate_loss(Model<float>& model, const std::vector<Sample>& samples);

struct StepRecord {
    std::size_t step = 0;
    std::size_t epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    std::optional<double> val_loss;
};

struct TrainReport {
    std::vector<StepRecord> steps;
    std::vector<double> epoch_train_loss;
    std::vector<double> epoch_val_loss;
    std::optional<double> best_val_loss;
    std::size_t best_epoch = 0;
    bool early_stopped = false;

    /// One JSON object per step.
    std::string to_jsonl() const;
};

using StepCallback = std::function<void(const StepRecord&)>;

/// Trains in place and leaves the model at the parameters with the best
/// validation loss (the last ones when there is no validation data).
/// `state` carries optimizer moments and the global step across calls.
TrainReport pretrain(Model<float>& model, const std::vector<SeriesSource>& data, const TrainConfig& cfg,
                     AdamState<float>& state, const StepCallback& on_step = {});

}  // namespace gtm
