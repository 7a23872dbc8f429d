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

#include "gtm/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace gtm {

double infilling_loss(const Tensor<double>& pred, const Tensor<double>& target) {
    if (!pred.same_shape(target)) {
        throw DimensionError("infilling_loss: " + shape_string(pred.shape()) + " vs " + shape_string(target.shape()));
    }
    if (pred.rows() == 0) throw ConfigError("infilling_loss: no target rows");
    double total = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        total += d * d;
    }
    return total / static_cast<double>(pred.rows());
}

template <typename T>
Var<T> infilling_loss(Var<T> pred, const InfillingInstance& inst) {
    const auto rows = inst.patch_target_rows();
    if (rows.empty()) throw ConfigError("infilling_loss: instance has no patch targets");
    if (pred.value().rows() != inst.part_b_len()) {
        throw DimensionError("infilling_loss: " + std::to_string(pred.value().rows()) + " predictions for " +
                             std::to_string(inst.part_b_len()) + " Part-B tokens");
    }
    const std::size_t lp = inst.patch_len;
    Tensor<T> target({rows.size(), lp});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t c = 0; c < lp; ++c) target(i, c) = static_cast<T>(inst.targets(rows[i], c));
    }
    return ops::mean_row_sq_error(ops::gather_rows(pred, std::span<const std::size_t>(rows)), target);
}

template <typename T>
void adam_step(std::span<Parameter<T>* const> params, AdamState<T>& state, double lr, const AdamOptions& o) {
    if (state.m.empty()) {
        for (const auto* p : params) {
            state.m.emplace_back(p->value.shape());
            state.v.emplace_back(p->value.shape());
        }
    }
    if (state.m.size() != params.size()) throw DimensionError("adam_step: optimizer state has the wrong size");
    ++state.t;
    const double bc1 = 1.0 - std::pow(o.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(o.beta2, static_cast<double>(state.t));
    for (std::size_t k = 0; k < params.size(); ++k) {
        Parameter<T>& p = *params[k];
        Tensor<T>& m = state.m[k];
        Tensor<T>& v = state.v[k];
        if (!m.same_shape(p.value)) throw DimensionError("adam_step: state shape mismatch for " + p.name);
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double g = p.grad[i];
            const double mi = o.beta1 * m[i] + (1.0 - o.beta1) * g;
            const double vi = o.beta2 * v[i] + (1.0 - o.beta2) * g * g;
            m[i] = static_cast<T>(mi);
            v[i] = static_cast<T>(vi);
            const double update = lr * (mi / bc1) / (std::sqrt(vi / bc2) + o.eps);
            p.value[i] = static_cast<T>(p.value[i] - update);
        }
    }
}

double cosine_lr(std::size_t step, std::size_t total_steps, double base_lr, double min_lr, std::size_t warmup_steps) {
    if (step < warmup_steps) {
        return base_lr * static_cast<double>(step + 1) / static_cast<double>(warmup_steps);
    }
    if (total_steps <= warmup_steps + 1) return base_lr;
    const double progress = std::min(
        1.0, static_cast<double>(step - warmup_steps) / static_cast<double>(total_steps - warmup_steps - 1));
    return min_lr + 0.5 * (base_lr - min_lr) * (1.0 + std::cos(std::numbers::pi * progress));
}

template <typename T>
double clip_grad_norm(std::span<Parameter<T>* const> params, double max_norm) {
    double sq = 0.0;
    for (const auto* p : params) {
        for (const T g : p->grad.values()) sq += static_cast<double>(g) * g;
    }
    const double norm = std::sqrt(sq);
    if (!std::isfinite(norm)) throw NumericError("gradient norm is not finite");
    if (max_norm > 0.0 && norm > max_norm) {
        const auto s = static_cast<T>(max_norm / norm);
        for (auto* p : params) {
            for (T& g : p->grad.values()) g *= s;
        }
    }
    return norm;
}

void TrainConfig::validate() const {
    if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
    if (min_lr < 0.0 || min_lr > lr) throw ConfigError("min_lr must lie in [0, lr]");
    if (batch_size == 0) throw ConfigError("batch size must be >= 1");
    if (window_len == 0 || stride == 0) throw ConfigError("window length and stride must be positive");
    if (val_fraction < 0.0 || val_fraction >= 1.0) throw ConfigError("val_fraction must lie in [0, 1)");
    if (tail_prob < 0.0 || tail_prob > 1.0) throw ConfigError("tail_prob must lie in [0, 1]");
    if (grad_clip < 0.0) throw ConfigError("grad_clip must be >= 0");
}

std::vector<PatchMatrix> normalized_windows(std::span<const double> values, std::size_t window_len,
                                            std::size_t stride, std::size_t patch_len, std::size_t channel) {
    auto windows = window_and_patch(values, window_len, stride, patch_len, channel);
    for (auto& w : windows) {
        const auto norm = revin_normalize(std::span<const double>(w.patches.values()));
        w.patches.values() = norm.values;
    }
    return windows;
}

namespace {

std::size_t validation_length(std::size_t n, double fraction) {
    return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
}

}  // namespace

std::vector<Sample> validation_samples(const std::vector<SeriesSource>& data, const TrainConfig& cfg,
                                       std::size_t patch_len) {
    std::vector<Sample> out;
    if (cfg.val_fraction == 0.0) return out;
    Rng rng(cfg.seed ^ 0x5eed5eedULL);
    for (std::size_t c = 0; c < data.size(); ++c) {
        const auto& values = data[c].values;
        const std::size_t n = values.size();
        const std::size_t val_len = validation_length(n, cfg.val_fraction);
        if (val_len == 0 || n < cfg.window_len) continue;
        const std::size_t np = cfg.window_len / patch_len;
        if (val_len >= cfg.window_len) {
            const std::span<const double> tail(values.data() + (n - val_len), val_len);
            for (const auto& w : normalized_windows(tail, cfg.window_len, cfg.stride, patch_len, c)) {
                std::bernoulli_distribution tail_draw(cfg.tail_prob);
                const bool tail_mode = tail_draw(rng);
                out.push_back({build_infilling_instance(w, sample_spans(np, cfg.sampling, tail_mode, rng)),
                               data[c].granularity});
            }
        } else {
            // Last window; the held-out points are masked as one tail span.
            const std::span<const double> last(values.data() + (n - cfg.window_len), cfg.window_len);
            const auto windows = normalized_windows(last, cfg.window_len, cfg.window_len, patch_len, c);
            const std::size_t masked = std::clamp<std::size_t>(val_len / patch_len, 1, np - 1);
            out.push_back({build_infilling_instance(windows.front(), make_span_set({Span{np - masked, masked}})),
                           data[c].granularity});
        }
    }
    return out;
}

double evaluate_loss(Model<float>& model, const std::vector<Sample>& samples) {
    if (samples.empty()) throw ConfigError("evaluate_loss: no samples");
    double total = 0.0;
    for (const auto& s : samples) {
        Tape<float> tape;
        total += infilling_loss(model.forward(tape, s.instance, s.granularity), s.instance).value()[0];
    }
    return total / static_cast<double>(samples.size());
}

std::string TrainReport::to_jsonl() const {
    std::ostringstream os;
    for (const auto& s : steps) {
        nlohmann::json j = {{"step", s.step}, {"epoch", s.epoch}, {"lr", s.lr}, {"train_loss", s.train_loss}};
        j["val_loss"] = s.val_loss ? nlohmann::json(*s.val_loss) : nlohmann::json(nullptr);
        os << j.dump() << '\n';
    }
    return os.str();
}

TrainReport pretrain(Model<float>& model, const std::vector<SeriesSource>& data, const TrainConfig& cfg,
                     AdamState<float>& state, const StepCallback& on_step) {
    cfg.validate();
    if (data.empty()) throw ConfigError("pretraining needs at least one series");
    const std::size_t lp = model.config.patch_len;
    if (cfg.window_len % lp != 0) {
        throw ConfigError("patch length " + std::to_string(lp) + " does not divide window length " +
                          std::to_string(cfg.window_len));
    }
    const std::size_t np = cfg.window_len / lp;
    if (np + 2 > model.config.maxspan || np + 1 > model.config.maxpos) {
        throw ConfigError("window of " + std::to_string(np) + " patches exceeds the model position tables");
    }

    struct Item {
        PatchMatrix window;
        std::size_t source;
    };
    std::vector<Item> train;
    for (std::size_t c = 0; c < data.size(); ++c) {
        const auto& values = data[c].values;
        const std::size_t train_len = values.size() - validation_length(values.size(), cfg.val_fraction);
        if (train_len < cfg.window_len) continue;
        for (auto& w : normalized_windows(std::span<const double>(values.data(), train_len), cfg.window_len,
                                          cfg.stride, lp, c)) {
            train.push_back({std::move(w), c});
        }
    }
    if (train.empty()) throw ConfigError("no training window fits in the training part of any series");
    const std::vector<Sample> val = validation_samples(data, cfg, lp);

    const std::size_t steps_per_epoch = (train.size() + cfg.batch_size - 1) / cfg.batch_size;
    std::size_t planned = cfg.epochs * steps_per_epoch;
    if (cfg.max_steps > 0) planned = std::min(planned, cfg.max_steps);
    const std::size_t first_step = state.t;
    const std::size_t total_steps = first_step + planned;

    auto params = model.parameters();
    for (auto* p : params) p->zero_grad();
    std::vector<Tensor<float>> best;
    TrainReport report;
    Rng rng(cfg.seed + first_step);
    std::bernoulli_distribution tail_draw(cfg.tail_prob);
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::size_t since_best = 0;
    std::size_t done = 0;

    for (std::size_t epoch = 0; epoch < cfg.epochs && done < planned; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        std::size_t epoch_steps = 0;
        for (std::size_t b = 0; b < train.size() && done < planned; b += cfg.batch_size) {
            const std::size_t end = std::min(train.size(), b + cfg.batch_size);
            const auto scale = 1.0f / static_cast<float>(end - b);
            double batch_loss = 0.0;
            for (std::size_t k = b; k < end; ++k) {
                const Item& item = train[order[k]];
                const SpanSet spans = sample_spans(np, cfg.sampling, tail_draw(rng), rng);
                const InfillingInstance inst = build_infilling_instance(item.window, spans);
                Tape<float> tape;
                try {
                    Var<float> loss = infilling_loss(model.forward(tape, inst, data[item.source].granularity), inst);
                    batch_loss += loss.value()[0];
                    tape.backward(ops::scale(loss, scale));
                } catch (const NumericError& e) {
                    throw NumericError("step " + std::to_string(state.t) + " (epoch " + std::to_string(epoch) +
                                       "): " + e.what());
                }
            }
            batch_loss /= static_cast<double>(end - b);
            clip_grad_norm(std::span<Parameter<float>* const>(params), cfg.grad_clip);
            const double lr = cosine_lr(state.t, total_steps, cfg.lr, cfg.min_lr, cfg.warmup_steps);
            StepRecord rec{state.t, epoch, lr, batch_loss, std::nullopt};
            adam_step(std::span<Parameter<float>* const>(params), state, lr);
            for (auto* p : params) p->zero_grad();
            ++done;
            epoch_loss += batch_loss;
            ++epoch_steps;
            report.steps.push_back(rec);
            const bool epoch_end = end == train.size() || done == planned;
            if (!epoch_end && on_step) on_step(rec);
        }
        report.epoch_train_loss.push_back(epoch_loss / static_cast<double>(std::max<std::size_t>(epoch_steps, 1)));
        if (!val.empty()) {
            const double v = evaluate_loss(model, val);
            report.steps.back().val_loss = v;
            report.epoch_val_loss.push_back(v);
            if (!report.best_val_loss || v < *report.best_val_loss) {
                report.best_val_loss = v;
                report.best_epoch = epoch;
                since_best = 0;
                best.clear();
                for (const auto* p : params) best.push_back(p->value);
            } else if (++since_best >= cfg.patience && cfg.patience > 0) {
                report.early_stopped = true;
            }
        }
        if (on_step) on_step(report.steps.back());
        if (report.early_stopped) break;
    }
    if (!best.empty()) {
        for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best[i];
    }
    return report;
}

template Var<float> infilling_loss<float>(Var<float>, const InfillingInstance&);
template Var<double> infilling_loss<double>(Var<double>, const InfillingInstance&);
template void adam_step<float>(std::span<Parameter<float>* const>, AdamState<float>&, double, const AdamOptions&);
template void adam_step<double>(std::span<Parameter<double>* const>, AdamState<double>&, double, const AdamOptions&);
template double clip_grad_norm<float>(std::span<Parameter<float>* const>, double);
template double clip_grad_norm<double>(std::span<Parameter<double>* const>, double);

}  // namespace gtm
