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

#include "gtm/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gtm {

std::size_t ForecastSpec::default_lookback(std::size_t horizon) { return std::min<std::size_t>(4 * horizon, 1440); }

void ForecastSpec::validate(std::size_t patch_len) const {
    if (horizon == 0 || horizon % patch_len != 0) {
        throw ConfigError("forecast horizon " + std::to_string(horizon) + " is not a positive multiple of patch length " +
                          std::to_string(patch_len));
    }
    if (lookback == 0 || lookback % patch_len != 0) {
        throw ConfigError("forecast lookback " + std::to_string(lookback) +
                          " is not a positive multiple of patch length " + std::to_string(patch_len));
    }
}

template <typename T>
Tensor<double> forecast(Model<T>& model, const std::vector<std::vector<double>>& history, const GranularityQuintuple& g,
                        const ForecastSpec& spec) {
    const std::size_t lp = model.config.patch_len;
    spec.validate(lp);
    Tensor<double> out({history.size(), spec.horizon});
    for (std::size_t c = 0; c < history.size(); ++c) {
        const auto& h = history[c];
        if (h.size() < spec.lookback) {
            throw ConfigError("channel " + std::to_string(c) + " has " + std::to_string(h.size()) +
                              " points, lookback needs " + std::to_string(spec.lookback));
        }
        const std::span<const double> recent(h.data() + (h.size() - spec.lookback), spec.lookback);
        const RevinResult norm = revin_normalize(recent);
        const PatchMatrix ctx = patchify(norm.values, lp);
        const Tensor<double> gen = generate_autoregressive(model, ctx.patches, spec.horizon / lp, g);
        const auto values = revin_denormalize(gen.values(), norm.stats);
        std::copy(values.begin(), values.end(), out.row(c).begin());
    }
    return out;
}

SpanSet missing_runs(std::span<const std::uint8_t> missing, std::size_t max_len) {
    if (max_len == 0) throw ConfigError("maximum span length must be positive");
    std::vector<Span> spans;
    for (std::size_t i = 0; i < missing.size();) {
        if (!missing[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < missing.size() && missing[j]) ++j;
        for (std::size_t s = i; s < j; s += max_len) spans.push_back({s, std::min(max_len, j - s)});
        i = j;
    }
    return make_span_set(std::move(spans));
}

InfillingInstance point_instance(std::span<const double> normalized, std::span<const std::uint8_t> missing,
                                 std::size_t patch_len, std::size_t max_span_len) {
    if (normalized.size() != missing.size()) throw DimensionError("point_instance: mask length differs from window");
    PatchMatrix pm;
    pm.patches = Tensor<double>({normalized.size(), patch_len});
    pm.window_len = normalized.size();
    for (std::size_t i = 0; i < normalized.size(); ++i) {
        std::fill(pm.patches.row(i).begin(), pm.patches.row(i).end(), normalized[i]);
    }
    return build_infilling_instance(pm, missing_runs(missing, max_span_len));
}

namespace {

double row_mean(std::span<const double> r) {
    return std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
}

template <typename T>
void fill_window(Model<T>& model, std::span<const double> values, std::span<const std::uint8_t> missing,
                 const RevinStats& fallback, const GranularityQuintuple& g, std::span<double> out) {
    const std::size_t n = values.size();
    std::size_t observed = 0;
    for (const auto m : missing) observed += m ? 0 : 1;
    RevinStats stats = fallback;
    std::vector<std::uint8_t> observed_mask(n);
    for (std::size_t i = 0; i < n; ++i) observed_mask[i] = missing[i] ? 0 : 1;
    if (observed >= 2) stats = revin_normalize(values, 1.0, 0.0, 1e-5, observed_mask).stats;
    std::vector<double> norm(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (!missing[i]) norm[i] = (values[i] - stats.mean) / stats.stdev;
    }
    const std::size_t lp = model.config.patch_len;
    InfillingInstance inst = point_instance(norm, missing, lp, model.config.maxspan - 2);

    // Map each Part-B target row to the time index it reconstructs.
    std::vector<std::size_t> target_index(inst.part_b_len(), 0);
    std::size_t row = 0;
    for (const std::size_t k : inst.spans.order) {
        const Span& s = inst.spans.spans[k];
        for (std::size_t j = 0; j <= s.length; ++j, ++row) target_index[row] = s.start + j;
    }
    for (std::size_t t = 0; t < inst.part_b_len(); ++t) {
        if (inst.target_is_end[t]) continue;
        const InfillingInstance step = truncate_part_b(inst, t + 1);
        const Tensor<T> pred = model.predict(step, g);
        std::vector<double> r(lp);
        for (std::size_t c = 0; c < lp; ++c) r[c] = static_cast<double>(pred(t, c));
        const double v = row_mean(r);
        out[target_index[t]] = v * stats.stdev + stats.mean;
        auto dst = inst.payload.row(inst.part_a_len + t + 1);
        std::fill(dst.begin(), dst.end(), v);
    }
}

}  // namespace

template <typename T>
std::vector<double> impute_channel(Model<T>& model, std::span<const double> values,
                                   std::span<const std::uint8_t> missing, const GranularityQuintuple& g,
                                   const ImputeSpec& spec) {
    if (values.size() != missing.size()) throw DimensionError("impute: mask length differs from series length");
    if (spec.window < 2) throw ConfigError("imputation window must hold at least 2 points");
    std::vector<std::uint8_t> observed(values.size());
    std::size_t n_obs = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        observed[i] = missing[i] ? 0 : 1;
        n_obs += observed[i];
    }
    if (n_obs < 2) throw DataError("cannot impute a channel with fewer than 2 observed points");
    std::vector<double> out(values.begin(), values.end());
    if (n_obs == values.size()) return out;
    const RevinStats fallback = revin_normalize(values, 1.0, 0.0, 1e-5, observed).stats;

    std::vector<std::uint8_t> pending(missing.begin(), missing.end());
    const std::size_t n = values.size();
    const std::size_t w = std::min(spec.window, n);
    for (std::size_t start = 0;; start += w) {
        const std::size_t s = std::min(start, n - w);
        const std::span<const std::uint8_t> mw(pending.data() + s, w);
        if (std::any_of(mw.begin(), mw.end(), [](std::uint8_t m) { return m != 0; })) {
            // Points filled by an earlier overlapping window act as observed.
            fill_window(model, std::span<const double>(out.data() + s, w), mw, fallback, g,
                        std::span<double>(out.data() + s, w));
            std::fill(pending.begin() + static_cast<std::ptrdiff_t>(s),
                      pending.begin() + static_cast<std::ptrdiff_t>(s + w), 0);
        }
        if (s + w >= n) break;
    }
    return out;
}

template <typename T>
std::vector<std::vector<double>> impute(Model<T>& model, const std::vector<std::vector<double>>& series,
                                        const std::vector<std::vector<std::uint8_t>>& missing,
                                        const GranularityQuintuple& g, const ImputeSpec& spec) {
    if (series.size() != missing.size()) throw DimensionError("impute: one mask per channel required");
    std::vector<std::vector<double>> out;
    out.reserve(series.size());
    for (std::size_t c = 0; c < series.size(); ++c) out.push_back(impute_channel(model, series[c], missing[c], g, spec));
    return out;
}

std::vector<std::uint8_t> random_point_mask(std::size_t n, double ratio, Rng& rng) {
    if (!(ratio >= 0.0 && ratio < 1.0)) throw ConfigError("missing ratio must lie in [0, 1)");
    const auto k = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<std::uint8_t> mask(n, 0);
    for (std::size_t i = 0; i < k; ++i) mask[idx[i]] = 1;
    return mask;
}

std::vector<double> finetune_imputation(Model<float>& model, const std::vector<SeriesSource>& data,
                                        const ImputeSpec& spec, const FinetuneConfig& cfg) {
    if (data.empty()) throw ConfigError("imputation fine-tuning needs at least one series");
    if (cfg.ratios.empty()) throw ConfigError("imputation fine-tuning needs at least one missing ratio");
    if (cfg.batch_size == 0) throw ConfigError("batch size must be >= 1");
    for (const auto& s : data) {
        if (s.values.size() < spec.window) {
            throw ConfigError("series shorter than the imputation window (" + std::to_string(spec.window) + ")");
        }
    }
    for (const double r : cfg.ratios) {
        const auto k = std::llround(r * static_cast<double>(spec.window));
        if (!(r > 0.0 && r < 1.0) || k < 1 || static_cast<std::size_t>(k) + 2 > spec.window) {
            throw ConfigError("missing ratio " + std::to_string(r) + " is infeasible for a window of " +
                              std::to_string(spec.window) + " points");
        }
    }
    Rng rng(cfg.seed);
    auto params = model.parameters();
    for (auto* p : params) p->zero_grad();
    AdamState<float> state;
    std::vector<double> losses;
    const std::size_t lp = model.config.patch_len;
    std::uniform_int_distribution<std::size_t> pick_series(0, data.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_ratio(0, cfg.ratios.size() - 1);
    for (std::size_t step = 0; step < cfg.steps; ++step) {
        double batch_loss = 0.0;
        for (std::size_t b = 0; b < cfg.batch_size; ++b) {
            const auto& src = data[pick_series(rng)];
            std::uniform_int_distribution<std::size_t> pick_start(0, src.values.size() - spec.window);
            const std::span<const double> window(src.values.data() + pick_start(rng), spec.window);
            const auto missing = random_point_mask(spec.window, cfg.ratios[pick_ratio(rng)], rng);
            std::vector<std::uint8_t> observed(spec.window);
            for (std::size_t i = 0; i < spec.window; ++i) observed[i] = missing[i] ? 0 : 1;
            const auto norm = revin_normalize(window, 1.0, 0.0, 1e-5, observed);
            const InfillingInstance inst = point_instance(norm.values, missing, lp, model.config.maxspan - 2);
            Tape<float> tape;
            Var<float> loss = infilling_loss(model.forward(tape, inst, src.granularity), inst);
            batch_loss += loss.value()[0];
            tape.backward(ops::scale(loss, 1.0f / static_cast<float>(cfg.batch_size)));
        }
        clip_grad_norm(std::span<Parameter<float>* const>(params), cfg.grad_clip);
        adam_step(std::span<Parameter<float>* const>(params), state, cosine_lr(step, cfg.steps, cfg.lr));
        for (auto* p : params) p->zero_grad();
        losses.push_back(batch_loss / static_cast<double>(cfg.batch_size));
    }
    return losses;
}

template <typename T>
std::vector<double> reconstruction_scores(Model<T>& model, std::span<const double> values,
                                          const GranularityQuintuple& g, const AnomalySpec& spec) {
    const std::size_t lp = model.config.patch_len;
    if (spec.window == 0 || spec.window % lp != 0) {
        throw ConfigError("anomaly window " + std::to_string(spec.window) + " is not a multiple of patch length " +
                          std::to_string(lp));
    }
    if (spec.stride == 0) throw ConfigError("anomaly window stride must be positive");
    if (values.size() < spec.window) {
        throw ConfigError("series of " + std::to_string(values.size()) + " points is shorter than the anomaly window");
    }
    const std::size_t n = values.size();
    const std::size_t np = spec.window / lp;
    std::vector<std::size_t> starts;
    for (std::size_t s = 0; s + spec.window <= n; s += spec.stride) starts.push_back(s);
    if (starts.back() + spec.window < n) starts.push_back(n - spec.window);

    std::vector<double> acc(n, 0.0);
    std::vector<double> count(n, 0.0);
    for (const std::size_t s : starts) {
        const std::span<const double> w(values.data() + s, spec.window);
        for (std::size_t p = 0; p < np; ++p) {
            // Statistics from the visible patches only.
            std::vector<std::uint8_t> visible(spec.window, 1);
            std::fill_n(visible.begin() + static_cast<std::ptrdiff_t>(p * lp), lp, 0);
            const RevinResult norm = revin_normalize(w, 1.0, 0.0, 1e-5, visible);
            const PatchMatrix pm = patchify(norm.values, lp);
            const InfillingInstance inst = build_infilling_instance(pm, make_span_set({Span{p, 1}}));
            const Tensor<T> pred = model.predict(inst, g);
            for (std::size_t c = 0; c < lp; ++c) {
                const double y = static_cast<double>(pred(0, c)) * norm.stats.stdev + norm.stats.mean;
                const std::size_t t = s + p * lp + c;
                acc[t] += (y - values[t]) * (y - values[t]);
                count[t] += 1.0;
            }
        }
    }
    for (std::size_t t = 0; t < n; ++t) acc[t] /= count[t];
    return acc;
}

template <typename T>
std::vector<double> reconstruction_scores(Model<T>& model, const std::vector<std::vector<double>>& series,
                                          const GranularityQuintuple& g, const AnomalySpec& spec) {
    if (series.empty()) throw ConfigError("reconstruction_scores: no channels");
    std::vector<double> total;
    for (const auto& ch : series) {
        const auto s = reconstruction_scores(model, std::span<const double>(ch), g, spec);
        if (total.empty()) total.assign(s.size(), 0.0);
        if (s.size() != total.size()) throw DimensionError("reconstruction_scores: channels differ in length");
        for (std::size_t i = 0; i < s.size(); ++i) total[i] += s[i];
    }
    for (auto& v : total) v /= static_cast<double>(series.size());
    return total;
}

double quantile(std::span<const double> values, double q) {
    if (values.empty()) throw ConfigError("quantile of an empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("quantile must lie in [0, 1]");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return frac == 0.0 ? v[lo] : v[lo] + frac * (v[hi] - v[lo]);
}

std::vector<std::uint8_t> detect(std::span<const double> scores, std::span<const double> validation, double q) {
    for (const double s : scores) {
        if (!std::isfinite(s)) throw NumericError("anomaly scores must be finite");
    }
    std::vector<std::uint8_t> labels(scores.size(), 1);
    if (q == 0.0) return labels;
    const double threshold = quantile(validation, q);
    for (std::size_t i = 0; i < scores.size(); ++i) labels[i] = scores[i] > threshold ? 1 : 0;
    return labels;
}

double default_threshold_quantile(std::span<const std::uint8_t> validation_labels) {
    if (validation_labels.empty()) return 0.99;
    const auto pos = static_cast<double>(std::count_if(validation_labels.begin(), validation_labels.end(),
                                                       [](std::uint8_t v) { return v != 0; }));
    if (pos == 0.0) return 0.99;
    return 1.0 - pos / static_cast<double>(validation_labels.size());
}

std::vector<std::uint8_t> point_adjust(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth) {
    if (pred.size() != truth.size()) throw DimensionError("point_adjust: prediction and truth lengths differ");
    std::vector<std::uint8_t> out(pred.begin(), pred.end());
    for (std::size_t i = 0; i < truth.size();) {
        if (!truth[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        bool hit = false;
        for (; j < truth.size() && truth[j]; ++j) hit = hit || pred[j] != 0;
        if (hit) std::fill(out.begin() + static_cast<std::ptrdiff_t>(i), out.begin() + static_cast<std::ptrdiff_t>(j), 1);
        i = j;
    }
    return out;
}

RegressionMetrics regression_metrics(std::span<const double> pred, std::span<const double> target) {
    if (pred.size() != target.size() || pred.empty()) {
        throw DimensionError("regression metrics need equal, nonempty inputs");
    }
    RegressionMetrics m;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        m.mse += d * d;
        m.mae += std::abs(d);
    }
    m.mse /= static_cast<double>(pred.size());
    m.mae /= static_cast<double>(pred.size());
    return m;
}

ClassificationMetrics classification_metrics(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth) {
    if (pred.size() != truth.size()) throw DimensionError("classification metrics need equal lengths");
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred[i] != 0, t = truth[i] != 0;
        tp += (p && t) ? 1 : 0;
        fp += (p && !t) ? 1 : 0;
        fn += (!p && t) ? 1 : 0;
    }
    ClassificationMetrics m;
    m.degenerate = tp + fp == 0 && tp + fn == 0;
    m.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    m.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    return m;
}

#define GTM_INSTANTIATE_TASKS(T)                                                                                    \
    template Tensor<double> forecast<T>(Model<T>&, const std::vector<std::vector<double>>&,                         \
                                        const GranularityQuintuple&, const ForecastSpec&);                          \
    template std::vector<double> impute_channel<T>(Model<T>&, std::span<const double>, std::span<const std::uint8_t>, \
                                                   const GranularityQuintuple&, const ImputeSpec&);                 \
    template std::vector<std::vector<double>> impute<T>(Model<T>&, const std::vector<std::vector<double>>&,         \
                                                        const std::vector<std::vector<std::uint8_t>>&,              \
                                                        const GranularityQuintuple&, const ImputeSpec&);            \
    template std::vector<double> reconstruction_scores<T>(Model<T>&, std::span<const double>,                       \
                                                          const GranularityQuintuple&, const AnomalySpec&);         \
    template std::vector<double> reconstruction_scores<T>(Model<T>&, const std::vector<std::vector<double>>&,       \
                                                          const GranularityQuintuple&, const AnomalySpec&);

GTM_INSTANTIATE_TASKS(float)
GTM_INSTANTIATE_TASKS(double)

#undef GTM_INSTANTIATE_TASKS

}  // namespace gtm
