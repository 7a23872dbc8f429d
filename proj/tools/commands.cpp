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

#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "gtm/checkpoint.hpp"
#include "gtm/density.hpp"
#include "gtm/errors.hpp"

namespace gtm::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::string safe_name(const std::string& s) {
    std::string out = s;
    for (char& c : out) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '.') c = '_';
    }
    return out;
}

std::ofstream open_out(const RunContext& ctx, const std::string& file) {
    const fs::path p = fs::path(ctx.out_dir) / file;
    std::ofstream os(p);
    if (!os) throw DataError("cannot write " + p.string());
    return os;
}

class MetricsTable {
public:
    explicit MetricsTable(const RunContext& ctx) : os_(open_out(ctx, "metrics.tsv")) {
        os_ << "dataset\ttask\tsetting\tmetric\tvalue\n";
    }
    void add(const std::string& dataset, const std::string& task, const std::string& setting,
             const std::string& metric, double value) {
        os_ << dataset << '\t' << task << '\t' << setting << '\t' << metric << '\t' << fmt(value) << '\n';
    }

private:
    std::ofstream os_;
};

void log(const RunContext& ctx, const std::string& msg) {
    if (!ctx.quiet) std::cerr << msg << '\n';
}

void write_resolved(const RunContext& ctx, const std::string& command) {
    json j = to_json(ctx.config);
    j["command"] = command;
    open_out(ctx, "resolved_config.json") << j.dump(2) << '\n';
}

void write_parameter_shapes(const RunContext& ctx, const Model<float>& model) {
    auto os = open_out(ctx, "parameter_shapes.tsv");
    os << "name\tshape\n";
    for (const auto* p : model.parameters()) {
        os << p->name << '\t';
        const auto& shape = p->value.shape();
        for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
        os << '\n';
    }
}

// ---------------------------------------------------------------------------
// Data

struct Loaded {
    TimeSeriesDataset ds;
    std::vector<std::vector<std::uint8_t>> missing;
    std::vector<std::uint8_t> labels;  // empty when unlabelled
    GranularityQuintuple g;
};

void take_label_column(Loaded& l, const std::string& column) {
    auto& ds = l.ds;
    const auto it = std::find(ds.columns.begin(), ds.columns.end(), column);
    if (it == ds.columns.end()) throw ConfigError("dataset " + ds.name + " has no label column \"" + column + "\"");
    const auto idx = static_cast<std::size_t>(it - ds.columns.begin());
    const auto& col = ds.values[idx];
    l.labels.resize(col.size());
    for (std::size_t t = 0; t < col.size(); ++t) {
        if (!std::isfinite(col[t])) throw DataError("dataset " + ds.name + ": label missing at row " + std::to_string(t));
        l.labels[t] = col[t] != 0.0 ? 1 : 0;
    }
    const auto off = static_cast<std::ptrdiff_t>(idx);
    ds.columns.erase(ds.columns.begin() + off);
    ds.values.erase(ds.values.begin() + off);
    if (l.missing.size() > idx) l.missing.erase(l.missing.begin() + off);
}

std::vector<Loaded> load_data(const RunConfig& cfg) {
    if (cfg.data.empty()) throw ConfigError("no datasets configured; set \"data\" or pass --data");
    std::vector<Loaded> out;
    for (std::size_t i = 0; i < cfg.data.size(); ++i) {
        const DataEntry& e = cfg.data[i];
        Loaded l;
        if (e.synthetic) {
            Rng rng(cfg.seed * 1000003ULL + i + 1);
            SyntheticData s = synthesize(*e.synthetic, rng);
            l.ds = std::move(s.dataset);
            l.missing = std::move(s.missing);
            if (e.synthetic->anomalies) l.labels = std::move(s.anomaly_labels);
        } else {
            LoadResult r = load_delimited(*e.path, LoadOptions{e.timestamp, e.allow_missing});
            l.ds = std::move(r.dataset);
            l.missing = std::move(r.missing);
        }
        l.ds.name = e.name;
        if (e.label_column) take_label_column(l, *e.label_column);
        if (l.ds.channels() == 0) throw DataError("dataset " + e.name + " has no value channels");
        if (l.missing.size() != l.ds.channels()) {
            l.missing.assign(l.ds.channels(), std::vector<std::uint8_t>(l.ds.length(), 0));
        }
        if (e.granularity) l.g = *e.granularity;
        else if (l.ds.granularity) l.g = *l.ds.granularity;
        else throw ConfigError("dataset " + e.name + " has no timestamps; set data[" + std::to_string(i) + "].granularity");
        split(l.ds, cfg.split[0], cfg.split[1], cfg.split[2]);
        out.push_back(std::move(l));
    }
    return out;
}

struct Standardizer {
    std::vector<double> mean, sd;
};

/// Per-channel statistics of the observed training points.
Standardizer fit_standardizer(const Loaded& l) {
    Standardizer s;
    for (std::size_t c = 0; c < l.ds.channels(); ++c) {
        double sum = 0.0, sq = 0.0;
        std::size_t n = 0;
        for (std::size_t t = l.ds.train.begin; t < l.ds.train.end; ++t) {
            const double v = l.ds.values[c][t];
            if (l.missing[c][t] || !std::isfinite(v)) continue;
            sum += v;
            sq += v * v;
            ++n;
        }
        if (n == 0) throw DataError("dataset " + l.ds.name + " channel " + l.ds.columns[c] + " has no observed training points");
        const double mean = sum / static_cast<double>(n);
        const double var = std::max(0.0, sq / static_cast<double>(n) - mean * mean);
        s.mean.push_back(mean);
        s.sd.push_back(var > 1e-24 ? std::sqrt(var) : 1.0);
    }
    return s;
}

/// Standardized channels over `range`; missing points become NaN.
std::vector<std::vector<double>> standardized(const Loaded& l, const Standardizer& s, IndexRange range) {
    std::vector<std::vector<double>> out(l.ds.channels());
    for (std::size_t c = 0; c < out.size(); ++c) {
        out[c].reserve(range.size());
        for (std::size_t t = range.begin; t < range.end; ++t) {
            out[c].push_back(l.missing[c][t] ? std::numeric_limits<double>::quiet_NaN()
                                             : (l.ds.values[c][t] - s.mean[c]) / s.sd[c]);
        }
    }
    return out;
}

/// Maximal fully observed runs of at least `min_len` points.
std::vector<std::vector<double>> observed_runs(std::span<const double> v, std::size_t min_len) {
    std::vector<std::vector<double>> out;
    std::size_t i = 0;
    while (i < v.size()) {
        while (i < v.size() && !std::isfinite(v[i])) ++i;
        const std::size_t b = i;
        while (i < v.size() && std::isfinite(v[i])) ++i;
        if (i - b >= min_len && i > b) out.emplace_back(v.begin() + static_cast<std::ptrdiff_t>(b), v.begin() + static_cast<std::ptrdiff_t>(i));
    }
    return out;
}

bool all_finite(const std::vector<std::vector<double>>& x) {
    for (const auto& row : x) {
        for (double v : row) {
            if (!std::isfinite(v)) return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Checkpoints

Model<float> load_task_model(const RunContext& ctx) {
    const RunConfig& cfg = ctx.config;
    if (cfg.checkpoint.empty()) throw ConfigError("no checkpoint given; pass --checkpoint or set \"checkpoint\"");
    const Checkpoint ck = read_checkpoint(cfg.checkpoint);
    if (cfg.model_given) require_compatible(ck.config, cfg.model.d_model, cfg.model.patch_len);
    log(ctx, "loaded checkpoint " + cfg.checkpoint);
    return model_from_checkpoint(ck);
}

ModelConfig without_seed(ModelConfig c) {
    c.seed = 0;
    return c;
}

}  // namespace

// ---------------------------------------------------------------------------

void run_pretrain(const RunContext& ctx) {
    const RunConfig& cfg = ctx.config;
    const auto data = load_data(cfg);
    write_resolved(ctx, "pretrain");

    std::vector<SeriesSource> sources;
    for (const auto& l : data) {
        const IndexRange range{l.ds.train.begin, l.ds.val.end};
        for (std::size_t c = 0; c < l.ds.channels(); ++c) {
            std::vector<double> v(l.ds.values[c].begin() + static_cast<std::ptrdiff_t>(range.begin),
                                  l.ds.values[c].begin() + static_cast<std::ptrdiff_t>(range.end));
            for (std::size_t t = 0; t < v.size(); ++t) {
                if (l.missing[c][range.begin + t]) v[t] = std::numeric_limits<double>::quiet_NaN();
            }
            for (auto& run : observed_runs(v, cfg.train.window_len)) sources.push_back({std::move(run), l.g});
        }
    }
    if (sources.empty()) throw DataError("no series is long enough for a pretraining window");

    Model<float> model;
    AdamState<float> state;
    if (!cfg.resume.empty()) {
        const Checkpoint ck = read_checkpoint(cfg.resume);
        if (cfg.model_given && without_seed(ck.config) != without_seed(cfg.model)) {
            throw DataError("checkpoint " + cfg.resume + " was written for a different model configuration");
        }
        model = model_from_checkpoint(ck);
        const auto params = model.parameters();
        bool have_moments = true;
        for (const auto* p : params) {
            have_moments = have_moments && ck.tensors.count("adam.m." + p->name) && ck.tensors.count("adam.v." + p->name);
        }
        if (have_moments) {
            for (const auto* p : params) {
                const auto& m = ck.tensors.at("adam.m." + p->name);
                const auto& v = ck.tensors.at("adam.v." + p->name);
                if (!m.same_shape(p->value) || !v.same_shape(p->value)) {
                    throw DataError("optimizer state for " + p->name + " has the wrong shape");
                }
                state.m.push_back(m);
                state.v.push_back(v);
            }
        }
        state.t = ck.meta.value("step", std::size_t{0});
        log(ctx, "resuming from " + cfg.resume + " at step " + std::to_string(state.t));
    } else {
        model = Model<float>::init(cfg.model);
    }

    const TrainReport report = pretrain(model, sources, cfg.train, state, [&](const StepRecord& r) {
        if (ctx.quiet) return;
        if (r.step % 10 == 0 || r.val_loss) {
            std::cerr << "step " << r.step << " epoch " << r.epoch << " lr " << fmt(r.lr) << " loss "
                      << fmt(r.train_loss);
            if (r.val_loss) std::cerr << " val " << fmt(*r.val_loss);
            std::cerr << '\n';
        }
    });

    open_out(ctx, "train_report.jsonl") << report.to_jsonl();

    json meta = {{"step", state.t},
                 {"epochs", report.epoch_train_loss.size()},
                 {"best_epoch", report.best_epoch},
                 {"early_stopped", report.early_stopped},
                 {"seed", cfg.seed}};
    meta["best_val_loss"] = report.best_val_loss ? json(*report.best_val_loss) : json(nullptr);
    json names = json::array();
    for (const auto& l : data) names.push_back(l.ds.name);
    meta["datasets"] = names;

    Checkpoint ck = make_checkpoint(model, meta);
    const auto params = model.parameters();
    for (std::size_t i = 0; i < params.size() && i < state.m.size(); ++i) {
        ck.tensors["adam.m." + params[i]->name] = state.m[i];
        ck.tensors["adam.v." + params[i]->name] = state.v[i];
    }
    const std::string path =
        cfg.checkpoint.empty() ? (fs::path(ctx.out_dir) / "checkpoint.gtm").string() : cfg.checkpoint;
    write_checkpoint(path, ck);
    write_parameter_shapes(ctx, model);

    MetricsTable metrics(ctx);
    metrics.add("all", "pretrain", "", "steps", static_cast<double>(state.t));
    if (!report.steps.empty()) {
        metrics.add("all", "pretrain", "", "first_train_loss", report.steps.front().train_loss);
        metrics.add("all", "pretrain", "", "final_train_loss", report.steps.back().train_loss);
    }
    if (report.best_val_loss) metrics.add("all", "pretrain", "", "best_val_loss", *report.best_val_loss);
    log(ctx, "wrote " + path);
}

void run_forecast(const RunContext& ctx) {
    const RunConfig& cfg = ctx.config;
    const auto data = load_data(cfg);
    write_resolved(ctx, "forecast");
    Model<float> model = load_task_model(ctx);
    write_parameter_shapes(ctx, model);
    const std::size_t lp = model.config.patch_len;

    MetricsTable metrics(ctx);
    auto preds = open_out(ctx, "predictions.csv");
    preds << "dataset,horizon,channel,origin,step,prediction,target\n";

    for (const auto& l : data) {
        const Standardizer st = fit_standardizer(l);
        const auto series = standardized(l, st, IndexRange{0, l.ds.length()});
        for (const std::size_t horizon : cfg.forecast.horizons) {
            ForecastSpec spec;
            spec.horizon = horizon;
            spec.lookback = cfg.forecast.lookback ? cfg.forecast.lookback : ForecastSpec::default_lookback(horizon);
            spec.validate(lp);
            const std::size_t stride = cfg.forecast.stride ? cfg.forecast.stride : horizon;

            std::vector<double> pred_all, target_all, naive_all;
            std::size_t windows = 0, skipped = 0;
            for (std::size_t origin = std::max(l.ds.test.begin, spec.lookback); origin + horizon <= l.ds.test.end;
                 origin += stride) {
                if (cfg.forecast.max_windows && windows >= cfg.forecast.max_windows) break;
                std::vector<std::vector<double>> history, target;
                for (const auto& ch : series) {
                    history.emplace_back(ch.begin() + static_cast<std::ptrdiff_t>(origin - spec.lookback),
                                         ch.begin() + static_cast<std::ptrdiff_t>(origin));
                    target.emplace_back(ch.begin() + static_cast<std::ptrdiff_t>(origin),
                                        ch.begin() + static_cast<std::ptrdiff_t>(origin + horizon));
                }
                if (!all_finite(history) || !all_finite(target)) {
                    ++skipped;
                    continue;
                }
                const Tensor<double> pred = forecast(model, history, l.g, spec);
                for (std::size_t c = 0; c < series.size(); ++c) {
                    for (std::size_t k = 0; k < horizon; ++k) {
                        pred_all.push_back(pred(c, k));
                        target_all.push_back(target[c][k]);
                        naive_all.push_back(history[c].back());
                        preds << l.ds.name << ',' << horizon << ',' << l.ds.columns[c] << ',' << origin << ',' << k
                              << ',' << fmt(pred(c, k)) << ',' << fmt(target[c][k]) << '\n';
                    }
                }
                ++windows;
            }
            if (windows == 0) {
                throw DataError("dataset " + l.ds.name + ": no complete forecast window of lookback " +
                                std::to_string(spec.lookback) + " and horizon " + std::to_string(horizon) +
                                " fits the test split");
            }
            const auto m = regression_metrics(pred_all, target_all);
            const auto naive = regression_metrics(naive_all, target_all);
            const std::string setting = "horizon=" + std::to_string(horizon);
            metrics.add(l.ds.name, "forecast", setting, "mse", m.mse);
            metrics.add(l.ds.name, "forecast", setting, "mae", m.mae);
            metrics.add(l.ds.name, "forecast", setting, "mse_last_value", naive.mse);
            metrics.add(l.ds.name, "forecast", setting, "mae_last_value", naive.mae);
            metrics.add(l.ds.name, "forecast", setting, "windows", static_cast<double>(windows));
            if (skipped) metrics.add(l.ds.name, "forecast", setting, "windows_skipped", static_cast<double>(skipped));
            log(ctx, l.ds.name + " " + setting + " mse " + fmt(m.mse) + " mae " + fmt(m.mae));
        }
    }
}

void run_impute(const RunContext& ctx) {
    const RunConfig& cfg = ctx.config;
    const auto data = load_data(cfg);
    write_resolved(ctx, "impute");
    const Model<float> base = load_task_model(ctx);
    write_parameter_shapes(ctx, base);
    const ImputeSpec spec{cfg.impute.window};

    MetricsTable metrics(ctx);
    auto preds = open_out(ctx, "predictions.csv");
    preds << "dataset,ratio,channel,index,prediction,target\n";

    for (std::size_t di = 0; di < data.size(); ++di) {
        const Loaded& l = data[di];
        const Standardizer st = fit_standardizer(l);
        Model<float> model = base;

        if (cfg.impute.finetune_steps > 0) {
            std::vector<SeriesSource> sources;
            for (const auto& ch : standardized(l, st, l.ds.train)) {
                for (auto& run : observed_runs(ch, spec.window)) sources.push_back({std::move(run), l.g});
            }
            if (sources.empty()) throw DataError("dataset " + l.ds.name + ": no observed training run fills an imputation window");
            FinetuneConfig fc;
            fc.steps = cfg.impute.finetune_steps;
            fc.batch_size = cfg.impute.finetune_batch;
            fc.lr = cfg.impute.finetune_lr;
            fc.grad_clip = cfg.train.grad_clip;
            fc.ratios = cfg.impute.ratios;
            fc.seed = cfg.seed + di;
            const auto losses = finetune_imputation(model, sources, spec, fc);
            metrics.add(l.ds.name, "impute", "finetune", "first_loss", losses.front());
            metrics.add(l.ds.name, "impute", "finetune", "final_loss", losses.back());
            log(ctx, l.ds.name + " fine-tuned " + std::to_string(losses.size()) + " steps, loss " + fmt(losses.front()) +
                         " -> " + fmt(losses.back()));
        }

        IndexRange range = l.ds.test;
        if (cfg.impute.max_points && range.size() > cfg.impute.max_points) range.end = range.begin + cfg.impute.max_points;
        const auto test = standardized(l, st, range);

        for (std::size_t ri = 0; ri < cfg.impute.ratios.size(); ++ri) {
            const double ratio = cfg.impute.ratios[ri];
            Rng rng(cfg.seed * 7919ULL + di * 131ULL + ri);
            std::vector<double> pred_all, target_all;
            for (std::size_t c = 0; c < test.size(); ++c) {
                const auto& x = test[c];
                const auto mask = random_point_mask(x.size(), ratio, rng);
                std::vector<std::uint8_t> missing(x.size());
                for (std::size_t t = 0; t < x.size(); ++t) missing[t] = (mask[t] || !std::isfinite(x[t])) ? 1 : 0;
                const auto filled = impute_channel(model, x, missing, l.g, spec);
                for (std::size_t t = 0; t < x.size(); ++t) {
                    if (!mask[t] || !std::isfinite(x[t])) continue;
                    pred_all.push_back(filled[t]);
                    target_all.push_back(x[t]);
                    preds << l.ds.name << ',' << fmt(ratio) << ',' << l.ds.columns[c] << ',' << range.begin + t << ','
                          << fmt(filled[t]) << ',' << fmt(x[t]) << '\n';
                }
            }
            const std::string setting = "ratio=" + fmt(ratio);
            if (pred_all.empty()) {
                metrics.add(l.ds.name, "impute", setting, "masked_points", 0.0);
                continue;
            }
            const auto m = regression_metrics(pred_all, target_all);
            metrics.add(l.ds.name, "impute", setting, "mse", m.mse);
            metrics.add(l.ds.name, "impute", setting, "mae", m.mae);
            metrics.add(l.ds.name, "impute", setting, "masked_points", static_cast<double>(pred_all.size()));
            log(ctx, l.ds.name + " " + setting + " mse " + fmt(m.mse) + " mae " + fmt(m.mae));
        }
    }
}

void run_detect(const RunContext& ctx) {
    const RunConfig& cfg = ctx.config;
    const auto data = load_data(cfg);
    write_resolved(ctx, "detect");
    Model<float> model = load_task_model(ctx);
    write_parameter_shapes(ctx, model);
    AnomalySpec spec;
    spec.window = cfg.detect.window;
    spec.stride = cfg.detect.stride;

    MetricsTable metrics(ctx);
    auto preds = open_out(ctx, "predictions.csv");
    preds << "dataset,index,score,flag,label\n";

    for (const auto& l : data) {
        const Standardizer st = fit_standardizer(l);
        const auto val = standardized(l, st, l.ds.val);
        const auto test = standardized(l, st, l.ds.test);
        if (!all_finite(val) || !all_finite(test)) {
            throw DataError("dataset " + l.ds.name + ": anomaly detection needs complete validation and test splits");
        }
        const auto val_scores = reconstruction_scores(model, val, l.g, spec);
        const auto test_scores = reconstruction_scores(model, test, l.g, spec);

        const bool labelled = !l.labels.empty();
        double q = 0.99;
        if (cfg.detect.threshold_quantile) {
            q = *cfg.detect.threshold_quantile;
        } else if (labelled) {
            q = default_threshold_quantile(std::span<const std::uint8_t>(l.labels).subspan(l.ds.val.begin, l.ds.val.size()));
        }
        const auto flags = detect(test_scores, val_scores, q);
        const std::span<const std::uint8_t> truth =
            labelled ? std::span<const std::uint8_t>(l.labels).subspan(l.ds.test.begin, l.ds.test.size())
                     : std::span<const std::uint8_t>{};

        for (std::size_t t = 0; t < flags.size(); ++t) {
            preds << l.ds.name << ',' << l.ds.test.begin + t << ',' << fmt(test_scores[t]) << ',' << int(flags[t]) << ',';
            if (labelled) preds << int(truth[t]);
            preds << '\n';
        }

        std::size_t flagged = 0;
        for (auto f : flags) flagged += f;
        metrics.add(l.ds.name, "detect", "", "threshold_quantile", q);
        metrics.add(l.ds.name, "detect", "", "threshold", quantile(val_scores, q));
        metrics.add(l.ds.name, "detect", "", "flagged", static_cast<double>(flagged));
        if (labelled) {
            const auto raw = classification_metrics(flags, truth);
            const auto adj = classification_metrics(point_adjust(flags, truth), truth);
            for (const auto& [setting, m] : {std::pair{"raw", raw}, std::pair{"point_adjusted", adj}}) {
                metrics.add(l.ds.name, "detect", setting, "precision", m.precision);
                metrics.add(l.ds.name, "detect", setting, "recall", m.recall);
                metrics.add(l.ds.name, "detect", setting, "f1", m.f1);
            }
            log(ctx, l.ds.name + " f1 " + fmt(raw.f1) + " adjusted f1 " + fmt(adj.f1));
        }
    }
}

void run_analyze(const RunContext& ctx) {
    const RunConfig& cfg = ctx.config;
    const auto data = load_data(cfg);
    write_resolved(ctx, "analyze");
    MetricsTable metrics(ctx);
    auto dist = open_out(ctx, "distances.tsv");
    dist << "mode\ta\tb\tdistance\n";

    for (const SpectrumMode mode : {SpectrumMode::amplitude, SpectrumMode::phase}) {
        std::vector<SpectrumSample> samples;
        std::vector<Bandwidth> bws;
        for (std::size_t di = 0; di < data.size(); ++di) {
            const Loaded& l = data[di];
            const Standardizer st = fit_standardizer(l);
            SpectrumSample all;
            for (const auto& ch : standardized(l, st, IndexRange{0, l.ds.length()})) {
                for (const auto& run : observed_runs(ch, 4)) all.append(extract_spectrum(run, mode));
            }
            if (all.size() < 2) throw DataError("dataset " + l.ds.name + " is too short for a spectrum");
            Rng rng(cfg.seed * 104729ULL + di);
            samples.push_back(subsample(all, cfg.analyze.max_points, rng));
            bws.push_back(scott_bandwidth(samples.back().freq, samples.back().value));
        }
        Bandwidth widest;
        std::vector<const SpectrumSample*> ptrs;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            widest.hx = std::max(widest.hx, bws[i].hx);
            widest.hy = std::max(widest.hy, bws[i].hy);
            ptrs.push_back(&samples[i]);
        }
        const auto [gx, gy] = covering_grid(ptrs, widest, cfg.analyze.pad, cfg.analyze.grid_points);

        std::vector<DensityGrid> grids;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            DensityGrid g = kde2d(samples[i].freq, samples[i].value, gx, gy, bws[i]);
            g.label = data[i].ds.name;
            auto os = open_out(ctx, "density_" + safe_name(data[i].ds.name) + "_" + mode_name(mode) + ".tsv");
            write_density(os, g);
            metrics.add(g.label, "analyze", mode_name(mode), "samples", static_cast<double>(g.n_samples));
            metrics.add(g.label, "analyze", mode_name(mode), "bandwidth_x", g.bandwidth.hx);
            metrics.add(g.label, "analyze", mode_name(mode), "bandwidth_y", g.bandwidth.hy);
            metrics.add(g.label, "analyze", mode_name(mode), "mass", g.mass());
            grids.push_back(std::move(g));
        }
        for (std::size_t a = 0; a < grids.size(); ++a) {
            for (std::size_t b = 0; b < grids.size(); ++b) {
                dist << mode_name(mode) << '\t' << grids[a].label << '\t' << grids[b].label << '\t'
                     << fmt(density_distance(grids[a], grids[b])) << '\n';
            }
        }
        log(ctx, std::string("wrote ") + mode_name(mode) + " densities");
    }
}

}  // namespace gtm::cli
