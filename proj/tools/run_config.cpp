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

#include "run_config.hpp"

#include <fstream>
#include <set>

#include "gtm/checkpoint.hpp"

namespace gtm::cli {

namespace {

using nlohmann::json;

class Section {
public:
    Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw ConfigError(where_ + " must be an object");
    }

    template <typename T>
    bool get(const std::string& key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return false;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(where_ + "." + key + ": " + e.what());
        }
        return true;
    }

    const json* raw(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    void finish() const {
        for (const auto& [key, value] : j_.items()) {
            if (!seen_.count(key)) throw ConfigError("unknown config key \"" + where_ + "." + key + "\"");
        }
    }

private:
    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

GranularityQuintuple quintuple(const json& j, const std::string& where) {
    try {
        const auto v = j.get<std::vector<std::int64_t>>();
        if (v.size() != 5) throw ConfigError(where + " must have 5 entries");
        GranularityQuintuple g;
        for (std::size_t i = 0; i < 5; ++i) {
            if (v[i] < 0) throw ConfigError(where + " entries must be >= 0");
            g.q[i] = v[i];
        }
        return g;
    } catch (const json::exception& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

json quintuple_json(const GranularityQuintuple& g) { return json(std::vector<std::int64_t>(g.q.begin(), g.q.end())); }

SyntheticSpec parse_synthetic(const json& j, const std::string& where) {
    SyntheticSpec s;
    Section sec(j, where);
    sec.get("channels", s.channels);
    sec.get("length", s.length);
    sec.get("channel_phase_step", s.channel_phase_step);
    sec.get("noise_sigma", s.noise_sigma);
    sec.get("name", s.name);
    if (const json* c = sec.raw("components")) {
        if (!c->is_array()) throw ConfigError(where + ".components must be an array");
        s.components.clear();
        for (std::size_t i = 0; i < c->size(); ++i) {
            Component comp;
            Section cs((*c)[i], where + ".components[" + std::to_string(i) + "]");
            cs.get("period", comp.period);
            cs.get("amplitude", comp.amplitude);
            cs.get("phase", comp.phase);
            cs.finish();
            s.components.push_back(comp);
        }
    }
    if (const json* a = sec.raw("anomalies"); a && !a->is_null()) {
        AnomalyInjection inj;
        Section as(*a, where + ".anomalies");
        as.get("count", inj.count);
        as.get("magnitude", inj.magnitude);
        as.get("width", inj.width);
        as.get("begin", inj.begin);
        as.get("end", inj.end);
        as.finish();
        s.anomalies = inj;
    }
    if (const json* m = sec.raw("missing_ratio"); m && !m->is_null()) {
        double r = 0.0;
        sec.get("missing_ratio", r);
        s.missing_ratio = r;
    }
    if (const json* g = sec.raw("granularity")) s.granularity = quintuple(*g, where + ".granularity");
    sec.finish();
    s.validate();
    return s;
}

json synthetic_json(const SyntheticSpec& s) {
    json comps = json::array();
    for (const auto& c : s.components) comps.push_back({{"period", c.period}, {"amplitude", c.amplitude}, {"phase", c.phase}});
    json j = {{"channels", s.channels},
              {"length", s.length},
              {"components", comps},
              {"channel_phase_step", s.channel_phase_step},
              {"noise_sigma", s.noise_sigma},
              {"name", s.name},
              {"granularity", quintuple_json(s.granularity)}};
    j["anomalies"] = s.anomalies ? json{{"count", s.anomalies->count},
                                        {"magnitude", s.anomalies->magnitude},
                                        {"width", s.anomalies->width},
                                        {"begin", s.anomalies->begin},
                                        {"end", s.anomalies->end}}
                                 : json(nullptr);
    j["missing_ratio"] = s.missing_ratio ? json(*s.missing_ratio) : json(nullptr);
    return j;
}

const char* timestamp_name(TimestampColumn t) {
    switch (t) {
        case TimestampColumn::absent: return "absent";
        case TimestampColumn::present: return "present";
        case TimestampColumn::detect: break;
    }
    return "detect";
}

}  // namespace

RunConfig parse_run_config(const json& j) {
    RunConfig cfg;
    Section top(j, "config");
    top.get("seed", cfg.seed);
    top.get("checkpoint", cfg.checkpoint);
    top.get("resume", cfg.resume);
    if (const json* s = top.raw("split")) {
        std::vector<double> v;
        top.get("split", v);
        if (v.size() != 3) throw ConfigError("config.split must hold 3 fractions");
        cfg.split = {v[0], v[1], v[2]};
    }

    if (const json* d = top.raw("data")) {
        if (!d->is_array()) throw ConfigError("config.data must be an array");
        for (std::size_t i = 0; i < d->size(); ++i) {
            const std::string where = "data[" + std::to_string(i) + "]";
            DataEntry e;
            Section ds((*d)[i], where);
            ds.get("name", e.name);
            std::string path;
            if (ds.get("path", path)) e.path = path;
            if (const json* syn = ds.raw("synthetic")) e.synthetic = parse_synthetic(*syn, where + ".synthetic");
            if (const json* g = ds.raw("granularity")) e.granularity = quintuple(*g, where + ".granularity");
            ds.get("allow_missing", e.allow_missing);
            std::string ts = "detect";
            ds.get("timestamp", ts);
            if (ts == "detect") e.timestamp = TimestampColumn::detect;
            else if (ts == "present") e.timestamp = TimestampColumn::present;
            else if (ts == "absent") e.timestamp = TimestampColumn::absent;
            else throw ConfigError(where + ".timestamp must be detect, present or absent");
            std::string label;
            if (ds.get("label_column", label)) e.label_column = label;
            ds.finish();
            if (e.path.has_value() == e.synthetic.has_value()) {
                throw ConfigError(where + " needs exactly one of \"path\" or \"synthetic\"");
            }
            if (e.name.empty()) e.name = e.synthetic ? e.synthetic->name + std::to_string(i) : "data" + std::to_string(i);
            cfg.data.push_back(std::move(e));
        }
    }

    if (const json* m = top.raw("model")) {
        if (m->is_object() && m->contains("seed")) {
            throw ConfigError("model.seed is not accepted; set the top-level seed");
        }
        cfg.model = config_from_json(*m);
        cfg.model_given = true;
    }
    cfg.model.seed = cfg.seed;

    if (const json* t = top.raw("train")) {
        Section ts(*t, "train");
        auto& tr = cfg.train;
        ts.get("lr", tr.lr);
        ts.get("min_lr", tr.min_lr);
        ts.get("warmup_steps", tr.warmup_steps);
        ts.get("batch_size", tr.batch_size);
        ts.get("epochs", tr.epochs);
        ts.get("max_steps", tr.max_steps);
        ts.get("patience", tr.patience);
        ts.get("grad_clip", tr.grad_clip);
        ts.get("window_len", tr.window_len);
        ts.get("stride", tr.stride);
        ts.get("val_fraction", tr.val_fraction);
        ts.get("mask_ratio", tr.sampling.mask_ratio);
        ts.get("span_min", tr.sampling.min_len);
        ts.get("span_max", tr.sampling.max_len);
        ts.get("tail_prob", tr.tail_prob);
        ts.finish();
    }
    cfg.train.seed = cfg.seed;
    cfg.train.validate();

    if (const json* f = top.raw("forecast")) {
        Section fs(*f, "forecast");
        fs.get("lookback", cfg.forecast.lookback);
        fs.get("horizons", cfg.forecast.horizons);
        fs.get("stride", cfg.forecast.stride);
        fs.get("max_windows", cfg.forecast.max_windows);
        fs.finish();
        if (cfg.forecast.horizons.empty()) throw ConfigError("forecast.horizons must not be empty");
    }
    if (const json* i = top.raw("impute")) {
        Section is(*i, "impute");
        is.get("window", cfg.impute.window);
        is.get("ratios", cfg.impute.ratios);
        is.get("finetune_steps", cfg.impute.finetune_steps);
        is.get("finetune_lr", cfg.impute.finetune_lr);
        is.get("finetune_batch", cfg.impute.finetune_batch);
        is.get("max_points", cfg.impute.max_points);
        is.finish();
        if (cfg.impute.ratios.empty()) throw ConfigError("impute.ratios must not be empty");
    }
    if (const json* d = top.raw("detect")) {
        Section dsec(*d, "detect");
        dsec.get("window", cfg.detect.window);
        dsec.get("stride", cfg.detect.stride);
        if (const json* q = dsec.raw("threshold_quantile"); q && !q->is_null()) {
            double v = 0.0;
            dsec.get("threshold_quantile", v);
            if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("detect.threshold_quantile must lie in [0, 1]");
            cfg.detect.threshold_quantile = v;
        }
        dsec.finish();
    }
    if (const json* a = top.raw("analyze")) {
        Section as(*a, "analyze");
        as.get("grid_points", cfg.analyze.grid_points);
        as.get("pad", cfg.analyze.pad);
        as.get("max_points", cfg.analyze.max_points);
        as.finish();
        if (cfg.analyze.grid_points < 2) throw ConfigError("analyze.grid_points must be >= 2");
    }
    top.finish();
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return parse_run_config(j);
}

json to_json(const RunConfig& cfg) {
    json data = json::array();
    for (const auto& e : cfg.data) {
        json d = {{"name", e.name}, {"allow_missing", e.allow_missing}, {"timestamp", timestamp_name(e.timestamp)}};
        if (e.path) d["path"] = *e.path;
        if (e.synthetic) d["synthetic"] = synthetic_json(*e.synthetic);
        d["granularity"] = e.granularity ? quintuple_json(*e.granularity) : json(nullptr);
        if (e.label_column) d["label_column"] = *e.label_column;
        data.push_back(std::move(d));
    }
    json model = config_to_json(cfg.model);
    model.erase("seed");
    const auto& t = cfg.train;
    return {
        {"seed", cfg.seed},
        {"data", data},
        {"split", {cfg.split[0], cfg.split[1], cfg.split[2]}},
        {"model", model},
        {"train",
         {{"lr", t.lr},
          {"min_lr", t.min_lr},
          {"warmup_steps", t.warmup_steps},
          {"batch_size", t.batch_size},
          {"epochs", t.epochs},
          {"max_steps", t.max_steps},
          {"patience", t.patience},
          {"grad_clip", t.grad_clip},
          {"window_len", t.window_len},
          {"stride", t.stride},
          {"val_fraction", t.val_fraction},
          {"mask_ratio", t.sampling.mask_ratio},
          {"span_min", t.sampling.min_len},
          {"span_max", t.sampling.max_len},
          {"tail_prob", t.tail_prob}}},
        {"checkpoint", cfg.checkpoint},
        {"resume", cfg.resume},
        {"forecast",
         {{"lookback", cfg.forecast.lookback},
          {"horizons", cfg.forecast.horizons},
          {"stride", cfg.forecast.stride},
          {"max_windows", cfg.forecast.max_windows}}},
        {"impute",
         {{"window", cfg.impute.window},
          {"ratios", cfg.impute.ratios},
          {"finetune_steps", cfg.impute.finetune_steps},
          {"finetune_lr", cfg.impute.finetune_lr},
          {"finetune_batch", cfg.impute.finetune_batch},
          {"max_points", cfg.impute.max_points}}},
        {"detect",
         {{"window", cfg.detect.window},
          {"stride", cfg.detect.stride},
          {"threshold_quantile",
           cfg.detect.threshold_quantile ? json(*cfg.detect.threshold_quantile) : json(nullptr)}}},
        {"analyze",
         {{"grid_points", cfg.analyze.grid_points}, {"pad", cfg.analyze.pad}, {"max_points", cfg.analyze.max_points}}},
    };
}

}  // namespace gtm::cli
