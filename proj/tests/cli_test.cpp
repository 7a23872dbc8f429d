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

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "gtm/checkpoint.hpp"
#include "json.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("gtm_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    std::string write_config(const json& j, const std::string& name = "cfg.json") const {
        std::ofstream(path(name)) << j.dump(2);
        return path(name);
    }

    /// Runs the tool and returns its exit status; stderr goes to err.txt.
    int run(const std::string& args) const {
        const std::string cmd = std::string(GTM_CLI_PATH) + " " + args + " -q 2> " + path("err.txt");
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    std::string stderr_text() const { return slurp(path("err.txt")); }

    static std::string slurp(const std::string& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    fs::path dir_;
};

json base_config() {
    return json::parse(R"({
      "seed": 5,
      "data": [{"name": "sine", "synthetic": {"channels": 2, "length": 1024,
                "anomalies": {"count": 3, "magnitude": 10, "width": 4}}}],
      "model": {"d_model": 32, "n_layers": 1, "patch_len": 16, "n_heads": 2, "d_fk": 8,
                "maxpos": 64, "maxspan": 32},
      "train": {"window_len": 256, "stride": 128, "epochs": 1, "batch_size": 4, "max_steps": 3},
      "forecast": {"horizons": [32], "lookback": 128, "max_windows": 3},
      "impute": {"window": 32, "ratios": [0.25], "finetune_steps": 2, "max_points": 96},
      "detect": {"window": 64, "stride": 32},
      "analyze": {"grid_points": 40}
    })");
}

std::map<std::string, std::string> read_tsv_pairs(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        const auto tab = line.find('\t');
        out[line.substr(0, tab)] = line.substr(tab + 1);
    }
    return out;
}

TEST_F(CliTest, HelpExitsZero) { EXPECT_EQ(run("--help > /dev/null"), 0); }

TEST_F(CliTest, MissingSubcommandIsUsageError) { EXPECT_EQ(run(""), 1); }

TEST_F(CliTest, TasksShareTheCheckpointParameters) {
    const std::string cfg = write_config(base_config());
    ASSERT_EQ(run("pretrain --config " + cfg + " --out " + path("pt")), 0) << stderr_text();
    const std::string ckpt = path("pt/checkpoint.gtm");
    const std::string before = slurp(ckpt);
    const std::string shapes = slurp(path("pt/parameter_shapes.tsv"));
    ASSERT_FALSE(shapes.empty());

    for (const std::string task : {"forecast", "impute", "detect"}) {
        ASSERT_EQ(run(task + " --config " + cfg + " --checkpoint " + ckpt + " --out " + path(task)), 0)
            << task << ": " << stderr_text();
        EXPECT_EQ(slurp(path(task + "/parameter_shapes.tsv")), shapes) << task;
        EXPECT_TRUE(fs::exists(path(task + "/metrics.tsv")));
        EXPECT_TRUE(fs::exists(path(task + "/predictions.csv")));
    }
    EXPECT_EQ(slurp(ckpt), before);

    // One projection head, and no task-specific tensors in the checkpoint.
    const auto params = read_tsv_pairs(shapes);
    EXPECT_EQ(params.at("head.W_LinPoj"), "32x16");
    const gtm::Checkpoint ck = gtm::read_checkpoint(ckpt);
    for (const auto& [name, t] : ck.tensors) {
        if (name.rfind("adam.", 0) == 0) continue;
        EXPECT_TRUE(params.count(name)) << name;
    }
}

TEST_F(CliTest, MetricsTableLayout) {
    const std::string cfg = write_config(base_config());
    ASSERT_EQ(run("pretrain --config " + cfg + " --out " + path("pt")), 0) << stderr_text();
    ASSERT_EQ(run("detect --config " + cfg + " --checkpoint " + path("pt/checkpoint.gtm") + " --out " + path("d")), 0)
        << stderr_text();
    std::istringstream in(slurp(path("d/metrics.tsv")));
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "dataset\ttask\tsetting\tmetric\tvalue");
    std::set<std::string> metrics;
    while (std::getline(in, line)) {
        EXPECT_EQ(std::count(line.begin(), line.end(), '\t'), 4) << line;
        std::istringstream row(line);
        std::string f[5];
        for (auto& s : f) std::getline(row, s, '\t');
        metrics.insert(f[2] + "/" + f[3]);
    }
    EXPECT_TRUE(metrics.count("point_adjusted/f1"));
    EXPECT_TRUE(metrics.count("raw/precision"));
}

TEST_F(CliTest, UnknownConfigKeyIsConfigError) {
    json j = base_config();
    j["train"]["learning_rate"] = 0.1;
    EXPECT_EQ(run("pretrain --config " + write_config(j) + " --out " + path("o")), 1);
    EXPECT_NE(stderr_text().find("train.learning_rate"), std::string::npos) << stderr_text();
}

TEST_F(CliTest, ModelSeedIsRejected) {
    json j = base_config();
    j["model"]["seed"] = 1;
    EXPECT_EQ(run("pretrain --config " + write_config(j) + " --out " + path("o")), 1);
}

TEST_F(CliTest, MissingConfigFileIsUsageError) {
    EXPECT_EQ(run("pretrain --config " + path("nope.json") + " --out " + path("o")), 1);
}

TEST_F(CliTest, TaskWithoutCheckpointIsConfigError) {
    EXPECT_EQ(run("forecast --config " + write_config(base_config()) + " --out " + path("o")), 1);
}

TEST_F(CliTest, IncompatibleCheckpointIsDataError) {
    const std::string cfg = write_config(base_config());
    ASSERT_EQ(run("pretrain --config " + cfg + " --out " + path("pt")), 0) << stderr_text();
    json j = base_config();
    j["model"]["d_model"] = 64;
    j["model"]["d_fk"] = 8;
    const std::string other = write_config(j, "other.json");
    EXPECT_EQ(run("forecast --config " + other + " --checkpoint " + path("pt/checkpoint.gtm") + " --out " + path("f")),
              2);
    j = base_config();
    j["model"]["patch_len"] = 32;
    EXPECT_EQ(run("detect --config " + write_config(j, "lp.json") + " --checkpoint " + path("pt/checkpoint.gtm") +
                  " --out " + path("d")),
              2);
}

TEST_F(CliTest, CorruptCheckpointIsDataError) {
    std::ofstream(path("bad.gtm")) << "not a checkpoint";
    EXPECT_EQ(run("forecast --config " + write_config(base_config()) + " --checkpoint " + path("bad.gtm") + " --out " +
                  path("f")),
              2);
}

TEST_F(CliTest, MissingDataFileIsDataError) {
    EXPECT_EQ(run("analyze --config " + write_config(base_config()) + " --data " + path("absent.csv") + " --out " +
                  path("a")),
              2);
}

TEST_F(CliTest, DivergentTrainingIsNumericError) {
    json j = base_config();
    j["train"]["lr"] = 1e30;
    j["train"]["grad_clip"] = 0.0;
    j["train"]["max_steps"] = 20;
    j["train"]["epochs"] = 10;
    EXPECT_EQ(run("pretrain --config " + write_config(j) + " --out " + path("o")), 3) << stderr_text();
}

TEST_F(CliTest, ResolvedConfigRecordsDefaultsAndOverrides) {
    ASSERT_EQ(run("analyze --config " + write_config(base_config()) + " --seed 42 --out " + path("a")), 0)
        << stderr_text();
    const json r = json::parse(slurp(path("a/resolved_config.json")));
    EXPECT_EQ(r.at("seed"), 42);
    EXPECT_EQ(r.at("command"), "analyze");
    EXPECT_EQ(r.at("impute").at("window"), 32);
    EXPECT_EQ(r.at("train").at("lr"), 1e-3);
    EXPECT_EQ(r.at("model").at("d_model"), 32);
    EXPECT_FALSE(r.at("model").contains("seed"));
    EXPECT_EQ(r.at("analyze").at("pad"), 5.0);
    EXPECT_TRUE(r.at("detect").at("threshold_quantile").is_null());
}

TEST_F(CliTest, AnalyzeWritesDensitiesAndDistanceMatrix) {
    json j = base_config();
    j["data"] = json::parse(R"([
      {"name": "slow", "synthetic": {"channels": 2, "length": 1024, "components": [{"period": 96}]}},
      {"name": "fast", "synthetic": {"channels": 2, "length": 1024, "components": [{"period": 8}],
                                      "noise_sigma": 0.5}}])");
    ASSERT_EQ(run("analyze --config " + write_config(j) + " --out " + path("a")), 0) << stderr_text();
    for (const std::string n : {"slow", "fast"}) {
        for (const std::string m : {"amplitude", "phase"}) {
            const std::string f = path("a/density_" + n + "_" + m + ".tsv");
            ASSERT_TRUE(fs::exists(f)) << f;
            std::istringstream in(slurp(f));
            std::string line;
            std::size_t rows = 0;
            while (std::getline(in, line)) {
                if (!line.empty() && line[0] != '#') ++rows;
            }
            EXPECT_EQ(rows, 1 + 40 * 40) << f;
        }
    }
    std::istringstream in(slurp(path("a/distances.tsv")));
    std::string line;
    std::getline(in, line);
    std::map<std::string, double> d;
    while (std::getline(in, line)) {
        std::istringstream row(line);
        std::string mode, a, b, v;
        std::getline(row, mode, '\t');
        std::getline(row, a, '\t');
        std::getline(row, b, '\t');
        std::getline(row, v, '\t');
        d[mode + ":" + a + ":" + b] = std::stod(v);
    }
    ASSERT_EQ(d.size(), 8u);
    for (const std::string m : {"amplitude", "phase"}) {
        EXPECT_EQ(d[m + ":slow:slow"], 0.0);
        EXPECT_EQ(d[m + ":fast:fast"], 0.0);
        EXPECT_DOUBLE_EQ(d[m + ":slow:fast"], d[m + ":fast:slow"]);
        EXPECT_GT(d[m + ":slow:fast"], 0.0);
        EXPECT_LE(d[m + ":slow:fast"], 2.0);
    }
    EXPECT_GT(d["amplitude:slow:fast"], 0.1);
}

TEST_F(CliTest, DelimitedDataWithTimestamps) {
    {
        std::ofstream csv(path("series.csv"));
        csv << "date,a,b\n";
        for (int t = 0; t < 1024; ++t) {
            const int h = t / 4, m = (t % 4) * 15;
            char stamp[40];
            std::snprintf(stamp, sizeof stamp, "2020-01-%02d %02d:%02d:00", 1 + h / 24, h % 24, m);
            csv << stamp << ',' << std::sin(t * 0.1) << ',' << std::cos(t * 0.05) << '\n';
        }
    }
    json j = base_config();
    j.erase("data");
    ASSERT_EQ(run("pretrain --config " + write_config(j) + " --data " + path("series.csv") + " --out " + path("pt")),
              0)
        << stderr_text();
    const json r = json::parse(slurp(path("pt/resolved_config.json")));
    EXPECT_EQ(r.at("data").at(0).at("name"), "series");
    ASSERT_EQ(run("forecast --config " + write_config(j) + " --data " + path("series.csv") + " --checkpoint " +
                  path("pt/checkpoint.gtm") + " --out " + path("f")),
              0)
        << stderr_text();
    EXPECT_NE(slurp(path("f/predictions.csv")).find("series,32,a,"), std::string::npos);
}

TEST_F(CliTest, MissingGranularityIsConfigError) {
    {
        std::ofstream csv(path("plain.csv"));
        for (int t = 0; t < 600; ++t) csv << std::sin(t * 0.1) << '\n';
    }
    EXPECT_EQ(run("analyze --data " + path("plain.csv") + " --out " + path("a")), 1);
}

TEST_F(CliTest, ResumeContinuesTraining) {
    json base = base_config();
    base["train"]["epochs"] = 5;
    const std::string cfg = write_config(base);
    ASSERT_EQ(run("pretrain --config " + cfg + " --out " + path("a")), 0) << stderr_text();
    ASSERT_EQ(run("pretrain --config " + cfg + " --resume " + path("a/checkpoint.gtm") + " --out " + path("b")), 0)
        << stderr_text();
    const gtm::Checkpoint a = gtm::read_checkpoint(path("a/checkpoint.gtm"));
    const gtm::Checkpoint b = gtm::read_checkpoint(path("b/checkpoint.gtm"));
    EXPECT_EQ(a.meta.at("step"), 3);
    EXPECT_EQ(b.meta.at("step"), 6);
    EXPECT_TRUE(b.tensors.count("adam.m.head.W_LinPoj"));
    EXPECT_NE(a.tensors.at("head.W_LinPoj").values(), b.tensors.at("head.W_LinPoj").values());

    std::istringstream in(slurp(path("b/train_report.jsonl")));
    std::string first;
    std::getline(in, first);
    EXPECT_EQ(json::parse(first).at("step"), 3);

    // Resuming with a different architecture is refused.
    json j = base;
    j["model"]["n_layers"] = 2;
    EXPECT_EQ(run("pretrain --config " + write_config(j, "two.json") + " --resume " + path("a/checkpoint.gtm") +
                  " --out " + path("c")),
              2);
}

TEST_F(CliTest, PretrainIsReproducible) {
    const std::string cfg = write_config(base_config());
    ASSERT_EQ(run("pretrain --config " + cfg + " --out " + path("a")), 0) << stderr_text();
    ASSERT_EQ(run("pretrain --config " + cfg + " --out " + path("b")), 0) << stderr_text();
    EXPECT_EQ(slurp(path("a/checkpoint.gtm")), slurp(path("b/checkpoint.gtm")));
    EXPECT_EQ(slurp(path("a/train_report.jsonl")), slurp(path("b/train_report.jsonl")));
}

}  // namespace
