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

// gtm command-line tool.
//
//   gtm_cli <analyze|pretrain|forecast|impute|detect> [--config FILE] [--out DIR]
//           [--seed N] [--checkpoint FILE] [--data FILE ...] [--resume FILE] [--quiet]
//
// Exit codes: 0 success, 1 usage or configuration error, 2 data or shape
// error, 3 numerical failure.

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "commands.hpp"
#include "gtm/errors.hpp"

namespace {

struct Options {
    std::string config;
    std::string out = "out";
    std::optional<std::uint64_t> seed;
    std::string checkpoint;
    std::vector<std::string> data;
    std::string resume;
    bool quiet = false;
};

nlohmann::json read_json(const std::string& path) {
    if (path.empty()) return nlohmann::json::object();
    std::ifstream in(path);
    if (!in) throw gtm::ConfigError("cannot open config file " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw gtm::ConfigError(path + ": " + e.what());
    }
}

gtm::cli::RunContext make_context(const Options& o) {
    nlohmann::json j = read_json(o.config);
    if (!j.is_object()) throw gtm::ConfigError("config must be a JSON object");
    if (o.seed) j["seed"] = *o.seed;
    if (!o.checkpoint.empty()) j["checkpoint"] = o.checkpoint;
    if (!o.resume.empty()) j["resume"] = o.resume;
    if (!o.data.empty()) {
        nlohmann::json entries = nlohmann::json::array();
        for (const auto& p : o.data) entries.push_back({{"path", p}, {"name", std::filesystem::path(p).stem().string()}});
        j["data"] = entries;
    }
    gtm::cli::RunContext ctx;
    ctx.config = gtm::cli::parse_run_config(j);
    ctx.out_dir = o.out;
    ctx.quiet = o.quiet;
    std::error_code ec;
    std::filesystem::create_directories(ctx.out_dir, ec);
    if (ec) throw gtm::DataError("cannot create output directory " + ctx.out_dir + ": " + ec.message());
    return ctx;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Generative time-series model: pretraining, downstream tasks and spectral analysis"};
    app.require_subcommand(1);

    Options opts;
    const std::map<std::string, std::pair<std::string, std::function<void(const gtm::cli::RunContext&)>>> commands = {
        {"analyze", {"Spectral densities of each dataset and their pairwise distances", gtm::cli::run_analyze}},
        {"pretrain", {"Blank-infilling pretraining; writes a checkpoint", gtm::cli::run_pretrain}},
        {"forecast", {"Autoregressive forecasting over the test split", gtm::cli::run_forecast}},
        {"impute", {"Point imputation of randomly masked test points", gtm::cli::run_impute}},
        {"detect", {"Reconstruction-based anomaly detection", gtm::cli::run_detect}},
    };
    for (const auto& [name, entry] : commands) {
        CLI::App* sub = app.add_subcommand(name, entry.first);
        sub->add_option("--config", opts.config, "JSON run configuration")->check(CLI::ExistingFile);
        sub->add_option("--out", opts.out, "Output directory")->capture_default_str();
        sub->add_option("--seed", opts.seed, "Master seed (overrides the config)");
        sub->add_option("--checkpoint", opts.checkpoint,
                        name == "pretrain" ? "Checkpoint to write" : "Pretrained checkpoint to load");
        sub->add_option("--data", opts.data, "Delimited data file(s), replacing the configured data");
        if (name == "pretrain") sub->add_option("--resume", opts.resume, "Checkpoint to resume from");
        sub->add_flag("--quiet,-q", opts.quiet, "No progress output");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        for (const auto& [name, entry] : commands) {
            if (app.got_subcommand(name)) entry.second(make_context(opts));
        }
    } catch (const gtm::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 1;
    } catch (const gtm::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const gtm::DimensionError& e) {
        std::cerr << "shape error: " << e.what() << '\n';
        return 2;
    } catch (const gtm::NumericError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
