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

#include "gtm/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

namespace gtm {

std::vector<std::vector<double>> TimeSeriesDataset::slice(IndexRange range) const {
    if (range.end > length() || range.begin > range.end) throw DimensionError("dataset slice out of range");
    std::vector<std::vector<double>> out;
    out.reserve(values.size());
    for (const auto& ch : values) {
        out.emplace_back(ch.begin() + static_cast<std::ptrdiff_t>(range.begin),
                         ch.begin() + static_cast<std::ptrdiff_t>(range.end));
    }
    return out;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n\"");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n\"");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, delim)) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == delim) cells.emplace_back();
    return cells;
}

std::optional<double> parse_number(const std::string& cell) {
    if (cell.empty()) return std::nullopt;
    const char* b = cell.data();
    const char* e = cell.data() + cell.size();
    if (*b == '+') ++b;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || ptr != e || !std::isfinite(v)) return std::nullopt;
    return v;
}

bool is_missing_token(const std::string& cell) {
    if (cell.empty()) return true;
    std::string lower(cell);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    return lower == "nan" || lower == "na" || lower == "null";
}

}  // namespace

std::optional<std::int64_t> parse_timestamp(const std::string& raw) {
    const std::string cell = trim(raw);
    if (cell.empty()) return std::nullopt;
    const bool all_digits = std::all_of(cell.begin() + (cell[0] == '-' ? 1 : 0), cell.end(),
                                        [](unsigned char c) { return std::isdigit(c) != 0; });
    if (all_digits) {
        std::int64_t v = 0;
        const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (ec != std::errc() || ptr != cell.data() + cell.size()) return std::nullopt;
        return v;
    }
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, consumed = 0;
    if (std::sscanf(cell.c_str(), "%4d-%2d-%2d%n", &y, &mo, &d, &consumed) != 3 || consumed != 10) return std::nullopt;
    std::size_t pos = 10;
    double sec = 0.0;
    if (pos < cell.size()) {
        if (cell[pos] != 'T' && cell[pos] != ' ') return std::nullopt;
        ++pos;
        int n = 0;
        if (std::sscanf(cell.c_str() + pos, "%2d:%2d%n", &h, &mi, &n) != 2 || n != 5) return std::nullopt;
        pos += 5;
        if (pos < cell.size() && cell[pos] == ':') {
            ++pos;
            std::size_t end = pos;
            while (end < cell.size() && (std::isdigit(static_cast<unsigned char>(cell[end])) || cell[end] == '.')) ++end;
            const auto s = parse_number(cell.substr(pos, end - pos));
            if (!s) return std::nullopt;
            sec = *s;
            pos = end;
        }
        if (pos < cell.size() && cell[pos] == 'Z') ++pos;
        if (pos != cell.size()) return std::nullopt;
    }
    using namespace std::chrono;
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || sec >= 61.0) return std::nullopt;
    const auto days = sys_days(ymd).time_since_epoch().count();
    return static_cast<std::int64_t>(days) * 86400000LL + h * 3600000LL + mi * 60000LL +
           static_cast<std::int64_t>(std::llround(sec * 1000.0));
}

GranularityQuintuple infer_granularity(const std::vector<std::int64_t>& ts) {
    if (ts.size() < 2) throw DataError("granularity inference needs at least 2 timestamps");
    std::map<std::int64_t, std::size_t> counts;
    for (std::size_t i = 1; i < ts.size(); ++i) {
        const std::int64_t delta = ts[i] - ts[i - 1];
        if (delta <= 0) throw DataError("timestamps not strictly increasing at row " + std::to_string(i));
        ++counts[delta];
    }
    const auto mode = std::max_element(counts.begin(), counts.end(), [](const auto& a, const auto& b) {
                          return a.second < b.second;
                      })->first;
    for (std::size_t i = 1; i < ts.size(); ++i) {
        const auto delta = static_cast<double>(ts[i] - ts[i - 1]);
        if (std::abs(delta - static_cast<double>(mode)) > 0.01 * static_cast<double>(mode)) {
            throw DataError("irregular timestamp spacing at row " + std::to_string(i) + " (" +
                            std::to_string(ts[i] - ts[i - 1]) + " ms vs typical " + std::to_string(mode) + " ms)");
        }
    }
    GranularityQuintuple g;
    std::int64_t rest = mode;
    const std::int64_t units[5] = {86400000, 3600000, 60000, 1000, 1};
    for (std::size_t k = 0; k < 5; ++k) {
        g.q[k] = rest / units[k];
        rest %= units[k];
    }
    return g;
}

std::int64_t granularity_ms(const GranularityQuintuple& g) {
    return g.q[0] * 86400000 + g.q[1] * 3600000 + g.q[2] * 60000 + g.q[3] * 1000 + g.q[4];
}

LoadResult parse_delimited(std::istream& in, const std::string& name, const LoadOptions& options) {
    std::vector<std::pair<std::size_t, std::string>> lines;
    std::string line;
    for (std::size_t no = 1; std::getline(in, line); ++no) {
        if (!trim(line).empty()) lines.emplace_back(no, line);
    }
    if (lines.empty()) throw DataError(name + ": no data rows");
    const char delim = lines.front().second.find('\t') != std::string::npos ? '\t' : ',';

    const auto first = split_line(lines.front().second, delim);
    bool header = !first.empty();
    for (std::size_t j = 0; j < first.size(); ++j) {
        if (first[j].empty() || parse_number(first[j]) || (j == 0 && parse_timestamp(first[j]))) header = false;
    }
    const std::size_t data_begin = header ? 1 : 0;
    if (data_begin >= lines.size()) throw DataError(name + ": header without data rows");

    const auto probe = split_line(lines[data_begin].second, delim);
    bool has_ts = options.timestamp == TimestampColumn::present;
    if (options.timestamp == TimestampColumn::detect) {
        std::string name0 = header ? first[0] : std::string();
        std::transform(name0.begin(), name0.end(), name0.begin(), [](unsigned char c) { return std::tolower(c); });
        const bool named = name0 == "date" || name0 == "time" || name0 == "timestamp" || name0 == "datetime";
        const bool iso = !probe.empty() && !parse_number(probe[0]) && parse_timestamp(probe[0]).has_value();
        has_ts = iso || (named && !probe.empty() && parse_timestamp(probe[0]).has_value());
    }
    const std::size_t width = probe.size();
    const std::size_t offset = has_ts ? 1 : 0;
    if (width <= offset) throw DataError(name + ": no value columns");
    const std::size_t channels = width - offset;

    LoadResult res;
    auto& ds = res.dataset;
    ds.name = name;
    for (std::size_t c = 0; c < channels; ++c) {
        ds.columns.push_back(header && c + offset < first.size() ? first[c + offset] : "ch" + std::to_string(c));
    }
    ds.values.assign(channels, {});
    res.missing.assign(channels, {});
    for (std::size_t r = data_begin; r < lines.size(); ++r) {
        const auto& [no, text] = lines[r];
        const auto cells = split_line(text, delim);
        if (cells.size() != width) {
            throw DataError(name + ": row " + std::to_string(no) + " has " + std::to_string(cells.size()) +
                            " cells, expected " + std::to_string(width));
        }
        if (has_ts) {
            const auto ts = parse_timestamp(cells[0]);
            if (!ts) throw DataError(name + ": row " + std::to_string(no) + ": bad timestamp \"" + cells[0] + "\"");
            ds.timestamps_ms.push_back(*ts);
        }
        for (std::size_t c = 0; c < channels; ++c) {
            const std::string& cell = cells[c + offset];
            const auto v = parse_number(cell);
            if (v) {
                ds.values[c].push_back(*v);
                res.missing[c].push_back(0);
            } else if (options.allow_missing && is_missing_token(cell)) {
                ds.values[c].push_back(std::numeric_limits<double>::quiet_NaN());
                res.missing[c].push_back(1);
            } else {
                throw DataError(name + ": row " + std::to_string(no) + ": non-numeric cell \"" + cell + "\"");
            }
        }
    }
    if (has_ts) {
        try {
            ds.granularity = infer_granularity(ds.timestamps_ms);
        } catch (const DataError& e) {
            throw DataError(name + ": " + e.what());
        }
    }
    ds.train = {0, ds.length()};
    return res;
}

LoadResult load_delimited(const std::string& path, const LoadOptions& options) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    return parse_delimited(in, path, options);
}

void write_delimited(std::ostream& out, const TimeSeriesDataset& ds,
                     const std::vector<std::vector<std::uint8_t>>* missing) {
    const bool has_ts = !ds.timestamps_ms.empty();
    if (has_ts && ds.timestamps_ms.size() != ds.length()) throw DimensionError("timestamp count differs from length");
    if (has_ts) out << "timestamp";
    for (std::size_t c = 0; c < ds.channels(); ++c) {
        if (has_ts || c > 0) out << ',';
        out << (c < ds.columns.size() ? ds.columns[c] : "ch" + std::to_string(c));
    }
    out << '\n';
    char buf[64];
    for (std::size_t t = 0; t < ds.length(); ++t) {
        if (has_ts) out << ds.timestamps_ms[t];
        for (std::size_t c = 0; c < ds.channels(); ++c) {
            if (has_ts || c > 0) out << ',';
            if (missing && (*missing)[c][t]) continue;
            std::snprintf(buf, sizeof(buf), "%.17g", ds.values[c][t]);
            out << buf;
        }
        out << '\n';
    }
}

void save_delimited(const std::string& path, const TimeSeriesDataset& ds,
                    const std::vector<std::vector<std::uint8_t>>* missing) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path + " for writing");
    write_delimited(out, ds, missing);
    if (!out) throw DataError("failed writing " + path);
}

void SyntheticSpec::validate() const {
    if (channels == 0 || length < 2) throw ConfigError("synthetic data needs >= 1 channel and >= 2 points");
    for (const auto& c : components) {
        if (c.period < 2.0) throw ConfigError("component periods must be >= 2 samples");
    }
    if (noise_sigma < 0.0) throw ConfigError("noise sigma must be >= 0");
    if (anomalies) {
        const std::size_t end = anomalies->end == 0 ? length : anomalies->end;
        if (anomalies->width == 0 || end > length || anomalies->begin >= end ||
            anomalies->count * (anomalies->width + 1) > end - anomalies->begin) {
            throw ConfigError("anomaly segments do not fit in the requested range");
        }
    }
    if (missing_ratio && !(*missing_ratio >= 0.0 && *missing_ratio < 1.0)) {
        throw ConfigError("missing ratio must lie in [0, 1)");
    }
}

SyntheticData synthesize(const SyntheticSpec& spec, Rng& rng) {
    spec.validate();
    SyntheticData out;
    auto& ds = out.dataset;
    ds.name = spec.name;
    ds.granularity = spec.granularity;
    const std::int64_t step = std::max<std::int64_t>(granularity_ms(spec.granularity), 1);
    for (std::size_t t = 0; t < spec.length; ++t) ds.timestamps_ms.push_back(static_cast<std::int64_t>(t) * step);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t c = 0; c < spec.channels; ++c) {
        ds.columns.push_back("ch" + std::to_string(c));
        std::vector<double> v(spec.length, 0.0);
        for (std::size_t t = 0; t < spec.length; ++t) {
            for (const auto& comp : spec.components) {
                const double phase = comp.phase + spec.channel_phase_step * static_cast<double>(c);
                v[t] += comp.amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / comp.period + phase);
            }
            if (spec.noise_sigma > 0.0) v[t] += spec.noise_sigma * noise(rng);
        }
        ds.values.push_back(std::move(v));
    }

    out.anomaly_labels.assign(spec.length, 0);
    if (spec.anomalies && spec.anomalies->count > 0) {
        const auto& a = *spec.anomalies;
        const std::size_t end = a.end == 0 ? spec.length : a.end;
        // Choose `count` segment starts with at least one clean point between
        // segments: place them in a compressed range, then spread out.
        const std::size_t slack = (end - a.begin) - a.count * (a.width + 1);
        std::uniform_int_distribution<std::size_t> pick(0, slack);
        std::vector<std::size_t> offsets(a.count);
        for (auto& o : offsets) o = pick(rng);
        std::sort(offsets.begin(), offsets.end());
        std::bernoulli_distribution sign(0.5);
        std::vector<double> stdev(spec.channels);
        for (std::size_t c = 0; c < spec.channels; ++c) {
            const auto& v = ds.values[c];
            const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
            double ss = 0.0;
            for (const double x : v) ss += (x - mean) * (x - mean);
            stdev[c] = std::sqrt(ss / static_cast<double>(v.size()));
        }
        for (std::size_t k = 0; k < a.count; ++k) {
            const std::size_t s = a.begin + offsets[k] + k * (a.width + 1);
            const double dir = sign(rng) ? 1.0 : -1.0;
            for (std::size_t t = s; t < s + a.width; ++t) {
                out.anomaly_labels[t] = 1;
                for (std::size_t c = 0; c < spec.channels; ++c) ds.values[c][t] += dir * a.magnitude * stdev[c];
            }
        }
    }

    out.missing.assign(spec.channels, std::vector<std::uint8_t>(spec.length, 0));
    if (spec.missing_ratio) {
        const auto k = static_cast<std::size_t>(std::llround(*spec.missing_ratio * static_cast<double>(spec.length)));
        for (std::size_t c = 0; c < spec.channels; ++c) {
            std::vector<std::size_t> idx(spec.length);
            std::iota(idx.begin(), idx.end(), std::size_t{0});
            std::shuffle(idx.begin(), idx.end(), rng);
            for (std::size_t i = 0; i < k; ++i) out.missing[c][idx[i]] = 1;
        }
    }
    ds.train = {0, spec.length};
    return out;
}

void split(TimeSeriesDataset& ds, double train, double val, double test, std::size_t min_len) {
    if (train < 0.0 || val < 0.0 || test < 0.0 || std::abs(train + val + test - 1.0) > 1e-9) {
        throw ConfigError("split fractions must be nonnegative and sum to 1");
    }
    const std::size_t n = ds.length();
    const auto train_end = static_cast<std::size_t>(std::llround(train * static_cast<double>(n)));
    const auto val_end = static_cast<std::size_t>(std::llround((train + val) * static_cast<double>(n)));
    const IndexRange ranges[3] = {{0, train_end}, {train_end, val_end}, {val_end, n}};
    const double fracs[3] = {train, val, test};
    const char* names[3] = {"train", "validation", "test"};
    for (int i = 0; i < 3; ++i) {
        if (fracs[i] > 0.0 && ranges[i].size() < min_len) {
            throw ConfigError(std::string(names[i]) + " split has " + std::to_string(ranges[i].size()) +
                              " points, fewer than one window (" + std::to_string(min_len) + ")");
        }
    }
    ds.train = ranges[0];
    ds.val = ranges[1];
    ds.test = ranges[2];
}

}  // namespace gtm
