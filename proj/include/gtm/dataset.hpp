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

// Delimited-text ingestion, sampling-granularity inference, chronological
// splits and synthetic generators.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gtm/embedding.hpp"

namespace gtm {

struct IndexRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const { return end - begin; }
    bool operator==(const IndexRange&) const = default;
};

struct TimeSeriesDataset {
    std::string name;
    std::vector<std::string> columns;          // one per channel
    std::vector<std::vector<double>> values;   // [C][T]
    std::vector<std::int64_t> timestamps_ms;   // empty when absent
    std::optional<GranularityQuintuple> granularity;
    IndexRange train, val, test;

    std::size_t channels() const { return values.size(); }
    std::size_t length() const { return values.empty() ? 0 : values.front().size(); }
    /// Copy of every channel restricted to `range`.
    std::vector<std::vector<double>> slice(IndexRange range) const;
};

enum class TimestampColumn { absent, present, detect };

struct LoadOptions {
    TimestampColumn timestamp = TimestampColumn::detect;
    /// Empty cells and "nan" become NaN and are reported in `missing`.
    bool allow_missing = false;
};

struct LoadResult {
    TimeSeriesDataset dataset;
    std::vector<std::vector<std::uint8_t>> missing;  // [C][T], all zero unless allow_missing
};

/// Comma- or tab-delimited table; a first row whose value cells are all
/// non-numeric is a header. In detect mode the first column holds timestamps
/// when it parses as ISO dates or its header is date/time/timestamp/datetime.
/// Throws DataError naming the offending row.
LoadResult load_delimited(const std::string& path, const LoadOptions& options = {});
LoadResult parse_delimited(std::istream& in, const std::string& name, const LoadOptions& options = {});

/// Writes the same layout back (timestamps as epoch milliseconds, values
/// with round-trip precision). Missing points, when given, become empty cells.
void write_delimited(std::ostream& out, const TimeSeriesDataset& ds,
                     const std::vector<std::vector<std::uint8_t>>* missing = nullptr);
void save_delimited(const std::string& path, const TimeSeriesDataset& ds,
                    const std::vector<std::vector<std::uint8_t>>* missing = nullptr);

/// ISO-8601 date/time ("2016-07-01 00:15:00", optional 'T', fraction, 'Z')
/// or an integer epoch in milliseconds.
std::optional<std::int64_t> parse_timestamp(const std::string& cell);

/// Modal spacing decomposed into [day, hour, minute, second, millisecond].
/// Timestamps must increase strictly with every spacing within 1% of the mode.
GranularityQuintuple infer_granularity(const std::vector<std::int64_t>& timestamps_ms);

std::int64_t granularity_ms(const GranularityQuintuple& g);

struct Component {
    double period = 64.0;  // samples
    double amplitude = 1.0;
    double phase = 0.0;
};

struct AnomalyInjection {
    std::size_t count = 5;
    double magnitude = 10.0;  // multiples of the channel's standard deviation
    std::size_t width = 4;
    /// Segments are placed inside [begin, end); end = 0 means the series end.
    std::size_t begin = 0;
    std::size_t end = 0;
};

struct SyntheticSpec {
    std::size_t channels = 2;
    std::size_t length = 2048;
    std::vector<Component> components = {Component{}};
    /// Added to every component's phase per channel index.
    double channel_phase_step = 0.7;
    double noise_sigma = 0.1;
    std::optional<AnomalyInjection> anomalies;
    std::optional<double> missing_ratio;
    GranularityQuintuple granularity{{0, 0, 1, 0, 0}};
    std::string name = "synthetic";

    void validate() const;
};

struct SyntheticData {
    TimeSeriesDataset dataset;
    std::vector<std::uint8_t> anomaly_labels;        // [T]
    std::vector<std::vector<std::uint8_t>> missing;  // [C][T]
};

SyntheticData synthesize(const SyntheticSpec& spec, Rng& rng);

/// Chronological split; a nonempty split shorter than min_len is an error.
void split(TimeSeriesDataset& ds, double train, double val, double test, std::size_t min_len = 1);

}  // namespace gtm
