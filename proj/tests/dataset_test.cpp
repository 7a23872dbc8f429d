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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>

#include "gtm/dataset.hpp"

using namespace gtm;

namespace {

LoadResult parse(const std::string& text, LoadOptions opt = {}) {
    std::istringstream in(text);
    return parse_delimited(in, "mem", opt);
}

TEST(Load, ThreeColumnsNoTimestamp) {
    std::string text;
    for (int r = 0; r < 10; ++r) text += std::to_string(r) + "," + std::to_string(2 * r) + ",-1.5e-3\n";
    const auto ds = parse(text).dataset;
    EXPECT_EQ(ds.channels(), 3u);
    EXPECT_EQ(ds.length(), 10u);
    EXPECT_TRUE(ds.timestamps_ms.empty());
    EXPECT_FALSE(ds.granularity.has_value());
    EXPECT_EQ(ds.values[1][4], 8.0);
    EXPECT_EQ(ds.values[2][9], -1.5e-3);
    EXPECT_EQ(ds.columns[0], "ch0");
}

TEST(Load, HeaderAndHourlyTimestamps) {
    const auto ds = parse(
                        "date,HUFL,OT\n"
                        "2016-07-01 00:00:00,5.8,30.5\n"
                        "2016-07-01 01:00:00,5.7,27.8\n"
                        "2016-07-01 02:00:00,5.2,27.8\n")
                        .dataset;
    EXPECT_EQ(ds.columns, (std::vector<std::string>{"HUFL", "OT"}));
    ASSERT_TRUE(ds.granularity.has_value());
    EXPECT_EQ(*ds.granularity, (GranularityQuintuple{{0, 1, 0, 0, 0}}));
    EXPECT_EQ(ds.timestamps_ms[1] - ds.timestamps_ms[0], 3600000);
}

TEST(Load, FifteenMinuteTabDelimited) {
    const auto ds = parse(
                        "2016-07-01T00:00:00\t1\n"
                        "2016-07-01T00:15:00\t2\n"
                        "2016-07-01T00:30:00\t3\n")
                        .dataset;
    EXPECT_EQ(*ds.granularity, (GranularityQuintuple{{0, 0, 15, 0, 0}}));
}

TEST(Load, ErrorsNameTheRow) {
    try {
        parse("1,2\n3,4\n5\n");
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos) << e.what();
    }
    try {
        parse("1,2\n3,abc\n");
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos) << e.what();
    }
    EXPECT_THROW(parse("2016-07-01 00:00,1\n2016-07-01 01:00,2\n2016-07-01 05:00,3\n"), DataError);
    EXPECT_THROW(parse(""), DataError);
    EXPECT_THROW(load_delimited("/nonexistent/file.csv"), DataError);
}

TEST(Load, MissingCellsWhenAllowed) {
    EXPECT_THROW(parse("1,2\n,4\n5,6\n"), DataError);
    const auto r = parse("1,2\n,4\nnan,6\n", LoadOptions{TimestampColumn::absent, true});
    EXPECT_EQ(r.missing[0], (std::vector<std::uint8_t>{0, 1, 1}));
    EXPECT_EQ(r.missing[1], (std::vector<std::uint8_t>{0, 0, 0}));
    EXPECT_TRUE(std::isnan(r.dataset.values[0][1]));
}

TEST(Load, ExplicitTimestampModes) {
    const std::string text = "1000,1\n2000,2\n3000,3\n";
    EXPECT_EQ(parse(text).dataset.channels(), 2u);
    const auto ts = parse(text, LoadOptions{TimestampColumn::present, false}).dataset;
    EXPECT_EQ(ts.channels(), 1u);
    EXPECT_EQ(*ts.granularity, (GranularityQuintuple{{0, 0, 0, 1, 0}}));
}

TEST(Timestamp, Formats) {
    EXPECT_EQ(parse_timestamp("1970-01-01"), 0);
    EXPECT_EQ(parse_timestamp("1970-01-02 00:00:00"), 86400000);
    EXPECT_EQ(parse_timestamp("2000-03-01T12:30:15.250Z"), 951913815250);
    EXPECT_EQ(parse_timestamp("1234"), 1234);
    EXPECT_FALSE(parse_timestamp("2021-02-30").has_value());
    EXPECT_FALSE(parse_timestamp("noon").has_value());
    EXPECT_FALSE(parse_timestamp("2021-01-01 25:00").has_value());
}

TEST(Granularity, Decomposition) {
    EXPECT_EQ(infer_granularity({0, 86400000, 172800000}), (GranularityQuintuple{{1, 0, 0, 0, 0}}));
    EXPECT_EQ(infer_granularity({0, 900000, 1800000}), (GranularityQuintuple{{0, 0, 15, 0, 0}}));
    EXPECT_EQ(infer_granularity({0, 4000, 8000, 12000}), (GranularityQuintuple{{0, 0, 0, 4, 0}}));
    EXPECT_EQ(infer_granularity({0, 90061001, 180122002}), (GranularityQuintuple{{1, 1, 1, 1, 1}}));
    EXPECT_EQ(granularity_ms(GranularityQuintuple{{1, 1, 1, 1, 1}}), 90061001);
    // within 1% of the mode
    EXPECT_NO_THROW(infer_granularity({0, 1000, 2000, 3005, 4005}));
    EXPECT_THROW(infer_granularity({0, 1000, 2000, 3050}), DataError);
    EXPECT_THROW(infer_granularity({0, 1000, 1000}), DataError);
    EXPECT_THROW(infer_granularity({0}), DataError);
}

TEST(Write, RoundTripsThroughFile) {
    Rng rng(1);
    SyntheticSpec spec;
    spec.length = 50;
    spec.missing_ratio = 0.2;
    auto syn = synthesize(spec, rng);
    const auto path = std::filesystem::temp_directory_path() / "gtm_dataset_roundtrip.csv";
    save_delimited(path.string(), syn.dataset, &syn.missing);
    const auto back = load_delimited(path.string(), LoadOptions{TimestampColumn::detect, true});
    std::filesystem::remove(path);
    ASSERT_EQ(back.missing, syn.missing);
    EXPECT_EQ(back.dataset.timestamps_ms, syn.dataset.timestamps_ms);
    EXPECT_EQ(back.dataset.columns, syn.dataset.columns);
    ASSERT_TRUE(back.dataset.granularity.has_value());
    EXPECT_EQ(*back.dataset.granularity, spec.granularity);
    for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t t = 0; t < 50; ++t)
            if (!syn.missing[c][t]) EXPECT_EQ(back.dataset.values[c][t], syn.dataset.values[c][t]);
}

TEST(Synthetic, NoiselessSingleComponentIsExactSinusoid) {
    Rng rng(2);
    SyntheticSpec spec;
    spec.channels = 1;
    spec.length = 100;
    spec.noise_sigma = 0.0;
    spec.components = {Component{20.0, 2.0, 0.5}};
    const auto d = synthesize(spec, rng).dataset;
    for (std::size_t t = 0; t < 100; ++t) {
        EXPECT_NEAR(d.values[0][t], 2.0 * std::sin(2 * std::numbers::pi * static_cast<double>(t) / 20.0 + 0.5), 1e-12);
    }
}

TEST(Synthetic, NoiseVarianceMatches) {
    Rng rng(3);
    SyntheticSpec spec;
    spec.channels = 1;
    spec.length = 100000;
    spec.components = {};
    spec.noise_sigma = 0.5;
    const auto syn = synthesize(spec, rng);
    const auto& v = syn.dataset.values[0];
    double m = 0, ss = 0;
    for (const double x : v) m += x / 1e5;
    for (const double x : v) ss += (x - m) * (x - m) / 1e5;
    EXPECT_NEAR(ss, 0.25, 0.25 * 0.05);
}

TEST(Synthetic, AnomalySegmentsAreCountedAndSeparated) {
    Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        SyntheticSpec spec;
        spec.length = 300;
        spec.anomalies = AnomalyInjection{5, 10.0, 4, 20, 280};
        const auto d = synthesize(spec, rng);
        std::size_t segments = 0, points = 0;
        for (std::size_t t = 0; t < 300; ++t) {
            points += d.anomaly_labels[t];
            if (d.anomaly_labels[t] && (t == 0 || !d.anomaly_labels[t - 1])) ++segments;
            if (t < 20 || t >= 280) EXPECT_EQ(d.anomaly_labels[t], 0);
        }
        EXPECT_EQ(segments, 5u);
        EXPECT_EQ(points, 20u);
    }
}

TEST(Synthetic, SpecValidation) {
    Rng rng(5);
    SyntheticSpec spec;
    spec.components = {Component{1.5}};
    EXPECT_THROW(synthesize(spec, rng), ConfigError);
    spec = SyntheticSpec{};
    spec.length = 20;
    spec.anomalies = AnomalyInjection{5, 10.0, 4};
    EXPECT_THROW(synthesize(spec, rng), ConfigError);
    spec = SyntheticSpec{};
    spec.missing_ratio = 1.0;
    EXPECT_THROW(synthesize(spec, rng), ConfigError);
}

TEST(Split, ChronologicalAndChecked) {
    Rng rng(6);
    SyntheticSpec spec;
    spec.length = 100;
    auto ds = synthesize(spec, rng).dataset;
    split(ds, 0.7, 0.1, 0.2);
    EXPECT_EQ(ds.train, (IndexRange{0, 70}));
    EXPECT_EQ(ds.val, (IndexRange{70, 80}));
    EXPECT_EQ(ds.test, (IndexRange{80, 100}));
    EXPECT_EQ(ds.slice(ds.val)[1].size(), 10u);
    EXPECT_THROW(split(ds, 0.7, 0.1, 0.1), ConfigError);
    EXPECT_THROW(split(ds, 0.7, 0.1, 0.2, 15), ConfigError);
    EXPECT_THROW(ds.slice(IndexRange{90, 120}), DimensionError);
}

}  // namespace
