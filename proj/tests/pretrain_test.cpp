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
#include <numbers>
#include <sstream>

#include "gtm/pretrain.hpp"
#include "json.hpp"
#include "test_util.hpp"

using namespace gtm;

namespace {

TEST(InfillingLoss, HandValues) {
    const Tensor<double> y({2, 4}, 0.5);
    EXPECT_EQ(infilling_loss(y, y), 0.0);
    const Tensor<double> ones({2, 4}, 1.5);
    EXPECT_DOUBLE_EQ(infilling_loss(ones, y), 4.0);
    const Tensor<double> twos({2, 4}, 2.5);
    EXPECT_DOUBLE_EQ(infilling_loss(twos, y), 16.0);
    EXPECT_THROW(infilling_loss(Tensor<double>({0, 4}), Tensor<double>({0, 4})), ConfigError);
    EXPECT_THROW(infilling_loss(Tensor<double>({1, 4}), Tensor<double>({2, 4})), DimensionError);
}

TEST(InfillingLoss, EndRowsAreSkipped) {
    PatchMatrix pm;
    pm.patches = Tensor<double>({4, 2}, 1.0);
    const auto inst = build_infilling_instance(pm, make_span_set({{1, 2}}));
    // Part B: S p p, targets p p E.
    Tape<double> tape;
    Tensor<double> pred({3, 2}, 1.0);
    pred(2, 0) = 50.0;
    EXPECT_EQ(infilling_loss(tape.constant(pred), inst).value()[0], 0.0);
    pred(0, 1) = 3.0;
    EXPECT_DOUBLE_EQ(infilling_loss(tape.constant(pred), inst).value()[0], 2.0);
    EXPECT_THROW(infilling_loss(tape.constant(Tensor<double>({2, 2})), inst), DimensionError);
}

TEST(Adam, ZeroGradientLeavesParameters) {
    Parameter<double> p("p", Tensor<double>({3}, std::vector<double>{1, -2, 3}));
    std::vector<Parameter<double>*> ps{&p};
    AdamState<double> st;
    adam_step(std::span<Parameter<double>* const>(ps), st, 0.1);
    EXPECT_EQ(p.value, Tensor<double>({3}, std::vector<double>{1, -2, 3}));
    EXPECT_EQ(st.t, 1u);
}

TEST(Adam, FirstStepMovesByLearningRateAgainstSign) {
    Parameter<double> p("p", Tensor<double>({3}));
    p.grad = Tensor<double>({3}, std::vector<double>{0.5, -2.0, 1e-3});
    std::vector<Parameter<double>*> ps{&p};
    AdamState<double> st;
    adam_step(std::span<Parameter<double>* const>(ps), st, 0.01);
    for (std::size_t i = 0; i < 3; ++i) {
        const double g = p.grad[i];
        EXPECT_NEAR(p.value[i], -0.01 * g / (std::abs(g) + 1e-8), 1e-15);
    }
}

TEST(Adam, StateSizeMismatchThrows) {
    Parameter<double> p("p", Tensor<double>({3}));
    std::vector<Parameter<double>*> ps{&p, &p};
    AdamState<double> st;
    st.m.emplace_back(std::vector<std::size_t>{3});
    st.v.emplace_back(std::vector<std::size_t>{3});
    EXPECT_THROW(adam_step(std::span<Parameter<double>* const>(ps), st, 0.1), DimensionError);
}

TEST(Cosine, EndpointsAndWarmup) {
    EXPECT_DOUBLE_EQ(cosine_lr(0, 100, 1e-3), 1e-3);
    EXPECT_NEAR(cosine_lr(99, 100, 1e-3), 0.0, 1e-18);
    EXPECT_NEAR(cosine_lr(99, 100, 1e-3, 1e-5), 1e-5, 1e-18);
    EXPECT_NEAR(cosine_lr(50, 101, 1.0), 0.5, 1e-12);
    EXPECT_DOUBLE_EQ(cosine_lr(0, 100, 1.0, 0.0, 4), 0.25);
    EXPECT_DOUBLE_EQ(cosine_lr(3, 100, 1.0, 0.0, 4), 1.0);
    EXPECT_DOUBLE_EQ(cosine_lr(4, 100, 1.0, 0.0, 4), 1.0);
    for (std::size_t s = 1; s < 100; ++s) EXPECT_LE(cosine_lr(s, 100, 1.0), cosine_lr(s - 1, 100, 1.0));
}

TEST(ClipGrad, ScalesToMaxNorm) {
    Parameter<double> a("a", Tensor<double>({2})), b("b", Tensor<double>({1}));
    a.grad = Tensor<double>({2}, std::vector<double>{3, 0});
    b.grad = Tensor<double>({1}, std::vector<double>{4});
    std::vector<Parameter<double>*> ps{&a, &b};
    EXPECT_DOUBLE_EQ(clip_grad_norm(std::span<Parameter<double>* const>(ps), 1.0), 5.0);
    EXPECT_NEAR(a.grad[0], 0.6, 1e-15);
    EXPECT_NEAR(b.grad[0], 0.8, 1e-15);
    EXPECT_NEAR(clip_grad_norm(std::span<Parameter<double>* const>(ps), 10.0), 1.0, 1e-15);
    EXPECT_NEAR(a.grad[0], 0.6, 1e-15);
    b.grad[0] = std::nan("");
    EXPECT_THROW(clip_grad_norm(std::span<Parameter<double>* const>(ps), 1.0), NumericError);
}

TEST(TrainConfig, Validation) {
    TrainConfig c;
    EXPECT_NO_THROW(c.validate());
    c.lr = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = TrainConfig{};
    c.batch_size = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = TrainConfig{};
    c.val_fraction = 1.0;
    EXPECT_THROW(c.validate(), ConfigError);
}

std::vector<SeriesSource> sines(std::size_t n, double noise_seed_scale = 0.0) {
    std::vector<SeriesSource> out;
    std::mt19937_64 rng(99);
    std::normal_distribution<double> g(0.0, 1.0);
    for (std::size_t c = 0; c < 2; ++c) {
        SeriesSource s;
        s.granularity = GranularityQuintuple{{0, 1, 0, 0, 0}};
        for (std::size_t t = 0; t < n; ++t) {
            s.values.push_back(std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / 32.0 + 0.7 * c) +
                               noise_seed_scale * g(rng));
        }
        out.push_back(std::move(s));
    }
    return out;
}

TrainConfig small_train() {
    TrainConfig c;
    c.window_len = 48;
    c.stride = 24;
    c.batch_size = 4;
    c.epochs = 3;
    c.lr = 3e-3;
    c.seed = 5;
    return c;
}

TEST(ValidationSamples, LongTailUsesWindowsShortTailUsesTailSpan) {
    auto data = sines(1000);
    auto cfg = small_train();
    cfg.val_fraction = 0.1;  // 100 points: windows at 0, 24, 48 per channel
    const auto v = validation_samples(data, cfg, 4);
    ASSERT_EQ(v.size(), 6u);
    cfg.val_fraction = 0.03;  // 30 points: last window with a 7-patch tail span
    const auto w = validation_samples(data, cfg, 4);
    ASSERT_EQ(w.size(), 2u);
    ASSERT_EQ(w[0].instance.spans.spans.size(), 1u);
    EXPECT_EQ(w[0].instance.spans.spans[0], (Span{5, 7}));
    EXPECT_EQ(validation_samples(data, cfg, 4).front().instance.payload, w[0].instance.payload);
    cfg.val_fraction = 0.0;
    EXPECT_TRUE(validation_samples(data, cfg, 4).empty());
}

TEST(Pretrain, LossDecreasesAndRunsAreReproducible) {
    const auto data = sines(600, 0.05);
    const auto cfg = small_train();
    auto run = [&]() {
        auto m = Model<double>::init(gtm::testing::tiny_config(16, 1, 4, 3)).cast<float>();
        AdamState<float> st;
        return std::make_pair(pretrain(m, data, cfg, st), st.t);
    };
    const auto [a, ta] = run();
    const auto [b, tb] = run();
    ASSERT_EQ(a.steps.size(), b.steps.size());
    for (std::size_t i = 0; i < a.steps.size(); ++i) EXPECT_EQ(a.steps[i].train_loss, b.steps[i].train_loss);
    EXPECT_EQ(ta, a.steps.size());
    EXPECT_LT(a.epoch_train_loss.back(), a.epoch_train_loss.front());
    ASSERT_EQ(a.epoch_val_loss.size(), 3u);
    EXPECT_TRUE(a.best_val_loss.has_value());
}

TEST(Pretrain, ReportSerializesOneLinePerStep) {
    const auto data = sines(400);
    auto cfg = small_train();
    cfg.epochs = 1;
    auto m = Model<double>::init(gtm::testing::tiny_config()).cast<float>();
    AdamState<float> st;
    std::size_t callbacks = 0;
    const auto r = pretrain(m, data, cfg, st, [&](const StepRecord&) { ++callbacks; });
    EXPECT_EQ(callbacks, r.steps.size());
    std::istringstream in(r.to_jsonl());
    std::string line;
    std::size_t n = 0;
    nlohmann::json last;
    while (std::getline(in, line)) {
        last = nlohmann::json::parse(line);
        EXPECT_EQ(last["step"].get<std::size_t>(), n);
        EXPECT_EQ(last["val_loss"].is_null(), n + 1 < r.steps.size());
        ++n;
    }
    EXPECT_EQ(n, r.steps.size());
    EXPECT_DOUBLE_EQ(last["val_loss"].get<double>(), r.epoch_val_loss.back());
}

TEST(Pretrain, ResumeContinuesStepCount) {
    const auto data = sines(400);
    auto cfg = small_train();
    cfg.max_steps = 3;
    auto m = Model<double>::init(gtm::testing::tiny_config()).cast<float>();
    AdamState<float> st;
    pretrain(m, data, cfg, st);
    EXPECT_EQ(st.t, 3u);
    const auto r = pretrain(m, data, cfg, st);
    EXPECT_EQ(r.steps.front().step, 3u);
    EXPECT_EQ(st.t, 6u);
}

TEST(Pretrain, ConfigurationErrors) {
    auto m = Model<double>::init(gtm::testing::tiny_config()).cast<float>();
    AdamState<float> st;
    auto cfg = small_train();
    EXPECT_THROW(pretrain(m, {}, cfg, st), ConfigError);
    cfg.window_len = 50;
    EXPECT_THROW(pretrain(m, sines(400), cfg, st), ConfigError);
    cfg = small_train();
    EXPECT_THROW(pretrain(m, sines(40), cfg, st), ConfigError);
    cfg.window_len = 256;  // 64 patches exceed the 2-D table of 16 rows
    EXPECT_THROW(pretrain(m, sines(4000), cfg, st), ConfigError);
}

TEST(Pretrain, NonFiniteLossAbortsWithStep) {
    auto data = sines(400);
    data[0].values[10] = std::numeric_limits<double>::infinity();
    auto m = Model<double>::init(gtm::testing::tiny_config()).cast<float>();
    AdamState<float> st;
    try {
        pretrain(m, data, small_train(), st);
        FAIL() << "expected NumericError";
    } catch (const NumericError& e) {
        EXPECT_NE(std::string(e.what()).find("step"), std::string::npos) << e.what();
    }
}

}  // namespace
