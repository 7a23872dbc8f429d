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
#include <random>

#include "gtm/attention.hpp"
#include "gtm/grad_check.hpp"
#include "test_util.hpp"

using namespace gtm;
using gtm::testing::max_abs_diff;
using gtm::testing::random_tensor;

namespace {

TEST(GlmMask, SmallLayout) {
    const std::vector<std::size_t> spans{2, 1};
    const auto m = build_glm_mask(3, spans);
    ASSERT_EQ(m.n, 8u);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 8; ++j) EXPECT_EQ(m.at(i, j), j < 3) << i << "," << j;
    }
    for (std::size_t i = 3; i < 8; ++i) {
        for (std::size_t j = 0; j < 8; ++j) EXPECT_EQ(m.at(i, j), j <= i) << i << "," << j;
    }
}

TEST(GlmMask, EmptyContextIsConfigError) {
    EXPECT_THROW(build_glm_mask_for_length(0, 3), ConfigError);
}

TEST(GlmMask, OnlyPartAIsFullyBidirectional) {
    const auto m = build_glm_mask_for_length(4, 0);
    for (const auto a : m.allowed) EXPECT_EQ(a, 1);
}

TemporalAttentionParams<double> random_attn(std::size_t d, std::mt19937_64& rng) {
    const double s = 1.0 / std::sqrt(static_cast<double>(d));
    return {Parameter<double>("q", random_tensor({d, d}, rng, s)), Parameter<double>("k", random_tensor({d, d}, rng, s)),
            Parameter<double>("v", random_tensor({d, d}, rng, s)), Parameter<double>("o", random_tensor({d, d}, rng, s))};
}

Tensor<double> naive_mm(const Tensor<double>& a, const Tensor<double>& b) {
    Tensor<double> out({a.rows(), b.cols()});
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = 0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
            out(i, j) = s;
        }
    return out;
}

Tensor<double> naive_attention(const Tensor<double>& h, const TemporalAttentionParams<double>& p, const GlmMask& mask,
                               std::size_t heads) {
    const std::size_t n = h.rows(), d = h.cols(), dh = d / heads;
    const auto q = naive_mm(h, p.w_q.value), k = naive_mm(h, p.w_k.value), v = naive_mm(h, p.w_v.value);
    Tensor<double> joined({n, d});
    for (std::size_t hd = 0; hd < heads; ++hd) {
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> w(n, 0.0);
            double mx = -1e300, z = 0;
            for (std::size_t j = 0; j < n; ++j) {
                if (!mask.at(i, j)) continue;
                double s = 0;
                for (std::size_t c = 0; c < dh; ++c) s += q(i, hd * dh + c) * k(j, hd * dh + c);
                w[j] = s / std::sqrt(static_cast<double>(dh));
                mx = std::max(mx, w[j]);
            }
            for (std::size_t j = 0; j < n; ++j) {
                w[j] = mask.at(i, j) ? std::exp(w[j] - mx) : 0.0;
                z += w[j];
            }
            for (std::size_t c = 0; c < dh; ++c) {
                double s = 0;
                for (std::size_t j = 0; j < n; ++j) s += w[j] / z * v(j, hd * dh + c);
                joined(i, hd * dh + c) = s;
            }
        }
    }
    return naive_mm(joined, p.w_o.value);
}

class AttentionHeads : public ::testing::TestWithParam<std::size_t> {};

TEST_P(AttentionHeads, MatchesNaiveOracle) {
    std::mt19937_64 rng(11);
    auto p = random_attn(8, rng);
    const Tensor<double> x = random_tensor({7, 8}, rng);
    const std::vector<std::size_t> spans{1, 1};
    const auto mask = build_glm_mask(3, spans);
    Tape<double> tape;
    const auto out = temporal_self_attention(tape.constant(x), p, mask, GetParam()).value();
    EXPECT_LT(max_abs_diff(out, naive_attention(x, p, mask, GetParam())), 1e-12);
}

INSTANTIATE_TEST_SUITE_P(Heads, AttentionHeads, ::testing::Values(1u, 2u, 4u, 8u));

TEST(Attention, IndivisibleHeadsIsConfigError) {
    std::mt19937_64 rng(1);
    auto p = random_attn(8, rng);
    Tape<double> tape;
    const auto mask = build_glm_mask_for_length(2, 0);
    EXPECT_THROW(temporal_self_attention(tape.constant(random_tensor({2, 8}, rng)), p, mask, 3), ConfigError);
}

TEST(Attention, MaskSoundnessRandomPerturbations) {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t a = 1 + rng() % 5, b = rng() % 6, d = 8;
        auto p = random_attn(d, rng);
        const auto mask = build_glm_mask_for_length(a, b);
        const Tensor<double> x = random_tensor({a + b, d}, rng);
        Tape<double> t0;
        const auto base = temporal_self_attention(t0.constant(x), p, mask, 2).value();
        for (std::size_t j = 0; j < a + b; ++j) {
            Tensor<double> y = x;
            for (std::size_t c = 0; c < d; ++c) y(j, c) += 3.0;
            Tape<double> t1;
            const auto out = temporal_self_attention(t1.constant(y), p, mask, 2).value();
            for (std::size_t i = 0; i < a + b; ++i) {
                if (mask.at(i, j)) continue;
                for (std::size_t c = 0; c < d; ++c) ASSERT_EQ(out(i, c), base(i, c)) << i << " " << j;
            }
        }
    }
}

TEST(Gate, UniformForZeroKeysOrQuery) {
    std::mt19937_64 rng(2);
    Tape<double> tape;
    Parameter<double> k("k", Tensor<double>({5, 4}));
    const auto g = granularity_gate(tape.constant(random_tensor({1, 4}, rng)), tape.param(k)).value();
    for (std::size_t i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(g[i], 0.2);
    Parameter<double> k2("k2", random_tensor({5, 4}, rng));
    const auto g2 = granularity_gate(tape.constant(Tensor<double>({1, 4})), tape.param(k2)).value();
    for (std::size_t i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(g2[i], 0.2);
}

TEST(Gate, SimplexOverRandomInputs) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        Tape<double> tape;
        Parameter<double> k("k", random_tensor({5, 6}, rng, 3.0));
        const auto g = granularity_gate(tape.constant(random_tensor({1, 6}, rng, 3.0)), tape.param(k)).value();
        double s = 0;
        for (const double v : g.values()) {
            EXPECT_GE(v, 0.0);
            s += v;
        }
        EXPECT_NEAR(s, 1.0, 1e-12);
    }
}

TEST(Gate, ShapeErrors) {
    Tape<double> tape;
    Parameter<double> k("k", Tensor<double>({4, 4}));
    EXPECT_THROW(granularity_gate(tape.constant(Tensor<double>({1, 4})), tape.param(k)), DimensionError);
    Parameter<double> k2("k2", Tensor<double>({5, 4}));
    EXPECT_THROW(granularity_gate(tape.constant(Tensor<double>({1, 3})), tape.param(k2)), DimensionError);
}

FourierBlockParams<double> fourier_params(std::size_t d, std::mt19937_64& rng, bool random_modules) {
    const std::size_t b = d / 2 + 1;
    FourierBlockParams<double> p;
    for (std::size_t i = 0; i < 5; ++i) {
        p.a[i] = Parameter<double>("a", random_modules ? random_tensor({b, 1}, rng, 0.3) : Tensor<double>({b, 1}));
        p.bm[i] = Parameter<double>("b", random_modules ? random_tensor({1, b}, rng, 0.3) : Tensor<double>({1, b}));
    }
    p.w_full = Parameter<double>("w", Tensor<double>({b, b}));
    p.k_f = Parameter<double>("k", random_tensor({5, 4}, rng));
    return p;
}

// Direct-sum DFT, matrix in frequency, direct-sum inverse.
Tensor<double> naive_fourier(const Tensor<double>& x, const Tensor<double>& m) {
    const std::size_t n = x.rows(), d = x.cols(), b = d / 2 + 1;
    const double w = 2.0 * std::numbers::pi / static_cast<double>(d);
    Tensor<double> out({n, d});
    for (std::size_t r = 0; r < n; ++r) {
        std::vector<double> zr(b), zi(b), yr(b, 0.0), yi(b, 0.0);
        for (std::size_t k = 0; k < b; ++k)
            for (std::size_t t = 0; t < d; ++t) {
                zr[k] += x(r, t) * std::cos(w * static_cast<double>(k * t));
                zi[k] -= x(r, t) * std::sin(w * static_cast<double>(k * t));
            }
        for (std::size_t k = 0; k < b; ++k)
            for (std::size_t j = 0; j < b; ++j) {
                yr[k] += m(k, j) * zr[j];
                yi[k] += m(k, j) * zi[j];
            }
        for (std::size_t t = 0; t < d; ++t) {
            double s = yr[0] + yr[b - 1] * ((t % 2) ? -1.0 : 1.0);
            for (std::size_t k = 1; k + 1 < b; ++k) {
                const double a = w * static_cast<double>(k * t);
                s += 2.0 * (yr[k] * std::cos(a) - yi[k] * std::sin(a));
            }
            out(r, t) = s / static_cast<double>(d);
        }
    }
    return out;
}

TEST(Fourier, IdentityWhenModulesZeroAndGlobalIdentity) {
    std::mt19937_64 rng(4);
    auto p = fourier_params(16, rng, false);
    for (std::size_t i = 0; i < 9; ++i) p.w_full.value(i, i) = 1.0;
    const Tensor<double> x = random_tensor({5, 16}, rng);
    Tape<double> tape;
    const auto gate = tape.constant(Tensor<double>({1, 5}, 0.2));
    EXPECT_LT(max_abs_diff(fourier_knowledge_attention(tape.constant(x), gate, p).value(), x), 1e-12);
}

TEST(Fourier, AllZeroGivesZero) {
    std::mt19937_64 rng(5);
    auto p = fourier_params(8, rng, false);
    Tape<double> tape;
    const auto out = fourier_knowledge_attention(tape.constant(random_tensor({3, 8}, rng)),
                                                 tape.constant(Tensor<double>({1, 5}, 0.2)), p)
                         .value();
    for (const double v : out.values()) EXPECT_EQ(v, 0.0);
}

TEST(Fourier, DcOnlyFilterGivesRowMean) {
    std::mt19937_64 rng(6);
    auto p = fourier_params(8, rng, false);
    p.w_full.value(0, 0) = 1.0;
    const Tensor<double> x = random_tensor({3, 8}, rng);
    Tape<double> tape;
    const auto out =
        fourier_knowledge_attention(tape.constant(x), tape.constant(Tensor<double>({1, 5}, 0.2)), p).value();
    for (std::size_t r = 0; r < 3; ++r) {
        double mean = 0;
        for (std::size_t c = 0; c < 8; ++c) mean += x(r, c) / 8.0;
        for (std::size_t c = 0; c < 8; ++c) EXPECT_NEAR(out(r, c), mean, 1e-12);
    }
}

TEST(Fourier, OneHotGateMatchesNaiveOracle) {
    std::mt19937_64 rng(7);
    for (std::size_t i = 0; i < 5; ++i) {
        auto p = fourier_params(16, rng, true);
        p.w_full.value = random_tensor({9, 9}, rng, 0.2);
        Tensor<double> gate({1, 5});
        gate[i] = 1.0;
        const Tensor<double> x = random_tensor({4, 16}, rng);
        Tensor<double> m = p.w_full.value;
        for (std::size_t r = 0; r < 9; ++r)
            for (std::size_t c = 0; c < 9; ++c) m(r, c) += p.a[i].value(r, 0) * p.bm[i].value(0, c);
        Tape<double> tape;
        const auto out = fourier_knowledge_attention(tape.constant(x), tape.constant(gate), p).value();
        EXPECT_LT(max_abs_diff(out, naive_fourier(x, m)), 1e-10);
    }
}

TEST(Fourier, PermutingModulesWithGateLeavesOutput) {
    std::mt19937_64 rng(8);
    auto p = fourier_params(8, rng, true);
    const Tensor<double> x = random_tensor({3, 8}, rng);
    const Tensor<double> gate({1, 5}, std::vector<double>{0.1, 0.3, 0.05, 0.4, 0.15});
    Tape<double> t0;
    const auto base = fourier_knowledge_attention(t0.constant(x), t0.constant(gate), p).value();
    auto q = p;
    std::swap(q.a[0], q.a[3]);
    std::swap(q.bm[0], q.bm[3]);
    Tensor<double> g2 = gate;
    std::swap(g2[0], g2[3]);
    Tape<double> t1;
    EXPECT_LT(max_abs_diff(fourier_knowledge_attention(t1.constant(x), t1.constant(g2), q).value(), base), 1e-12);
}

TEST(Fourier, WrongFactorShapesAreDimensionErrors) {
    std::mt19937_64 rng(9);
    auto p = fourier_params(8, rng, false);
    p.w_full.value = Tensor<double>({4, 4});
    Tape<double> tape;
    EXPECT_THROW(fourier_knowledge_attention(tape.constant(Tensor<double>({2, 8})),
                                             tape.constant(Tensor<double>({1, 5})), p),
                 DimensionError);
}

TEST(Fourier, GateDependsOnlyOnQueryAndKeys) {
    std::mt19937_64 rng(10);
    Parameter<double> k("k", random_tensor({5, 4}, rng));
    const Tensor<double> q = random_tensor({1, 4}, rng);
    Tape<double> t0, t1;
    const auto g0 = granularity_gate(t0.constant(q), t0.param(k)).value();
    (void)t1.constant(random_tensor({6, 16}, rng));
    const auto g1 = granularity_gate(t1.constant(q), t1.param(k)).value();
    EXPECT_EQ(g0, g1);
}

TEST(AttentionGrad, TemporalAndFourierBlocks) {
    std::mt19937_64 rng(13);
    for (int seed = 0; seed < 5; ++seed) {
        auto attn = random_attn(8, rng);
        auto four = fourier_params(8, rng, true);
        four.w_full.value = random_tensor({5, 5}, rng, 0.3);
        Parameter<double> x("x", random_tensor({5, 8}, rng));
        Parameter<double> q("q", random_tensor({1, 4}, rng));
        const Tensor<double> target = random_tensor({5, 8}, rng);
        const std::vector<std::size_t> spans{1};
        const auto mask = build_glm_mask(3, spans);
        std::vector<Parameter<double>*> params{&x, &q, &attn.w_q, &attn.w_k, &attn.w_v, &attn.w_o, &four.w_full,
                                               &four.k_f, &four.a[1], &four.bm[4]};
        const auto report = grad_check(
            [&](Tape<double>& t) {
                auto h = temporal_self_attention(t.param(x), attn, mask, 2);
                auto g = granularity_gate(t.param(q), t.param(four.k_f));
                return ops::mean_row_sq_error(fourier_knowledge_attention(h, g, four), target);
            },
            params);
        EXPECT_LT(report.max_rel_err, 1e-3) << "seed " << seed;
    }
}

}  // namespace
