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
#include <random>
#include <vector>

#include "gtm/simd/kernels.hpp"

using namespace gtm::simd;

namespace {

template <typename T>
std::vector<T> random_vec(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<T> v(n);
    for (auto& x : v) x = static_cast<T>(dist(rng));
    return v;
}

template <typename T>
T tolerance(std::size_t n) {
    return static_cast<T>(std::is_same_v<T, float> ? 1e-5 : 1e-13) * static_cast<T>(n + 1);
}

template <typename T>
class KernelEquivalence : public ::testing::Test {};

using Types = ::testing::Types<float, double>;
TYPED_TEST_SUITE(KernelEquivalence, Types);

TYPED_TEST(KernelEquivalence, ScalarTableMatchesGenericFunctions) {
    using T = TypeParam;
    std::mt19937_64 rng(3);
    const auto& t = table_for<T>(Isa::scalar);
    for (std::size_t n : {0u, 1u, 7u, 64u}) {
        auto a = random_vec<T>(n, rng), b = random_vec<T>(n, rng);
        EXPECT_EQ(t.dot(a.data(), b.data(), n), generic::dot(a.data(), b.data(), n));
        EXPECT_EQ(t.sum_sq_diff(a.data(), b.data(), n), generic::sum_sq_diff(a.data(), b.data(), n));
    }
}

TYPED_TEST(KernelEquivalence, Avx2AgreesWithScalarToRounding) {
    using T = TypeParam;
    if (!avx2_supported()) GTEST_SKIP() << "AVX2 not available on this machine";
    const auto& s = table_for<T>(Isa::scalar);
    const auto& v = table_for<T>(Isa::avx2);
    std::mt19937_64 rng(11);
    for (std::size_t n = 0; n <= 300; n += (n < 40 ? 1 : 37)) {
        auto a = random_vec<T>(n, rng), b = random_vec<T>(n, rng);
        const T tol = tolerance<T>(n);
        EXPECT_NEAR(s.dot(a.data(), b.data(), n), v.dot(a.data(), b.data(), n), tol) << "n=" << n;
        EXPECT_NEAR(s.sum_sq_diff(a.data(), b.data(), n), v.sum_sq_diff(a.data(), b.data(), n), tol) << "n=" << n;
        auto y1 = b, y2 = b;
        s.axpy(T(0.37), a.data(), y1.data(), n);
        v.axpy(T(0.37), a.data(), y2.data(), n);
        for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(y1[i], y2[i], tolerance<T>(1)) << "n=" << n << " i=" << i;
    }
}

TYPED_TEST(KernelEquivalence, HandValues) {
    using T = TypeParam;
    const std::vector<T> a{1, 2, 3, 4, 5, 6, 7, 8, 9};
    const std::vector<T> b{9, 8, 7, 6, 5, 4, 3, 2, 1};
    for (Isa isa : {Isa::scalar, Isa::avx2}) {
        if (isa == Isa::avx2 && !avx2_supported()) continue;
        const auto& t = table_for<T>(isa);
        EXPECT_EQ(t.dot(a.data(), b.data(), 9), T(165));
        EXPECT_EQ(t.sum_sq_diff(a.data(), b.data(), 9), T(240));
        std::vector<T> y(9, T(1));
        t.axpy(T(2), a.data(), y.data(), 9);
        EXPECT_EQ(y[8], T(19));
    }
}

TYPED_TEST(KernelEquivalence, DeterministicForFixedIsa) {
    using T = TypeParam;
    std::mt19937_64 rng(5);
    auto a = random_vec<T>(1001, rng), b = random_vec<T>(1001, rng);
    const T first = dot(a.data(), b.data(), a.size());
    for (int rep = 0; rep < 5; ++rep) EXPECT_EQ(dot(a.data(), b.data(), a.size()), first);
}

TEST(Dispatch, SetIsaSwitchesTable) {
    const Isa before = active_isa();
    set_isa(Isa::scalar);
    EXPECT_EQ(active_isa(), Isa::scalar);
    EXPECT_EQ(isa_name(Isa::scalar), "scalar");
    if (avx2_supported()) {
        set_isa(Isa::avx2);
        EXPECT_EQ(active_isa(), Isa::avx2);
    } else {
        EXPECT_ANY_THROW(set_isa(Isa::avx2));
    }
    set_isa(before);
}

}  // namespace
