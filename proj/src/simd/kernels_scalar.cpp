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

#include "gtm/simd/kernels.hpp"

namespace gtm::simd::generic {

namespace {

template <typename T>
T dot_impl(const T* a, const T* b, std::size_t n) {
    T sum{0};
    for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
    return sum;
}

template <typename T>
void axpy_impl(T alpha, const T* x, T* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
T sum_sq_diff_impl(const T* a, const T* b, std::size_t n) {
    T sum{0};
    for (std::size_t i = 0; i < n; ++i) {
        const T d = a[i] - b[i];
        sum += d * d;
    }
    return sum;
}

}  // namespace

float dot(const float* a, const float* b, std::size_t n) { return dot_impl(a, b, n); }
double dot(const double* a, const double* b, std::size_t n) { return dot_impl(a, b, n); }
void axpy(float alpha, const float* x, float* y, std::size_t n) { axpy_impl(alpha, x, y, n); }
void axpy(double alpha, const double* x, double* y, std::size_t n) { axpy_impl(alpha, x, y, n); }
float sum_sq_diff(const float* a, const float* b, std::size_t n) { return sum_sq_diff_impl(a, b, n); }
double sum_sq_diff(const double* a, const double* b, std::size_t n) { return sum_sq_diff_impl(a, b, n); }

}  // namespace gtm::simd::generic
