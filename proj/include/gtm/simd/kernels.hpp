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

// Inner-loop kernels shared by the dense ops, the loss, and the KDE grid.
//
// Every kernel has a portable scalar reference (namespace generic) and, on
// x86-64, an AVX2/FMA variant (namespace avx2) compiled in its own
// translation unit. The active table is chosen once at startup from CPUID and
// can be overridden with GTM_SIMD=scalar|avx2 or set_isa() for tests.
//
// Results of the two variants agree to rounding, not bitwise (FMA and lane
// reassociation). For a fixed ISA and length every kernel is deterministic,
// and its result for one output never depends on other outputs.

#include <cstddef>
#include <string_view>

namespace gtm::simd {

enum class Isa { scalar, avx2 };

template <typename T>
struct KernelTable {
    // sum_i a[i] * b[i]
    T (*dot)(const T* a, const T* b, std::size_t n);
    // y[i] += alpha * x[i]
    void (*axpy)(T alpha, const T* x, T* y, std::size_t n);
    // sum_i (a[i] - b[i])^2
    T (*sum_sq_diff)(const T* a, const T* b, std::size_t n);
};

namespace generic {
float dot(const float* a, const float* b, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
void axpy(float alpha, const float* x, float* y, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
float sum_sq_diff(const float* a, const float* b, std::size_t n);
double sum_sq_diff(const double* a, const double* b, std::size_t n);
}  // namespace generic

namespace avx2 {
float dot(const float* a, const float* b, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
void axpy(float alpha, const float* x, float* y, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
float sum_sq_diff(const float* a, const float* b, std::size_t n);
double sum_sq_diff(const double* a, const double* b, std::size_t n);
}  // namespace avx2

/// True when the avx2 variants were compiled in and the CPU reports AVX2+FMA.
bool avx2_supported();

Isa active_isa();

/// Switches the process-wide table. Throws if the ISA is unavailable.
void set_isa(Isa isa);

std::string_view isa_name(Isa isa);

template <typename T>
const KernelTable<T>& table_for(Isa isa);

template <typename T>
const KernelTable<T>& kernels();

template <typename T>
inline T dot(const T* a, const T* b, std::size_t n) {
    return kernels<T>().dot(a, b, n);
}

template <typename T>
inline void axpy(T alpha, const T* x, T* y, std::size_t n) {
    kernels<T>().axpy(alpha, x, y, n);
}

template <typename T>
inline T sum_sq_diff(const T* a, const T* b, std::size_t n) {
    return kernels<T>().sum_sq_diff(a, b, n);
}

}  // namespace gtm::simd
