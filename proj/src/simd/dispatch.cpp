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

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "gtm/simd/kernels.hpp"

namespace gtm::simd {

namespace {

template <typename T>
constexpr KernelTable<T> kGeneric{
    static_cast<T (*)(const T*, const T*, std::size_t)>(&generic::dot),
    static_cast<void (*)(T, const T*, T*, std::size_t)>(&generic::axpy),
    static_cast<T (*)(const T*, const T*, std::size_t)>(&generic::sum_sq_diff),
};

#if defined(GTM_HAVE_AVX2)
template <typename T>
constexpr KernelTable<T> kAvx2{
    static_cast<T (*)(const T*, const T*, std::size_t)>(&avx2::dot),
    static_cast<void (*)(T, const T*, T*, std::size_t)>(&avx2::axpy),
    static_cast<T (*)(const T*, const T*, std::size_t)>(&avx2::sum_sq_diff),
};
#endif

Isa detect() {
    if (const char* env = std::getenv("GTM_SIMD")) {
        const std::string v(env);
        if (v == "scalar") return Isa::scalar;
        if (v == "avx2" && avx2_supported()) return Isa::avx2;
    }
    return avx2_supported() ? Isa::avx2 : Isa::scalar;
}

std::atomic<Isa>& current() {
    static std::atomic<Isa> isa{detect()};
    return isa;
}

}  // namespace

bool avx2_supported() {
#if defined(GTM_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return ok;
#else
    return false;
#endif
}

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void set_isa(Isa isa) {
    if (isa == Isa::avx2 && !avx2_supported()) {
        throw std::runtime_error("avx2 kernels are not available on this build/CPU");
    }
    current().store(isa, std::memory_order_relaxed);
}

std::string_view isa_name(Isa isa) {
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
    }
    return "unknown";
}

template <typename T>
const KernelTable<T>& table_for(Isa isa) {
#if defined(GTM_HAVE_AVX2)
    if (isa == Isa::avx2) return kAvx2<T>;
#else
    (void)isa;
#endif
    return kGeneric<T>;
}

template <typename T>
const KernelTable<T>& kernels() {
    return table_for<T>(active_isa());
}

template const KernelTable<float>& table_for<float>(Isa);
template const KernelTable<double>& table_for<double>(Isa);
template const KernelTable<float>& kernels<float>();
template const KernelTable<double>& kernels<double>();

}  // namespace gtm::simd
