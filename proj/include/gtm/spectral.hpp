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

// Real FFT along the feature axis of a [n, D] tensor.
//
// Convention: forward transform unnormalized, X_k = sum_t x_t e^{-2 pi i k t / D},
// keeping the D/2 + 1 nonnegative-frequency bins; inverse carries the 1/D.
// D must be a power of two. Any other normalization would only rescale the
// real matrices applied between the two transforms.

#include <complex>
#include <span>
#include <vector>

#include "gtm/autograd.hpp"
#include "gtm/tensor.hpp"

namespace gtm::spectral {

constexpr std::size_t bin_count(std::size_t d) { return d / 2 + 1; }

bool is_power_of_two(std::size_t n);

template <typename T>
ComplexTensor<T> rfft(const Tensor<T>& x);

/// Imaginary parts of the DC and Nyquist bins are ignored.
template <typename T>
Tensor<T> irfft(const ComplexTensor<T>& z, std::size_t d);

/// out.re = z.re * M^T, out.im = z.im * M^T for a real M[B, B'].
template <typename T>
ComplexTensor<T> apply_real_matrix(const Tensor<T>& m, const ComplexTensor<T>& z);

template <typename T>
ComplexVar<T> rfft(Var<T> x);

template <typename T>
Var<T> irfft(ComplexVar<T> z, std::size_t d);

template <typename T>
ComplexVar<T> apply_real_matrix(Var<T> m, ComplexVar<T> z);

/// Full complex DFT of arbitrary length (radix-2 directly, Bluestein otherwise).
std::vector<std::complex<double>> dft(std::span<const double> x);

}  // namespace gtm::spectral
