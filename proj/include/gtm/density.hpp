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

// Spectral distribution analysis: per-series spectra, 2-D Gaussian kernel
// density estimates with Scott's-rule bandwidth, and an L1 distance between
// density grids.

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "gtm/embedding.hpp"
#include "gtm/tensor.hpp"

namespace gtm {

enum class SpectrumMode { amplitude, phase };

const char* mode_name(SpectrumMode mode);

/// (frequency, value) points; frequency in cycles per sample.
struct SpectrumSample {
    std::vector<double> freq;
    std::vector<double> value;

    std::size_t size() const { return freq.size(); }
    void append(const SpectrumSample& other);
};

/// Bins 1..T/2 of the mean-removed series: frequency k/T with amplitude
/// 2|z_k|/T or phase atan2(im, re).
SpectrumSample extract_spectrum(std::span<const double> series, SpectrumMode mode);

/// Uniform random subsample without replacement (copy when size <= cap).
SpectrumSample subsample(const SpectrumSample& s, std::size_t cap, Rng& rng);

struct Bandwidth {
    double hx = 0.0;
    double hy = 0.0;
};

/// h_x = h_y = n^(-1/6) sqrt(sigma_x sigma_y), sample standard deviations.
Bandwidth scott_bandwidth(std::span<const double> x, std::span<const double> y);

struct DensityGrid {
    std::vector<double> x;  // evaluation points, uniform spacing
    std::vector<double> y;
    Tensor<double> density;  // [x.size(), y.size()]
    Bandwidth bandwidth;
    std::size_t n_samples = 0;
    std::string label;

    double cell_area() const;
    /// Riemann sum of density * cell_area.
    double mass() const;
};

std::vector<double> linspace(double lo, double hi, std::size_t n);

/// f(x, y) = 1/(n h_x h_y) sum_i K((x - x_i)/h_x, (y - y_i)/h_y), K the unit
/// bivariate Gaussian.
DensityGrid kde2d(std::span<const double> x, std::span<const double> y, std::span<const double> gx,
                  std::span<const double> gy, Bandwidth bw);

/// Grid spanning every sample's range padded by `pad` bandwidths.
std::pair<std::vector<double>, std::vector<double>> covering_grid(const std::vector<const SpectrumSample*>& samples,
                                                                  Bandwidth bw, double pad, std::size_t points);

/// sum |a - b| * cell_area over identical grids; lies in [0, 2].
double density_distance(const DensityGrid& a, const DensityGrid& b);

/// Header lines starting with '#', then "x\ty\tdensity" rows.
void write_density(std::ostream& os, const DensityGrid& grid);

}  // namespace gtm
