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

#include "gtm/density.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <ostream>

#include "gtm/simd/kernels.hpp"
#include "gtm/spectral.hpp"

namespace gtm {

const char* mode_name(SpectrumMode mode) { return mode == SpectrumMode::amplitude ? "amplitude" : "phase"; }

void SpectrumSample::append(const SpectrumSample& other) {
    freq.insert(freq.end(), other.freq.begin(), other.freq.end());
    value.insert(value.end(), other.value.begin(), other.value.end());
}

SpectrumSample extract_spectrum(std::span<const double> series, SpectrumMode mode) {
    const std::size_t n = series.size();
    if (n < 8) throw ConfigError("spectrum extraction needs at least 8 points, got " + std::to_string(n));
    const double mean = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(n);
    std::vector<double> centered(n);
    for (std::size_t i = 0; i < n; ++i) centered[i] = series[i] - mean;
    const auto z = spectral::dft(centered);
    SpectrumSample out;
    for (std::size_t k = 1; k <= n / 2; ++k) {
        out.freq.push_back(static_cast<double>(k) / static_cast<double>(n));
        out.value.push_back(mode == SpectrumMode::amplitude ? 2.0 * std::abs(z[k]) / static_cast<double>(n)
                                                            : std::atan2(z[k].imag(), z[k].real()));
    }
    return out;
}

SpectrumSample subsample(const SpectrumSample& s, std::size_t cap, Rng& rng) {
    if (s.size() <= cap) return s;
    std::vector<std::size_t> idx(s.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(cap);
    std::sort(idx.begin(), idx.end());
    SpectrumSample out;
    for (const auto i : idx) {
        out.freq.push_back(s.freq[i]);
        out.value.push_back(s.value[i]);
    }
    return out;
}

namespace {

double sample_std(std::span<const double> v) {
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (const double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

Bandwidth scott_bandwidth(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DimensionError("scott_bandwidth: coordinate lengths differ");
    if (x.size() < 2) throw ConfigError("scott_bandwidth needs at least 2 points");
    const double sx = sample_std(x);
    const double sy = sample_std(y);
    if (!(sx > 0.0) || !(sy > 0.0)) throw NumericError("scott_bandwidth: degenerate point cloud (zero variance)");
    const double h = std::pow(static_cast<double>(x.size()), -1.0 / 6.0) * std::sqrt(sx * sy);
    return {h, h};
}

double DensityGrid::cell_area() const {
    const double dx = x.size() > 1 ? x[1] - x[0] : 1.0;
    const double dy = y.size() > 1 ? y[1] - y[0] : 1.0;
    return dx * dy;
}

double DensityGrid::mass() const {
    return std::accumulate(density.values().begin(), density.values().end(), 0.0) * cell_area();
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    if (n < 2) throw ConfigError("linspace needs at least 2 points");
    std::vector<double> out(n);
    const double step = (hi - lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) out[i] = lo + step * static_cast<double>(i);
    return out;
}

DensityGrid kde2d(std::span<const double> x, std::span<const double> y, std::span<const double> gx,
                  std::span<const double> gy, Bandwidth bw) {
    if (x.size() != y.size()) throw DimensionError("kde2d: coordinate lengths differ");
    if (x.empty()) throw ConfigError("kde2d: no points");
    if (!(bw.hx > 0.0) || !(bw.hy > 0.0)) throw ConfigError("kde2d: bandwidths must be positive");
    if (gx.empty() || gy.empty()) throw ConfigError("kde2d: empty grid");
    const std::size_t n = x.size();
    const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    auto factor = [&](std::span<const double> grid, std::span<const double> pts, double h) {
        std::vector<double> e(grid.size() * n);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            for (std::size_t k = 0; k < n; ++k) {
                const double u = (grid[i] - pts[k]) / h;
                e[i * n + k] = inv_sqrt_2pi * std::exp(-0.5 * u * u);
            }
        }
        return e;
    };
    const auto ex = factor(gx, x, bw.hx);
    const auto ey = factor(gy, y, bw.hy);
    DensityGrid out;
    out.x.assign(gx.begin(), gx.end());
    out.y.assign(gy.begin(), gy.end());
    out.bandwidth = bw;
    out.n_samples = n;
    out.density = Tensor<double>({gx.size(), gy.size()});
    const double norm = 1.0 / (static_cast<double>(n) * bw.hx * bw.hy);
    for (std::size_t i = 0; i < gx.size(); ++i) {
        for (std::size_t j = 0; j < gy.size(); ++j) {
            out.density(i, j) = norm * simd::dot(ex.data() + i * n, ey.data() + j * n, n);
        }
    }
    return out;
}

std::pair<std::vector<double>, std::vector<double>> covering_grid(const std::vector<const SpectrumSample*>& samples,
                                                                  Bandwidth bw, double pad, std::size_t points) {
    double xlo = INFINITY, xhi = -INFINITY, ylo = INFINITY, yhi = -INFINITY;
    for (const auto* s : samples) {
        for (std::size_t i = 0; i < s->size(); ++i) {
            xlo = std::min(xlo, s->freq[i]);
            xhi = std::max(xhi, s->freq[i]);
            ylo = std::min(ylo, s->value[i]);
            yhi = std::max(yhi, s->value[i]);
        }
    }
    if (!std::isfinite(xlo)) throw ConfigError("covering_grid: no points");
    return {linspace(xlo - pad * bw.hx, xhi + pad * bw.hx, points), linspace(ylo - pad * bw.hy, yhi + pad * bw.hy, points)};
}

double density_distance(const DensityGrid& a, const DensityGrid& b) {
    if (a.x != b.x || a.y != b.y) throw DimensionError("density_distance: grids differ");
    double total = 0.0;
    for (std::size_t i = 0; i < a.density.size(); ++i) total += std::abs(a.density[i] - b.density[i]);
    return total * a.cell_area();
}

void write_density(std::ostream& os, const DensityGrid& grid) {
    os.precision(17);
    os << "# label\t" << grid.label << '\n'
       << "# n\t" << grid.n_samples << '\n'
       << "# bandwidth_x\t" << grid.bandwidth.hx << '\n'
       << "# bandwidth_y\t" << grid.bandwidth.hy << '\n'
       << "x\ty\tdensity\n";
    for (std::size_t i = 0; i < grid.x.size(); ++i) {
        for (std::size_t j = 0; j < grid.y.size(); ++j) {
            os << grid.x[i] << '\t' << grid.y[j] << '\t' << grid.density(i, j) << '\n';
        }
    }
}

}  // namespace gtm
