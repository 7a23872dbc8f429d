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

#include "gtm/spectral.hpp"

#include <cmath>
#include <numbers>
#include <unordered_map>

namespace gtm::spectral {

using cplx = std::complex<double>;

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

namespace {

struct Radix2Plan {
    std::size_t n = 0;
    std::vector<std::size_t> bitrev;
    std::vector<cplx> twiddle;  // e^{-2 pi i k / n}, k < n/2

    explicit Radix2Plan(std::size_t size) : n(size), bitrev(size), twiddle(size / 2) {
        std::size_t bits = 0;
        while ((std::size_t{1} << bits) < n) ++bits;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t r = 0;
            for (std::size_t b = 0; b < bits; ++b) r |= ((i >> b) & 1u) << (bits - 1 - b);
            bitrev[i] = r;
        }
        for (std::size_t k = 0; k < n / 2; ++k) {
            const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
            twiddle[k] = {std::cos(ang), std::sin(ang)};
        }
    }

    // In-place forward transform; inverse = conj(forward(conj(x))).
    void forward(std::vector<cplx>& a) const {
        for (std::size_t i = 0; i < n; ++i) {
            if (i < bitrev[i]) std::swap(a[i], a[bitrev[i]]);
        }
        for (std::size_t len = 2; len <= n; len <<= 1) {
            const std::size_t half = len / 2;
            const std::size_t stride = n / len;
            for (std::size_t s = 0; s < n; s += len) {
                for (std::size_t j = 0; j < half; ++j) {
                    const cplx t = twiddle[j * stride] * a[s + j + half];
                    a[s + j + half] = a[s + j] - t;
                    a[s + j] += t;
                }
            }
        }
    }
};

const Radix2Plan& plan_for(std::size_t n) {
    thread_local std::unordered_map<std::size_t, Radix2Plan> cache;
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, Radix2Plan(n)).first;
    return it->second;
}

void require_length(std::size_t d) {
    if (d < 2 || !is_power_of_two(d)) {
        throw DimensionError("FFT length must be a power of two >= 2, got " + std::to_string(d));
    }
}

// Unnormalized inverse of a Hermitian half spectrum, written into out[0..d).
void inverse_half(const Radix2Plan& plan, std::vector<cplx>& buf, std::size_t d) {
    for (std::size_t k = d / 2 + 1; k < d; ++k) buf[k] = std::conj(buf[d - k]);
    for (auto& v : buf) v = std::conj(v);
    plan.forward(buf);
}

}  // namespace

template <typename T>
ComplexTensor<T> rfft(const Tensor<T>& x) {
    const std::size_t d = x.cols();
    require_length(d);
    const std::size_t n = x.rows();
    const std::size_t b = bin_count(d);
    const Radix2Plan& plan = plan_for(d);
    std::vector<std::size_t> shape = x.shape();
    shape.back() = b;
    ComplexTensor<T> out{Tensor<T>(shape), Tensor<T>(shape)};
    std::vector<cplx> buf(d);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t t = 0; t < d; ++t) buf[t] = {static_cast<double>(x[r * d + t]), 0.0};
        plan.forward(buf);
        for (std::size_t k = 0; k < b; ++k) {
            out.re[r * b + k] = static_cast<T>(buf[k].real());
            out.im[r * b + k] = static_cast<T>(buf[k].imag());
        }
        out.im[r * b] = T{0};
        out.im[r * b + b - 1] = T{0};
    }
    return out;
}

template <typename T>
Tensor<T> irfft(const ComplexTensor<T>& z, std::size_t d) {
    require_length(d);
    const std::size_t b = bin_count(d);
    if (z.re.cols() != b) {
        throw DimensionError("irfft: " + std::to_string(z.re.cols()) + " bins inconsistent with length " +
                             std::to_string(d));
    }
    const std::size_t n = z.re.rows();
    const Radix2Plan& plan = plan_for(d);
    std::vector<std::size_t> shape = z.re.shape();
    shape.back() = d;
    Tensor<T> out(shape);
    std::vector<cplx> buf(d);
    const double inv = 1.0 / static_cast<double>(d);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t k = 0; k < b; ++k) {
            buf[k] = {static_cast<double>(z.re[r * b + k]), static_cast<double>(z.im[r * b + k])};
        }
        buf[0].imag(0.0);
        buf[b - 1].imag(0.0);
        inverse_half(plan, buf, d);
        // conj of the result; only the real part is kept
        for (std::size_t t = 0; t < d; ++t) out[r * d + t] = static_cast<T>(buf[t].real() * inv);
    }
    return out;
}

template <typename T>
ComplexTensor<T> apply_real_matrix(const Tensor<T>& m, const ComplexTensor<T>& z) {
    if (m.dim() != 2 || m.shape()[1] != z.re.cols()) {
        throw DimensionError("apply_real_matrix: matrix " + shape_string(m.shape()) + " vs spectrum " +
                             shape_string(z.shape()));
    }
    const std::size_t n = z.re.rows(), bin = m.shape()[1], out_bins = m.shape()[0];
    ComplexTensor<T> out(Tensor<T>({n, out_bins}), Tensor<T>({n, out_bins}));
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t o = 0; o < out_bins; ++o) {
            T sr{0}, si{0};
            for (std::size_t k = 0; k < bin; ++k) {
                sr += z.re[r * bin + k] * m(o, k);
                si += z.im[r * bin + k] * m(o, k);
            }
            out.re(r, o) = sr;
            out.im(r, o) = si;
        }
    }
    return out;
}

template <typename T>
ComplexVar<T> rfft(Var<T> x) {
    Tape<T>& tape = *x.tape;
    const std::size_t d = x.value().cols();
    ComplexTensor<T> z = rfft(x.value());
    const bool rg = tape.requires_grad(x);
    // Adjoint of one half: D * irfft(w) with w_0 = g_0, w_k = g_k / 2 inside, w_{D/2} = g_{D/2}.
    auto adjoint = [d](const Tensor<T>& g, bool imag_part) {
        const std::size_t b = bin_count(d);
        Tensor<T> zero(g.shape());
        Tensor<T> w = g;
        for (std::size_t r = 0; r < g.rows(); ++r) {
            for (std::size_t k = 1; k + 1 < b; ++k) w[r * b + k] *= T{0.5};
        }
        Tensor<T> back = imag_part ? irfft(ComplexTensor<T>(zero, w), d) : irfft(ComplexTensor<T>(w, zero), d);
        for (auto& v : back.values()) v *= static_cast<T>(d);
        return back;
    };
    Var<T> re = tape.push(std::move(z.re), rg, [ix = x.id, adjoint](Tape<T>& t, std::size_t self) {
        const Tensor<T> back = adjoint(t.grad_mut(self), false);
        Tensor<T>& gx = t.grad_mut(ix);
        for (std::size_t i = 0; i < back.size(); ++i) gx[i] += back[i];
    });
    Var<T> im = tape.push(std::move(z.im), rg, [ix = x.id, adjoint](Tape<T>& t, std::size_t self) {
        const Tensor<T> back = adjoint(t.grad_mut(self), true);
        Tensor<T>& gx = t.grad_mut(ix);
        for (std::size_t i = 0; i < back.size(); ++i) gx[i] += back[i];
    });
    return {re, im};
}

template <typename T>
Var<T> irfft(ComplexVar<T> z, std::size_t d) {
    Tape<T>& tape = *z.re.tape;
    Tensor<T> out = irfft(ComplexTensor<T>(z.re.value(), z.im.value()), d);
    require_finite(out, "irfft");
    const bool rg = tape.requires_grad(z.re) || tape.requires_grad(z.im);
    return tape.push(std::move(out), rg, [ir = z.re.id, ii = z.im.id, d](Tape<T>& t, std::size_t self) {
        const ComplexTensor<T> g = rfft(t.grad_mut(self));
        const std::size_t b = bin_count(d);
        const T edge = T{1} / static_cast<T>(d);
        const T inner = T{2} / static_cast<T>(d);
        const std::size_t n = g.re.rows();
        if (t.requires_grad(ir)) {
            Tensor<T>& gr = t.grad_mut(ir);
            for (std::size_t r = 0; r < n; ++r) {
                for (std::size_t k = 0; k < b; ++k) {
                    const T c = (k == 0 || k == b - 1) ? edge : inner;
                    gr[r * b + k] += c * g.re[r * b + k];
                }
            }
        }
        if (t.requires_grad(ii)) {
            Tensor<T>& gi = t.grad_mut(ii);
            for (std::size_t r = 0; r < n; ++r) {
                for (std::size_t k = 1; k + 1 < b; ++k) gi[r * b + k] += inner * g.im[r * b + k];
            }
        }
    });
}

template <typename T>
ComplexVar<T> apply_real_matrix(Var<T> m, ComplexVar<T> z) {
    return {ops::matmul_nt(z.re, m), ops::matmul_nt(z.im, m)};
}

std::vector<cplx> dft(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n == 0) return {};
    if (is_power_of_two(n)) {
        std::vector<cplx> a(x.begin(), x.end());
        plan_for(n).forward(a);
        return a;
    }
    // Bluestein: X_k = w_k * sum_j (x_j w_j) conj(w_{k-j}), w_j = e^{-i pi j^2 / n}
    std::size_t m = 1;
    while (m < 2 * n - 1) m <<= 1;
    std::vector<cplx> w(n);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t sq = (j * j) % (2 * n);
        const double ang = -std::numbers::pi * static_cast<double>(sq) / static_cast<double>(n);
        w[j] = {std::cos(ang), std::sin(ang)};
    }
    std::vector<cplx> a(m), b(m);
    for (std::size_t j = 0; j < n; ++j) a[j] = x[j] * w[j];
    b[0] = std::conj(w[0]);
    for (std::size_t j = 1; j < n; ++j) b[j] = b[m - j] = std::conj(w[j]);
    const Radix2Plan& plan = plan_for(m);
    plan.forward(a);
    plan.forward(b);
    for (std::size_t i = 0; i < m; ++i) a[i] = std::conj(a[i] * b[i]);
    plan.forward(a);
    std::vector<cplx> out(n);
    const double inv = 1.0 / static_cast<double>(m);
    for (std::size_t k = 0; k < n; ++k) out[k] = w[k] * std::conj(a[k]) * inv;
    return out;
}

template ComplexTensor<float> rfft<float>(const Tensor<float>&);
template ComplexTensor<double> rfft<double>(const Tensor<double>&);
template Tensor<float> irfft<float>(const ComplexTensor<float>&, std::size_t);
template Tensor<double> irfft<double>(const ComplexTensor<double>&, std::size_t);
template ComplexTensor<float> apply_real_matrix<float>(const Tensor<float>&, const ComplexTensor<float>&);
template ComplexTensor<double> apply_real_matrix<double>(const Tensor<double>&, const ComplexTensor<double>&);
template ComplexVar<float> rfft<float>(Var<float>);
template ComplexVar<double> rfft<double>(Var<double>);
template Var<float> irfft<float>(ComplexVar<float>, std::size_t);
template Var<double> irfft<double>(ComplexVar<double>, std::size_t);
template ComplexVar<float> apply_real_matrix<float>(Var<float>, ComplexVar<float>);
template ComplexVar<double> apply_real_matrix<double>(Var<double>, ComplexVar<double>);

}  // namespace gtm::spectral
