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

#include "gtm/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gtm/simd/kernels.hpp"

namespace gtm {

template <typename T>
Var<T> Tape<T>::constant(Tensor<T> value) {
    Node node;
    node.value = std::move(value);
    nodes_.push_back(std::move(node));
    return {this, nodes_.size() - 1};
}

template <typename T>
Var<T> Tape<T>::param(Parameter<T>& p) {
    if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return {this, it->second};
    Node node;
    node.value = p.value;
    node.requires_grad = true;
    node.param = &p;
    nodes_.push_back(std::move(node));
    param_nodes_.emplace(&p, nodes_.size() - 1);
    return {this, nodes_.size() - 1};
}

template <typename T>
Var<T> Tape<T>::push(Tensor<T> value, bool requires_grad, BackwardFn backward) {
    Node node;
    node.value = std::move(value);
    node.requires_grad = requires_grad;
    if (requires_grad) node.backward = std::move(backward);
    nodes_.push_back(std::move(node));
    return {this, nodes_.size() - 1};
}

template <typename T>
Tensor<T>& Tape<T>::grad_mut(std::size_t id) {
    Node& n = nodes_[id];
    if (!n.has_grad) {
        n.grad = Tensor<T>(n.value.shape());
        n.has_grad = true;
    }
    return n.grad;
}

template <typename T>
Tensor<T> Tape<T>::grad(Var<T> v) const {
    const Node& n = nodes_[v.id];
    return n.has_grad ? n.grad : Tensor<T>(n.value.shape());
}

template <typename T>
void Tape<T>::backward(Var<T> root) {
    if (nodes_[root.id].value.size() != 1) {
        throw DimensionError("backward root must hold a single element, got shape " +
                             shape_string(nodes_[root.id].value.shape()));
    }
    grad_mut(root.id)[0] = T{1};
    for (std::size_t i = root.id + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.has_grad || !n.requires_grad) continue;
        if (n.backward) {
            n.backward(*this, i);
        } else if (n.param != nullptr) {
            auto& pg = n.param->grad;
            if (!pg.same_shape(n.value)) pg = Tensor<T>(n.value.shape());
            simd::axpy(T{1}, n.grad.data(), pg.data(), pg.size());
        }
    }
}

template class Tape<float>;
template class Tape<double>;

namespace ops {

namespace {

template <typename T>
void same_tape(Var<T> a, Var<T> b) {
    if (a.tape != b.tape) throw Error("vars belong to different tapes");
}

template <typename T>
void require_2d(const Tensor<T>& t, const char* what) {
    if (t.dim() != 2) {
        throw DimensionError(std::string(what) + " expects a 2-D tensor, got " + shape_string(t.shape()));
    }
}

template <typename T>
Var<T> finish(Tape<T>& tape, Tensor<T> out, bool rg, typename Tape<T>::BackwardFn fn, const char* name) {
    require_finite(out, name);
    return tape.push(std::move(out), rg, std::move(fn));
}

}  // namespace

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
    same_tape(a, b);
    Tape<T>& tape = *a.tape;
    const auto& av = a.value();
    const auto& bv = b.value();
    if (!av.same_shape(bv)) {
        throw DimensionError("add: " + shape_string(av.shape()) + " vs " + shape_string(bv.shape()));
    }
    Tensor<T> out = av;
    simd::axpy(T{1}, bv.data(), out.data(), out.size());
    const bool rg = tape.requires_grad(a) || tape.requires_grad(b);
    return finish(tape, std::move(out), rg,
                  [ia = a.id, ib = b.id](Tape<T>& t, std::size_t self) {
                      const Tensor<T>& g = t.grad_mut(self);
                      for (std::size_t id : {ia, ib}) {
                          if (t.requires_grad(id)) simd::axpy(T{1}, g.data(), t.grad_mut(id).data(), g.size());
                      }
                  },
                  "add");
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
    same_tape(a, b);
    Tape<T>& tape = *a.tape;
    const auto& av = a.value();
    const auto& bv = b.value();
    if (!av.same_shape(bv)) {
        throw DimensionError("sub: " + shape_string(av.shape()) + " vs " + shape_string(bv.shape()));
    }
    Tensor<T> out = av;
    simd::axpy(T{-1}, bv.data(), out.data(), out.size());
    const bool rg = tape.requires_grad(a) || tape.requires_grad(b);
    return finish(tape, std::move(out), rg,
                  [ia = a.id, ib = b.id](Tape<T>& t, std::size_t self) {
                      const Tensor<T>& g = t.grad_mut(self);
                      if (t.requires_grad(ia)) simd::axpy(T{1}, g.data(), t.grad_mut(ia).data(), g.size());
                      if (t.requires_grad(ib)) simd::axpy(T{-1}, g.data(), t.grad_mut(ib).data(), g.size());
                  },
                  "sub");
}

template <typename T>
Var<T> scale(Var<T> a, T s) {
    Tape<T>& tape = *a.tape;
    Tensor<T> out = a.value();
    for (auto& v : out.values()) v *= s;
    return finish(tape, std::move(out), tape.requires_grad(a),
                  [ia = a.id, s](Tape<T>& t, std::size_t self) {
                      const Tensor<T>& g = t.grad_mut(self);
                      simd::axpy(s, g.data(), t.grad_mut(ia).data(), g.size());
                  },
                  "scale");
}

template <typename T>
Var<T> add_row(Var<T> a, Var<T> v) {
    same_tape(a, v);
    Tape<T>& tape = *a.tape;
    const auto& av = a.value();
    const auto& vv = v.value();
    if (vv.size() != av.cols()) {
        throw DimensionError("add_row: row vector " + shape_string(vv.shape()) + " vs " + shape_string(av.shape()));
    }
    Tensor<T> out = av;
    const std::size_t n = av.rows();
    const std::size_t d = av.cols();
    for (std::size_t r = 0; r < n; ++r) simd::axpy(T{1}, vv.data(), out.data() + r * d, d);
    const bool rg = tape.requires_grad(a) || tape.requires_grad(v);
    return finish(tape, std::move(out), rg,
                  [ia = a.id, iv = v.id, n, d](Tape<T>& t, std::size_t self) {
                      const Tensor<T>& g = t.grad_mut(self);
                      if (t.requires_grad(ia)) simd::axpy(T{1}, g.data(), t.grad_mut(ia).data(), g.size());
                      if (t.requires_grad(iv)) {
                          T* gv = t.grad_mut(iv).data();
                          for (std::size_t r = 0; r < n; ++r) simd::axpy(T{1}, g.data() + r * d, gv, d);
                      }
                  },
                  "add_row");
}

namespace {

// out[n, m] += a[n, k] * b[k, m]
template <typename T>
void gemm_nn(const T* a, const T* b, T* out, std::size_t n, std::size_t k, std::size_t m) {
    for (std::size_t i = 0; i < n; ++i) {
        T* orow = out + i * m;
        const T* arow = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const T w = arow[p];
            if (w == T{0}) continue;
            simd::axpy(w, b + p * m, orow, m);
        }
    }
}

// out[n, m] += a[n, k] * b[m, k]^T
template <typename T>
void gemm_nt(const T* a, const T* b, T* out, std::size_t n, std::size_t k, std::size_t m) {
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) out[i * m + j] += simd::dot(a + i * k, b + j * k, k);
    }
}

// out[k, m] += a[n, k]^T * g[n, m]
template <typename T>
void gemm_tn(const T* a, const T* g, T* out, std::size_t n, std::size_t k, std::size_t m) {
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const T w = a[i * k + p];
            if (w == T{0}) continue;
            simd::axpy(w, g + i * m, out + p * m, m);
        }
    }
}

}  // namespace

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
    same_tape(a, b);
    Tape<T>& tape = *a.tape;
    const auto& av = a.value();
    const auto& bv = b.value();
    require_2d(av, "matmul");
    require_2d(bv, "matmul");
    const std::size_t n = av.shape()[0], k = av.shape()[1], m = bv.shape()[1];
    if (bv.shape()[0] != k) {
        throw DimensionError("matmul: inner dimensions " + shape_string(av.shape()) + " x " + shape_string(bv.shape()));
    }
    Tensor<T> out({n, m});
    gemm_nn(av.data(), bv.data(), out.data(), n, k, m);
    const bool rg = tape.requires_grad(a) || tape.requires_grad(b);
    return finish(tape, std::move(out), rg,
                  [ia = a.id, ib = b.id, n, k, m](Tape<T>& t, std::size_t self) {
                      const Tensor<T>& g = t.grad_mut(self);
                      if (t.requires_grad(ia)) {
                          // dA = G * B^T
                          gemm_nt(g.data(), t.value(ib).data(), t.grad_mut(ia).data(), n, m, k);
                      }
                      if (t.requires_grad(ib)) {
                          // dB = A^T * G
                          gemm_tn(t.value(ia).data(), g.data(), t.grad_mut(ib).data(), n, k, m);
                      }
                  },
                  "matmul");
}

template <typename T>
Var<T> matmul_nt(Var<T> a, Var<T> b) {
    same_tape(a, b);
    Tape<T>& tape = *a.tape;
    const auto& av = a.value();
    const auto& bv = b.value();
    require_2d(av, "matmul_nt");
    require_2d(bv, "matmul_nt");
    const std::size_t n = av.shape()[0], k = av.shape()[1], m = bv.shape()[0];
    if (bv.shape()[1] != k) {
        throw DimensionError("matmul_nt: inner dimensions " + shape_string(av.shape()) + " x " +
                             shape_string(bv.shape()) + "^T");
    }
    Tensor<T> out({n, m});
    gemm_nt(av.data(), bv.data(), out.data(), n, k, m);
    const bool rg = tape.requires_grad(a) || tape.requires_grad(b);
    return finish(tape, std::move(out), rg,
                  [ia = a.id, ib = b.id, n, k, m](Tape<T>& t, std::size_t self) {
                      const Tensor<T>& g = t.grad_mut(self);
                      if (t.requires_grad(ia)) {
                          // dA = G * B
                          gemm_nn(g.data(), t.value(ib).data(), t.grad_mut(ia).data(), n, m, k);
                      }
                      if (t.requires_grad(ib)) {
                          // dB = G^T * A
                          gemm_tn(g.data(), t.value(ia).data(), t.grad_mut(ib).data(), n, m, k);
                      }
                  },
                  "matmul_nt");
}

template <typename T>
Var<T> linear(Var<T> x, Var<T> w) {
    return matmul(x, w);
}

template <typename T>
Var<T> linear(Var<T> x, Var<T> w, Var<T> b) {
    return add_row(matmul(x, w), b);
}

namespace {

template <typename T>
Var<T> softmax_impl(Var<T> x, const std::uint8_t* allowed, const char* name) {
    Tape<T>& tape = *x.tape;
    const auto& xv = x.value();
    if (xv.cols() == 0) throw DimensionError(std::string(name) + ": last dimension must be >= 1");
    const std::size_t n = xv.rows(), k = xv.cols();
    Tensor<T> out(xv.shape());
    for (std::size_t r = 0; r < n; ++r) {
        const T* in = xv.data() + r * k;
        T* o = out.data() + r * k;
        const std::uint8_t* ok = allowed ? allowed + r * k : nullptr;
        T mx = -std::numeric_limits<T>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            if (!ok || ok[c]) mx = std::max(mx, in[c]);
        }
        if (mx == -std::numeric_limits<T>::infinity()) {
            throw Error(std::string(name) + ": row " + std::to_string(r) + " has no allowed entry");
        }
        T total{0};
        for (std::size_t c = 0; c < k; ++c) {
            if (ok && !ok[c]) continue;
            o[c] = std::exp(in[c] - mx);
            total += o[c];
        }
        const T inv = T{1} / total;
        for (std::size_t c = 0; c < k; ++c) o[c] *= inv;
    }
    return finish(tape, std::move(out), tape.requires_grad(x),
                  [ix = x.id, n, k](Tape<T>& t, std::size_t self) {
                      const Tensor<T>& g = t.grad_mut(self);
                      const Tensor<T>& y = t.value(self);
                      Tensor<T>& gx = t.grad_mut(ix);
                      for (std::size_t r = 0; r < n; ++r) {
                          const T* yr = y.data() + r * k;
                          const T* gr = g.data() + r * k;
                          const T s = simd::dot(yr, gr, k);
                          T* out = gx.data() + r * k;
                          for (std::size_t c = 0; c < k; ++c) out[c] += yr[c] * (gr[c] - s);
                      }
                  },
                  name);
}

}  // namespace

template <typename T>
Var<T> softmax(Var<T> x) {
    return softmax_impl<T>(x, nullptr, "softmax");
}

template <typename T>
Var<T> masked_softmax(Var<T> x, std::span<const std::uint8_t> allowed) {
    if (allowed.size() != x.value().size()) {
        throw DimensionError("masked_softmax: mask size " + std::to_string(allowed.size()) + " vs scores " +
                             shape_string(x.value().shape()));
    }
    return softmax_impl<T>(x, allowed.data(), "masked_softmax");
}

template <typename T>
Var<T> layer_norm(Var<T> x, Var<T> gamma, Var<T> beta, T eps) {
    same_tape(x, gamma);
    same_tape(x, beta);
    Tape<T>& tape = *x.tape;
    const auto& xv = x.value();
    const std::size_t n = xv.rows(), d = xv.cols();
    if (d == 0) throw DimensionError("layer_norm: feature dimension must be >= 1");
    if (gamma.value().size() != d || beta.value().size() != d) {
        throw DimensionError("layer_norm: affine parameters must have " + std::to_string(d) + " entries");
    }
    Tensor<T> xhat(xv.shape());
    std::vector<T> inv_std(n);
    for (std::size_t r = 0; r < n; ++r) {
        const T* in = xv.data() + r * d;
        T mean{0};
        for (std::size_t c = 0; c < d; ++c) mean += in[c];
        mean /= static_cast<T>(d);
        T var{0};
        for (std::size_t c = 0; c < d; ++c) var += (in[c] - mean) * (in[c] - mean);
        var /= static_cast<T>(d);
        inv_std[r] = T{1} / std::sqrt(var + eps);
        for (std::size_t c = 0; c < d; ++c) xhat(r, c) = (in[c] - mean) * inv_std[r];
    }
    Tensor<T> out(xv.shape());
    const T* gm = gamma.value().data();
    const T* bt = beta.value().data();
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < d; ++c) out(r, c) = gm[c] * xhat(r, c) + bt[c];
    }
    const bool rg = tape.requires_grad(x) || tape.requires_grad(gamma) || tape.requires_grad(beta);
    return finish(tape, std::move(out), rg,
                  [ix = x.id, ig = gamma.id, ib = beta.id, n, d, xhat = std::move(xhat),
                   inv_std = std::move(inv_std)](Tape<T>& t, std::size_t self) {
                      const Tensor<T>& g = t.grad_mut(self);
                      const T* gm = t.value(ig).data();
                      if (t.requires_grad(ig)) {
                          T* gg = t.grad_mut(ig).data();
                          for (std::size_t r = 0; r < n; ++r)
                              for (std::size_t c = 0; c < d; ++c) gg[c] += g(r, c) * xhat(r, c);
                      }
                      if (t.requires_grad(ib)) {
                          T* gb = t.grad_mut(ib).data();
                          for (std::size_t r = 0; r < n; ++r) simd::axpy(T{1}, g.data() + r * d, gb, d);
                      }
                      if (t.requires_grad(ix)) {
                          Tensor<T>& gx = t.grad_mut(ix);
                          std::vector<T> dxhat(d);
                          for (std::size_t r = 0; r < n; ++r) {
                              T mean_d{0}, mean_dx{0};
                              for (std::size_t c = 0; c < d; ++c) {
                                  dxhat[c] = g(r, c) * gm[c];
                                  mean_d += dxhat[c];
                                  mean_dx += dxhat[c] * xhat(r, c);
                              }
                              mean_d /= static_cast<T>(d);
                              mean_dx /= static_cast<T>(d);
                              for (std::size_t c = 0; c < d; ++c) {
                                  gx(r, c) += inv_std[r] * (dxhat[c] - mean_d - xhat(r, c) * mean_dx);
                              }
                          }
                      }
                  },
                  "layer_norm");
}

template <typename T>
Var<T> slice_cols(Var<T> x, std::size_t begin, std::size_t count) {
    Tape<T>& tape = *x.tape;
    const auto& xv = x.value();
    require_2d(xv, "slice_cols");
    const std::size_t n = xv.shape()[0], d = xv.shape()[1];
    if (begin + count > d) throw DimensionError("slice_cols: range exceeds " + std::to_string(d) + " columns");
    Tensor<T> out({n, count});
    for (std::size_t r = 0; r < n; ++r) std::copy_n(xv.data() + r * d + begin, count, out.data() + r * count);
    return finish(tape, std::move(out), tape.requires_grad(x),
                  [ix = x.id, n, d, begin, count](Tape<T>& t, std::size_t self) {
                      const Tensor<T>& g = t.grad_mut(self);
                      T* gx = t.grad_mut(ix).data();
                      for (std::size_t r = 0; r < n; ++r)
                          simd::axpy(T{1}, g.data() + r * count, gx + r * d + begin, count);
                  },
                  "slice_cols");
}

template <typename T>
Var<T> concat_cols(const std::vector<Var<T>>& parts) {
    if (parts.empty()) throw DimensionError("concat_cols: no inputs");
    Tape<T>& tape = *parts.front().tape;
    const std::size_t n = parts.front().value().rows();
    std::vector<std::size_t> ids, widths;
    std::size_t total = 0;
    bool rg = false;
    for (const auto& p : parts) {
        if (p.tape != &tape) throw Error("vars belong to different tapes");
        require_2d(p.value(), "concat_cols");
        if (p.value().rows() != n) throw DimensionError("concat_cols: row counts differ");
        ids.push_back(p.id);
        widths.push_back(p.value().cols());
        total += p.value().cols();
        rg = rg || tape.requires_grad(p);
    }
    Tensor<T> out({n, total});
    std::size_t off = 0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const auto& v = parts[i].value();
        for (std::size_t r = 0; r < n; ++r) std::copy_n(v.data() + r * widths[i], widths[i], out.data() + r * total + off);
        off += widths[i];
    }
    return finish(tape, std::move(out), rg,
                  [ids = std::move(ids), widths = std::move(widths), n, total](Tape<T>& t, std::size_t self) {
                      const Tensor<T>& g = t.grad_mut(self);
                      std::size_t off = 0;
                      for (std::size_t i = 0; i < ids.size(); ++i) {
                          if (t.requires_grad(ids[i])) {
                              T* gp = t.grad_mut(ids[i]).data();
                              for (std::size_t r = 0; r < n; ++r)
                                  simd::axpy(T{1}, g.data() + r * total + off, gp + r * widths[i], widths[i]);
                          }
                          off += widths[i];
                      }
                  },
                  "concat_cols");
}

template <typename T>
Var<T> concat_rows(const std::vector<Var<T>>& parts) {
    if (parts.empty()) throw DimensionError("concat_rows: no inputs");
    Tape<T>& tape = *parts.front().tape;
    const std::size_t d = parts.front().value().cols();
    std::vector<std::size_t> ids;
    std::size_t total = 0;
    bool rg = false;
    for (const auto& p : parts) {
        if (p.tape != &tape) throw Error("vars belong to different tapes");
        if (p.value().cols() != d) throw DimensionError("concat_rows: column counts differ");
        ids.push_back(p.id);
        total += p.value().size();
        rg = rg || tape.requires_grad(p);
    }
    std::vector<T> data;
    data.reserve(total);
    for (const auto& p : parts) data.insert(data.end(), p.value().values().begin(), p.value().values().end());
    Tensor<T> out({total / d, d}, std::move(data));
    return finish(tape, std::move(out), rg,
                  [ids = std::move(ids)](Tape<T>& t, std::size_t self) {
                      const Tensor<T>& g = t.grad_mut(self);
                      std::size_t off = 0;
                      for (std::size_t id : ids) {
                          const std::size_t len = t.value(id).size();
                          if (t.requires_grad(id)) simd::axpy(T{1}, g.data() + off, t.grad_mut(id).data(), len);
                          off += len;
                      }
                  },
                  "concat_rows");
}

template <typename T>
Var<T> gather_rows(Var<T> table, std::span<const std::size_t> index) {
    Tape<T>& tape = *table.tape;
    const auto& tv = table.value();
    const std::size_t rows = tv.rows(), d = tv.cols();
    Tensor<T> out({index.size(), d});
    for (std::size_t i = 0; i < index.size(); ++i) {
        if (index[i] >= rows) {
            throw DimensionError("gather_rows: index " + std::to_string(index[i]) + " outside table of " +
                                 std::to_string(rows) + " rows");
        }
        std::copy_n(tv.data() + index[i] * d, d, out.data() + i * d);
    }
    return finish(tape, std::move(out), tape.requires_grad(table),
                  [it = table.id, idx = std::vector<std::size_t>(index.begin(), index.end()), d](Tape<T>& t,
                                                                                                std::size_t self) {
                      const Tensor<T>& g = t.grad_mut(self);
                      T* gt = t.grad_mut(it).data();
                      for (std::size_t i = 0; i < idx.size(); ++i) simd::axpy(T{1}, g.data() + i * d, gt + idx[i] * d, d);
                  },
                  "gather_rows");
}

template <typename T>
Var<T> scale_by_entry(Var<T> x, Var<T> w, std::size_t k) {
    same_tape(x, w);
    Tape<T>& tape = *x.tape;
    if (k >= w.value().size()) throw DimensionError("scale_by_entry: index out of range");
    const T s = w.value()[k];
    Tensor<T> out = x.value();
    for (auto& v : out.values()) v *= s;
    const bool rg = tape.requires_grad(x) || tape.requires_grad(w);
    return finish(tape, std::move(out), rg,
                  [ix = x.id, iw = w.id, k](Tape<T>& t, std::size_t self) {
                      const Tensor<T>& g = t.grad_mut(self);
                      if (t.requires_grad(ix)) simd::axpy(t.value(iw)[k], g.data(), t.grad_mut(ix).data(), g.size());
                      if (t.requires_grad(iw)) {
                          t.grad_mut(iw)[k] += simd::dot(g.data(), t.value(ix).data(), g.size());
                      }
                  },
                  "scale_by_entry");
}

template <typename T>
Var<T> mean_row_sq_error(Var<T> pred, const Tensor<T>& target) {
    Tape<T>& tape = *pred.tape;
    const auto& pv = pred.value();
    if (!pv.same_shape(target)) {
        throw DimensionError("mean_row_sq_error: " + shape_string(pv.shape()) + " vs " + shape_string(target.shape()));
    }
    const std::size_t m = pv.rows();
    if (m == 0) throw DimensionError("mean_row_sq_error: no rows");
    const T loss = simd::sum_sq_diff(pv.data(), target.data(), pv.size()) / static_cast<T>(m);
    return finish(tape, Tensor<T>({1}, {loss}), tape.requires_grad(pred),
                  [ip = pred.id, target, m](Tape<T>& t, std::size_t self) {
                      const T g = t.grad_mut(self)[0] * T{2} / static_cast<T>(m);
                      const Tensor<T>& p = t.value(ip);
                      T* gp = t.grad_mut(ip).data();
                      for (std::size_t i = 0; i < p.size(); ++i) gp[i] += g * (p[i] - target[i]);
                  },
                  "mean_row_sq_error");
}

template <typename T>
Var<T> sum(Var<T> x) {
    Tape<T>& tape = *x.tape;
    T total{0};
    for (const T v : x.value().values()) total += v;
    return finish(tape, Tensor<T>({1}, {total}), tape.requires_grad(x),
                  [ix = x.id](Tape<T>& t, std::size_t self) {
                      const T g = t.grad_mut(self)[0];
                      for (auto& v : t.grad_mut(ix).values()) v += g;
                  },
                  "sum");
}

#define GTM_INSTANTIATE_OPS(T)                                                                   \
    template Var<T> add<T>(Var<T>, Var<T>);                                                      \
    template Var<T> sub<T>(Var<T>, Var<T>);                                                      \
    template Var<T> scale<T>(Var<T>, T);                                                         \
    template Var<T> add_row<T>(Var<T>, Var<T>);                                                  \
    template Var<T> matmul<T>(Var<T>, Var<T>);                                                   \
    template Var<T> matmul_nt<T>(Var<T>, Var<T>);                                                \
    template Var<T> linear<T>(Var<T>, Var<T>);                                                    \
    template Var<T> linear<T>(Var<T>, Var<T>, Var<T>);                                            \
    template Var<T> softmax<T>(Var<T>);                                                          \
    template Var<T> masked_softmax<T>(Var<T>, std::span<const std::uint8_t>);                    \
    template Var<T> layer_norm<T>(Var<T>, Var<T>, Var<T>, T);                                    \
    template Var<T> slice_cols<T>(Var<T>, std::size_t, std::size_t);                            \
    template Var<T> concat_cols<T>(const std::vector<Var<T>>&);                                  \
    template Var<T> concat_rows<T>(const std::vector<Var<T>>&);                                  \
    template Var<T> gather_rows<T>(Var<T>, std::span<const std::size_t>);                        \
    template Var<T> scale_by_entry<T>(Var<T>, Var<T>, std::size_t);                              \
    template Var<T> mean_row_sq_error<T>(Var<T>, const Tensor<T>&);                              \
    template Var<T> sum<T>(Var<T>);

GTM_INSTANTIATE_OPS(float)
GTM_INSTANTIATE_OPS(double)

#undef GTM_INSTANTIATE_OPS

}  // namespace ops
}  // namespace gtm
