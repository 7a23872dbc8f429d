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

// Reverse-mode differentiation over a linear tape.
//
// A Tape records every op of one forward pass. Parameters enter as leaves;
// Tape::backward() walks the tape once in reverse and adds the result into
// Parameter::grad. Gradients accumulate across tapes until the caller zeroes
// them, so a mini-batch is one tape per instance followed by one optimizer
// step. A tape is single-threaded; separate tapes over the same parameters
// must not run backward concurrently.

#include <cstdint>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "gtm/tensor.hpp"

namespace gtm {

template <typename T>
class Tape;

template <typename T>
struct Var {
    Tape<T>* tape = nullptr;
    std::size_t id = 0;

    const Tensor<T>& value() const { return tape->value(*this); }
    const std::vector<std::size_t>& shape() const { return value().shape(); }
};

template <typename T>
struct ComplexVar {
    Var<T> re;
    Var<T> im;
};

template <typename T>
class Tape {
public:
    using BackwardFn = std::function<void(Tape&, std::size_t self)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var<T> constant(Tensor<T> value);

    /// Leaf for a parameter. Repeated calls with the same parameter return the
    /// same node so its gradient is accumulated exactly once per backward.
    Var<T> param(Parameter<T>& p);

    /// Appends an op node. `backward` reads grad(self) and accumulates into
    /// the grads of its inputs through grad_mut(). It is dropped when no input
    /// requires a gradient.
    Var<T> push(Tensor<T> value, bool requires_grad, BackwardFn backward);

    const Tensor<T>& value(Var<T> v) const { return nodes_[v.id].value; }
    const Tensor<T>& value(std::size_t id) const { return nodes_[id].value; }
    bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
    bool requires_grad(Var<T> v) const { return nodes_[v.id].requires_grad; }

    /// Gradient buffer of a node, allocated as zeros on first access.
    Tensor<T>& grad_mut(std::size_t id);
    /// Gradient of a node after backward (zeros if nothing reached it).
    Tensor<T> grad(Var<T> v) const;

    /// Seeds d(root)/d(root) = 1 for a single-element root and propagates.
    void backward(Var<T> root);

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor<T> value;
        Tensor<T> grad;
        bool has_grad = false;
        bool requires_grad = false;
        Parameter<T>* param = nullptr;
        BackwardFn backward;
    };

    std::vector<Node> nodes_;
    std::unordered_map<const Parameter<T>*, std::size_t> param_nodes_;
};

namespace ops {

template <typename T>
Var<T> add(Var<T> a, Var<T> b);

template <typename T>
Var<T> sub(Var<T> a, Var<T> b);

template <typename T>
Var<T> scale(Var<T> a, T s);

/// a[n, d] + v broadcast over rows; v is [d] or [1, d].
template <typename T>
Var<T> add_row(Var<T> a, Var<T> v);

/// a[n, k] * b[k, m]. Zero entries of `a` are skipped, so a row of the
/// result never reads rows of `b` it has zero weight on.
template <typename T>
Var<T> matmul(Var<T> a, Var<T> b);

/// a[n, k] * b[m, k]^T -> [n, m].
template <typename T>
Var<T> matmul_nt(Var<T> a, Var<T> b);

/// x[n, d_in] * W[d_in, d_out] (+ b[d_out]).
template <typename T>
Var<T> linear(Var<T> x, Var<T> w);
template <typename T>
Var<T> linear(Var<T> x, Var<T> w, Var<T> b);

/// Softmax over the last dimension, max-subtracted.
template <typename T>
Var<T> softmax(Var<T> x);

/// Row softmax where allowed[r * cols + c] == 0 forces an exact zero weight.
/// A row with no allowed entry is an error.
template <typename T>
Var<T> masked_softmax(Var<T> x, std::span<const std::uint8_t> allowed);

/// Per-row standardization followed by gamma * xhat + beta.
template <typename T>
Var<T> layer_norm(Var<T> x, Var<T> gamma, Var<T> beta, T eps);

template <typename T>
Var<T> slice_cols(Var<T> x, std::size_t begin, std::size_t count);

template <typename T>
Var<T> concat_cols(const std::vector<Var<T>>& parts);

/// Stacks [r_i, d] blocks (or [d] vectors as single rows) into one matrix.
template <typename T>
Var<T> concat_rows(const std::vector<Var<T>>& parts);

/// out[i] = table[index[i]]; gradients scatter-add back into the table.
template <typename T>
Var<T> gather_rows(Var<T> table, std::span<const std::size_t> index);

/// x * w.flat[k] with gradient flowing to both.
template <typename T>
Var<T> scale_by_entry(Var<T> x, Var<T> w, std::size_t k);

/// (1/rows) * sum_r ||pred_r - target_r||^2, a [1] tensor.
template <typename T>
Var<T> mean_row_sq_error(Var<T> pred, const Tensor<T>& target);

template <typename T>
Var<T> sum(Var<T> x);

}  // namespace ops

}  // namespace gtm
