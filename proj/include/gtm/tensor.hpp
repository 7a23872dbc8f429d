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

#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gtm/errors.hpp"

namespace gtm {

/// Dense row-major tensor. Tokens are rows: a sequence of n vectors of width
/// d is a [n, d] tensor, and a learned map is applied as x * W with W stored
/// [d_in, d_out]. (Column-vector formulas such as Q = H^T W are the same maps
/// with the token axis moved to the front.)
template <typename T>
class Tensor {
public:
    using value_type = T;

    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape, T fill = T{0})
        : shape_(std::move(shape)), data_(count(shape_), fill) {}

    Tensor(std::vector<std::size_t> shape, std::vector<T> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (count(shape_) != data_.size()) {
            throw DimensionError("tensor data size " + std::to_string(data_.size()) +
                                 " does not match shape product " + std::to_string(count(shape_)));
        }
    }

    /// Builds a [rows, cols] matrix from nested initializer lists.
    static Tensor matrix(std::initializer_list<std::initializer_list<T>> rows) {
        const std::size_t r = rows.size();
        const std::size_t c = r ? rows.begin()->size() : 0;
        std::vector<T> data;
        data.reserve(r * c);
        for (const auto& row : rows) {
            if (row.size() != c) throw DimensionError("ragged matrix literal");
            data.insert(data.end(), row.begin(), row.end());
        }
        return Tensor({r, c}, std::move(data));
    }

    static Tensor vector(std::initializer_list<T> values) {
        return Tensor({values.size()}, std::vector<T>(values));
    }

    template <typename Rng>
    static Tensor randn(std::vector<std::size_t> shape, Rng& rng, T stddev = T{1}) {
        Tensor t(std::move(shape));
        std::normal_distribution<double> dist(0.0, static_cast<double>(stddev));
        for (auto& v : t.data_) v = static_cast<T>(dist(rng));
        return t;
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t dim() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    /// Product of all but the last dimension (1 for a vector).
    std::size_t rows() const {
        if (shape_.empty()) return 0;
        return data_.size() / shape_.back();
    }
    std::size_t cols() const { return shape_.empty() ? 0 : shape_.back(); }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }
    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

    std::span<T> row(std::size_t r) { return {data_.data() + r * cols(), cols()}; }
    std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols(), cols()}; }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::vector<T>& values() { return data_; }
    const std::vector<T>& values() const { return data_; }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    template <typename U>
    Tensor<U> cast() const {
        std::vector<U> out(data_.size());
        for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
        return Tensor<U>(shape_, std::move(out));
    }

    bool all_finite() const {
        for (const T v : data_) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    bool operator==(const Tensor& other) const = default;

private:
    static std::size_t count(const std::vector<std::size_t>& shape) {
        return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
    }

    std::vector<std::size_t> shape_;
    std::vector<T> data_;
};

std::string shape_string(const std::vector<std::size_t>& shape);

template <typename T>
void require_finite(const Tensor<T>& t, const std::string& where) {
    if (!t.all_finite()) throw NumericError("non-finite value produced by " + where);
}

/// Complex data as two real tensors of the same shape.
template <typename T>
struct ComplexTensor {
    Tensor<T> re;
    Tensor<T> im;

    ComplexTensor() = default;
    ComplexTensor(Tensor<T> real, Tensor<T> imag) : re(std::move(real)), im(std::move(imag)) {
        if (!re.same_shape(im)) throw DimensionError("complex tensor parts differ in shape");
    }

    const std::vector<std::size_t>& shape() const { return re.shape(); }
};

template <typename T>
struct Parameter {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;

    Parameter() = default;
    Parameter(std::string n, Tensor<T> v)
        : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

    void zero_grad() { grad = Tensor<T>(value.shape()); }
};

}  // namespace gtm
