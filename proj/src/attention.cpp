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

#include "gtm/attention.hpp"

#include <cmath>

#include "gtm/spectral.hpp"

namespace gtm {

GlmMask build_glm_mask_for_length(std::size_t part_a_len, std::size_t part_b_len) {
    if (part_a_len == 0) throw ConfigError("attention mask needs a nonempty context part");
    GlmMask m;
    m.n = part_a_len + part_b_len;
    m.part_a_len = part_a_len;
    m.allowed.assign(m.n * m.n, 0);
    for (std::size_t i = 0; i < m.n; ++i) {
        const std::size_t last = i < part_a_len ? part_a_len : i + 1;
        for (std::size_t j = 0; j < last; ++j) m.allowed[i * m.n + j] = 1;
    }
    return m;
}

GlmMask build_glm_mask(std::size_t part_a_len, std::span<const std::size_t> span_lens) {
    std::size_t part_b = 0;
    for (const std::size_t s : span_lens) part_b += s + 1;
    return build_glm_mask_for_length(part_a_len, part_b);
}

template <typename T>
Var<T> temporal_self_attention(Var<T> h, TemporalAttentionParams<T>& params, const GlmMask& mask,
                               std::size_t n_heads) {
    Tape<T>& tape = *h.tape;
    const std::size_t n = h.value().rows();
    const std::size_t d = h.value().cols();
    if (n_heads == 0 || d % n_heads != 0) {
        throw ConfigError("model width " + std::to_string(d) + " is not divisible by " + std::to_string(n_heads) +
                          " heads");
    }
    if (mask.n != n) {
        throw DimensionError("attention mask covers " + std::to_string(mask.n) + " tokens, input has " +
                             std::to_string(n));
    }
    const std::size_t dh = d / n_heads;
    const T inv_sqrt = T{1} / std::sqrt(static_cast<T>(dh));
    Var<T> q = ops::matmul(h, tape.param(params.w_q));
    Var<T> k = ops::matmul(h, tape.param(params.w_k));
    Var<T> v = ops::matmul(h, tape.param(params.w_v));
    std::vector<Var<T>> heads;
    heads.reserve(n_heads);
    for (std::size_t hd = 0; hd < n_heads; ++hd) {
        Var<T> qh = n_heads == 1 ? q : ops::slice_cols(q, hd * dh, dh);
        Var<T> kh = n_heads == 1 ? k : ops::slice_cols(k, hd * dh, dh);
        Var<T> vh = n_heads == 1 ? v : ops::slice_cols(v, hd * dh, dh);
        Var<T> scores = ops::scale(ops::matmul_nt(qh, kh), inv_sqrt);
        Var<T> weights = ops::masked_softmax(scores, std::span<const std::uint8_t>(mask.allowed));
        heads.push_back(ops::matmul(weights, vh));
    }
    Var<T> joined = n_heads == 1 ? heads.front() : ops::concat_cols(heads);
    return ops::matmul(joined, tape.param(params.w_o));
}

template <typename T>
Var<T> granularity_gate(Var<T> q_f, Var<T> k_f) {
    const auto& kv = k_f.value();
    if (kv.dim() != 2 || kv.rows() != kGranularityModules) {
        throw DimensionError("granularity keys must be [5, d_fk], got " + shape_string(kv.shape()));
    }
    if (q_f.value().size() != kv.cols()) {
        throw DimensionError("granularity query has " + std::to_string(q_f.value().size()) + " entries, keys have " +
                             std::to_string(kv.cols()));
    }
    const T inv_sqrt = T{1} / std::sqrt(static_cast<T>(kv.cols()));
    return ops::softmax(ops::scale(ops::matmul_nt(q_f, k_f), inv_sqrt));
}

template <typename T>
Var<T> fourier_knowledge_attention(Var<T> h, Var<T> gate, FourierBlockParams<T>& params) {
    Tape<T>& tape = *h.tape;
    const std::size_t d = h.value().cols();
    const std::size_t bins = spectral::bin_count(d);
    if (params.w_full.value.shape() != std::vector<std::size_t>{bins, bins}) {
        throw DimensionError("global frequency matrix is " + shape_string(params.w_full.value.shape()) +
                             ", expected [" + std::to_string(bins) + ", " + std::to_string(bins) + "]");
    }
    if (gate.value().size() != kGranularityModules) throw DimensionError("gate must hold 5 weights");
    Var<T> m = tape.param(params.w_full);
    for (std::size_t i = 0; i < kGranularityModules; ++i) {
        if (params.a[i].value.shape() != std::vector<std::size_t>{bins, 1} ||
            params.bm[i].value.shape() != std::vector<std::size_t>{1, bins}) {
            throw DimensionError("knowledge module " + std::to_string(i) + " factors do not match " +
                                 std::to_string(bins) + " bins");
        }
        Var<T> ab = ops::matmul(tape.param(params.a[i]), tape.param(params.bm[i]));
        m = ops::add(m, ops::scale_by_entry(ab, gate, i));
    }
    return spectral::irfft(spectral::apply_real_matrix(m, spectral::rfft(h)), d);
}

#define GTM_INSTANTIATE_ATTENTION(T)                                                                       \
    template Var<T> temporal_self_attention<T>(Var<T>, TemporalAttentionParams<T>&, const GlmMask&,        \
                                               std::size_t);                                               \
    template Var<T> granularity_gate<T>(Var<T>, Var<T>);                                                   \
    template Var<T> fourier_knowledge_attention<T>(Var<T>, Var<T>, FourierBlockParams<T>&);

GTM_INSTANTIATE_ATTENTION(float)
GTM_INSTANTIATE_ATTENTION(double)

#undef GTM_INSTANTIATE_ATTENTION

}  // namespace gtm
