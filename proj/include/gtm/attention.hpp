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

// Temporal self-attention under the blank-infilling mask and the
// frequency-domain knowledge block with granularity gating.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "gtm/autograd.hpp"
#include "gtm/tensor.hpp"

namespace gtm {

/// Row i may attend to column j iff allowed[i * n + j] == 1.
struct GlmMask {
    std::size_t n = 0;
    std::size_t part_a_len = 0;
    std::vector<std::uint8_t> allowed;

    bool at(std::size_t i, std::size_t j) const { return allowed[i * n + j] != 0; }
};

/// Part A attends bidirectionally to Part A; Part-B token j attends to all of
/// Part A and to Part-B tokens up to and including j. Each span of length s
/// contributes s + 1 Part-B tokens.
GlmMask build_glm_mask(std::size_t part_a_len, std::span<const std::size_t> span_lens);

/// Mask over an explicit Part-B length.
GlmMask build_glm_mask_for_length(std::size_t part_a_len, std::size_t part_b_len);

template <typename T>
struct TemporalAttentionParams {
    Parameter<T> w_q;  // [D, D]
    Parameter<T> w_k;  // [D, D]
    Parameter<T> w_v;  // [D, D]
    Parameter<T> w_o;  // [D, D]
};

template <typename T>
Var<T> temporal_self_attention(Var<T> h, TemporalAttentionParams<T>& params, const GlmMask& mask,
                               std::size_t n_heads);

constexpr std::size_t kGranularityModules = 5;

template <typename T>
struct FourierBlockParams {
    std::array<Parameter<T>, kGranularityModules> a;   // [B, 1]
    std::array<Parameter<T>, kGranularityModules> bm;  // [1, B]
    Parameter<T> w_full;                               // [B, B]
    Parameter<T> k_f;                                  // [5, d_fk]
};

/// softmax(q_f K_f^T / sqrt(d_fk)) as a [1, 5] row.
template <typename T>
Var<T> granularity_gate(Var<T> q_f, Var<T> k_f);

/// Z = rfft(H); out = irfft(Z (W_full + sum_i w_i A_i B_i)^T). The W_full
/// path is always active.
template <typename T>
Var<T> fourier_knowledge_attention(Var<T> h, Var<T> gate, FourierBlockParams<T>& params);

}  // namespace gtm
