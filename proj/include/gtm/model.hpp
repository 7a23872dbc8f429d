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

// Decoder-only backbone: embedding, N pre-norm layers of temporal attention
// followed by the frequency knowledge block, and one linear projection head
// shared by every task.

#include <cstdint>
#include <string>
#include <vector>

#include "gtm/attention.hpp"
#include "gtm/autograd.hpp"
#include "gtm/embedding.hpp"
#include "gtm/tensor.hpp"

namespace gtm {

struct ModelConfig {
    std::size_t d_model = 64;
    std::size_t n_layers = 2;
    std::size_t patch_len = 16;
    std::size_t n_heads = 4;
    std::size_t d_fk = 16;
    std::size_t maxpos = 512;
    std::size_t maxspan = 64;
    GranularityScaling scaling = GranularityScaling::log1p;
    double norm_eps = 1e-5;
    std::uint64_t seed = 0;

    /// Throws ConfigError on an inconsistent configuration.
    void validate() const;
    std::size_t bins() const { return d_model / 2 + 1; }
    bool operator==(const ModelConfig&) const = default;
};

template <typename T>
struct DecoderLayerParams {
    Parameter<T> attn_norm_gamma;  // [D]
    Parameter<T> attn_norm_beta;   // [D]
    TemporalAttentionParams<T> attn;
    Parameter<T> fourier_norm_gamma;  // [D]
    Parameter<T> fourier_norm_beta;   // [D]
    FourierBlockParams<T> fourier;
};

template <typename T>
class Model {
public:
    Model() = default;

    /// Random initialization from config.seed.
    static Model init(const ModelConfig& config);

    /// Every learnable tensor in a fixed order; names are stable.
    std::vector<Parameter<T>*> parameters();
    std::vector<const Parameter<T>*> parameters() const;

    /// Finds a parameter by name, nullptr when absent.
    Parameter<T>* find(const std::string& name);

    template <typename U>
    Model<U> cast() const;

    /// q_f for the quintuple, [1, d_fk].
    Var<T> granularity_query(Tape<T>& tape, const GranularityQuintuple& g);

    /// Embedding followed by all decoder layers, [n_tokens, D].
    Var<T> hidden(Tape<T>& tape, const InfillingInstance& inst, const GranularityQuintuple& g);

    /// One patch per Part-B token, [part_b_len, L_p].
    Var<T> forward(Tape<T>& tape, const InfillingInstance& inst, const GranularityQuintuple& g);

    /// forward() evaluated without keeping the tape.
    Tensor<T> predict(const InfillingInstance& inst, const GranularityQuintuple& g);

    ModelConfig config;
    EmbeddingParams<T> embedding;
    Parameter<T> w_query;  // [5, d_fk]
    std::vector<DecoderLayerParams<T>> layers;
    Parameter<T> head;  // [D, L_p]
};

/// H1 = H + Attn(LN(H)); H2 = H1 + Fourier(LN(H1)).
template <typename T>
Var<T> decoder_layer(Var<T> h, Var<T> q_f, const GlmMask& mask, DecoderLayerParams<T>& layer,
                     const ModelConfig& config);

/// Appends n_future generated patches to the context [N_c, L_p]. Each step
/// reruns the model on the tail-masked instance truncated after the last
/// generated token, so step t only sees the context and steps < t.
template <typename T>
Tensor<double> generate_autoregressive(Model<T>& model, const Tensor<double>& context, std::size_t n_future,
                                       const GranularityQuintuple& g);

/// Tail-masked instance over context followed by n_future zero patches.
InfillingInstance tail_instance(const Tensor<double>& context, std::size_t n_future);

}  // namespace gtm
