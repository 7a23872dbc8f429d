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

#include "gtm/model.hpp"

#include <cmath>

#include "gtm/spectral.hpp"

namespace gtm {

void ModelConfig::validate() const {
    if (!spectral::is_power_of_two(d_model) || d_model < 2) {
        throw ConfigError("model width must be a power of two >= 2, got " + std::to_string(d_model));
    }
    if (n_heads == 0 || d_model % n_heads != 0) {
        throw ConfigError("model width " + std::to_string(d_model) + " is not divisible by " +
                          std::to_string(n_heads) + " heads");
    }
    if (patch_len == 0) throw ConfigError("patch length must be positive");
    if (d_fk == 0) throw ConfigError("granularity key width must be positive");
    if (maxpos == 0) throw ConfigError("1-D position table must be nonempty");
    if (maxspan < 3) throw ConfigError("2-D position table needs at least 3 rows");
    if (!(norm_eps > 0.0)) throw ConfigError("norm eps must be positive");
}

namespace {

template <typename T>
Parameter<T> gaussian(std::string name, std::vector<std::size_t> shape, Rng& rng, double stddev) {
    return Parameter<T>(std::move(name), Tensor<T>::randn(std::move(shape), rng, static_cast<T>(stddev)));
}

template <typename T>
Parameter<T> filled(std::string name, std::vector<std::size_t> shape, T value) {
    return Parameter<T>(std::move(name), Tensor<T>(std::move(shape), value));
}

}  // namespace

template <typename T>
Model<T> Model<T>::init(const ModelConfig& config) {
    config.validate();
    Rng rng(config.seed);
    const std::size_t d = config.d_model;
    const std::size_t lp = config.patch_len;
    const std::size_t b = config.bins();
    const double inv_d = 1.0 / std::sqrt(static_cast<double>(d));
    const double inv_b = 1.0 / std::sqrt(static_cast<double>(b));

    Model m;
    m.config = config;
    m.embedding.w_emb = gaussian<T>("embed.W_emb", {lp, d}, rng, 1.0 / std::sqrt(static_cast<double>(lp)));
    m.embedding.pos1d = gaussian<T>("embed.pos1d", {config.maxpos, d}, rng, 0.02);
    m.embedding.pos2d = gaussian<T>("embed.pos2d", {config.maxspan, d}, rng, 0.02);
    m.embedding.mask = gaussian<T>("embed.mask", {1, d}, rng, 0.1);
    m.embedding.start = gaussian<T>("embed.start", {1, d}, rng, 0.1);
    m.embedding.end = gaussian<T>("embed.end", {1, d}, rng, 0.1);
    m.w_query = gaussian<T>("granularity.W_query", {kGranularityModules, config.d_fk}, rng,
                            1.0 / std::sqrt(static_cast<double>(kGranularityModules)));
    m.layers.resize(config.n_layers);
    for (std::size_t l = 0; l < config.n_layers; ++l) {
        const std::string p = "layers." + std::to_string(l) + ".";
        auto& layer = m.layers[l];
        layer.attn_norm_gamma = filled<T>(p + "attn_norm.gamma", {d}, T{1});
        layer.attn_norm_beta = filled<T>(p + "attn_norm.beta", {d}, T{0});
        layer.attn.w_q = gaussian<T>(p + "attn.W_q", {d, d}, rng, inv_d);
        layer.attn.w_k = gaussian<T>(p + "attn.W_k", {d, d}, rng, inv_d);
        layer.attn.w_v = gaussian<T>(p + "attn.W_v", {d, d}, rng, inv_d);
        layer.attn.w_o = gaussian<T>(p + "attn.W_o", {d, d}, rng, inv_d);
        layer.fourier_norm_gamma = filled<T>(p + "fourier_norm.gamma", {d}, T{1});
        layer.fourier_norm_beta = filled<T>(p + "fourier_norm.beta", {d}, T{0});
        for (std::size_t i = 0; i < kGranularityModules; ++i) {
            layer.fourier.a[i] = gaussian<T>(p + "fourier.A." + std::to_string(i), {b, 1}, rng, inv_b);
            layer.fourier.bm[i] = gaussian<T>(p + "fourier.B." + std::to_string(i), {1, b}, rng, inv_b);
        }
        layer.fourier.w_full = gaussian<T>(p + "fourier.W_full", {b, b}, rng, inv_b);
        layer.fourier.k_f = gaussian<T>(p + "fourier.K_f", {kGranularityModules, config.d_fk}, rng, 1.0);
    }
    m.head = gaussian<T>("head.W_LinPoj", {d, lp}, rng, inv_d);
    return m;
}

template <typename T>
std::vector<Parameter<T>*> Model<T>::parameters() {
    std::vector<Parameter<T>*> out{&embedding.w_emb, &embedding.pos1d, &embedding.pos2d,
                                   &embedding.mask,  &embedding.start, &embedding.end,
                                   &w_query};
    for (auto& layer : layers) {
        out.insert(out.end(), {&layer.attn_norm_gamma, &layer.attn_norm_beta, &layer.attn.w_q, &layer.attn.w_k,
                               &layer.attn.w_v, &layer.attn.w_o, &layer.fourier_norm_gamma,
                               &layer.fourier_norm_beta});
        for (std::size_t i = 0; i < kGranularityModules; ++i) {
            out.push_back(&layer.fourier.a[i]);
            out.push_back(&layer.fourier.bm[i]);
        }
        out.push_back(&layer.fourier.w_full);
        out.push_back(&layer.fourier.k_f);
    }
    out.push_back(&head);
    return out;
}

template <typename T>
std::vector<const Parameter<T>*> Model<T>::parameters() const {
    auto mut = const_cast<Model*>(this)->parameters();
    return {mut.begin(), mut.end()};
}

template <typename T>
Parameter<T>* Model<T>::find(const std::string& name) {
    for (auto* p : parameters()) {
        if (p->name == name) return p;
    }
    return nullptr;
}

template <typename T>
template <typename U>
Model<U> Model<T>::cast() const {
    Model<U> out;
    out.config = config;
    out.layers.resize(layers.size());
    const auto src = parameters();
    const auto dst = out.parameters();
    for (std::size_t i = 0; i < src.size(); ++i) {
        *dst[i] = Parameter<U>(src[i]->name, src[i]->value.template cast<U>());
    }
    return out;
}

template <typename T>
Var<T> Model<T>::granularity_query(Tape<T>& tape, const GranularityQuintuple& g) {
    return encode_granularity(tape, g, w_query, config.scaling);
}

template <typename T>
Var<T> decoder_layer(Var<T> h, Var<T> q_f, const GlmMask& mask, DecoderLayerParams<T>& layer,
                     const ModelConfig& config) {
    Tape<T>& tape = *h.tape;
    const T eps = static_cast<T>(config.norm_eps);
    Var<T> x = ops::layer_norm(h, tape.param(layer.attn_norm_gamma), tape.param(layer.attn_norm_beta), eps);
    Var<T> h1 = ops::add(h, temporal_self_attention(x, layer.attn, mask, config.n_heads));
    Var<T> y = ops::layer_norm(h1, tape.param(layer.fourier_norm_gamma), tape.param(layer.fourier_norm_beta), eps);
    Var<T> gate = granularity_gate(q_f, tape.param(layer.fourier.k_f));
    return ops::add(h1, fourier_knowledge_attention(y, gate, layer.fourier));
}

template <typename T>
Var<T> Model<T>::hidden(Tape<T>& tape, const InfillingInstance& inst, const GranularityQuintuple& g) {
    if (inst.patch_len != config.patch_len) {
        throw DimensionError("instance patch length " + std::to_string(inst.patch_len) + " vs model " +
                             std::to_string(config.patch_len));
    }
    Var<T> h = embed(tape, inst, embedding);
    if (layers.empty()) return h;
    const GlmMask mask = build_glm_mask_for_length(inst.part_a_len, inst.part_b_len());
    Var<T> q_f = granularity_query(tape, g);
    for (auto& layer : layers) h = decoder_layer(h, q_f, mask, layer, config);
    return h;
}

template <typename T>
Var<T> Model<T>::forward(Tape<T>& tape, const InfillingInstance& inst, const GranularityQuintuple& g) {
    if (inst.part_b_len() == 0) throw ConfigError("instance has no tokens to predict");
    Var<T> h = hidden(tape, inst, g);
    std::vector<std::size_t> rows;
    rows.reserve(inst.part_b_len());
    for (std::size_t i = 0; i < inst.n_tokens(); ++i) {
        if (inst.predict[i]) rows.push_back(i);
    }
    Var<T> picked = ops::gather_rows(h, std::span<const std::size_t>(rows));
    return ops::matmul(picked, tape.param(head));
}

template <typename T>
Tensor<T> Model<T>::predict(const InfillingInstance& inst, const GranularityQuintuple& g) {
    Tape<T> tape;
    return forward(tape, inst, g).value();
}

InfillingInstance tail_instance(const Tensor<double>& context, std::size_t n_future) {
    if (n_future == 0) throw ConfigError("number of generated patches must be >= 1");
    if (context.dim() != 2 || context.rows() == 0) throw DimensionError("generation needs at least one context patch");
    const std::size_t nc = context.rows();
    const std::size_t lp = context.cols();
    std::vector<double> data(context.values());
    data.resize((nc + n_future) * lp, 0.0);
    PatchMatrix pm;
    pm.patches = Tensor<double>({nc + n_future, lp}, std::move(data));
    pm.window_len = (nc + n_future) * lp;
    return build_infilling_instance(pm, make_span_set({Span{nc, n_future}}));
}

template <typename T>
Tensor<double> generate_autoregressive(Model<T>& model, const Tensor<double>& context, std::size_t n_future,
                                       const GranularityQuintuple& g) {
    if (n_future + 1 >= model.config.maxspan) {
        throw ConfigError("cannot generate " + std::to_string(n_future) + " patches with a 2-D position table of " +
                          std::to_string(model.config.maxspan) + " rows");
    }
    InfillingInstance full = tail_instance(context, n_future);
    const std::size_t lp = full.patch_len;
    Tensor<double> out({n_future, lp});
    for (std::size_t t = 0; t < n_future; ++t) {
        const InfillingInstance step = truncate_part_b(full, t + 1);
        const Tensor<T> pred = model.predict(step, g);
        for (std::size_t c = 0; c < lp; ++c) out(t, c) = static_cast<double>(pred(t, c));
        if (t + 1 < full.part_b_len()) {
            auto dst = full.payload.row(full.part_a_len + t + 1);
            std::copy(out.row(t).begin(), out.row(t).end(), dst.begin());
        }
    }
    return out;
}

template class Model<float>;
template class Model<double>;
template Model<float> Model<float>::cast<float>() const;
template Model<double> Model<float>::cast<double>() const;
template Model<float> Model<double>::cast<float>() const;
template Model<double> Model<double>::cast<double>() const;
template Var<float> decoder_layer<float>(Var<float>, Var<float>, const GlmMask&, DecoderLayerParams<float>&,
                                         const ModelConfig&);
template Var<double> decoder_layer<double>(Var<double>, Var<double>, const GlmMask&, DecoderLayerParams<double>&,
                                           const ModelConfig&);
template Tensor<double> generate_autoregressive<float>(Model<float>&, const Tensor<double>&, std::size_t,
                                                       const GranularityQuintuple&);
template Tensor<double> generate_autoregressive<double>(Model<double>&, const Tensor<double>&, std::size_t,
                                                        const GranularityQuintuple&);

}  // namespace gtm
