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

// Input pipeline: instance normalization, windowing and patching of one
// channel, span sampling, blank-infilling instance layout, and the token
// embedding that feeds the decoder.

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "gtm/autograd.hpp"
#include "gtm/tensor.hpp"

namespace gtm {

using Rng = std::mt19937_64;

// ---------------------------------------------------------------------------
// Reversible instance normalization

struct RevinStats {
    double mean = 0.0;
    double stdev = 1.0;
    double gamma = 1.0;
    double beta = 0.0;
    /// Window variance fell below eps; stdev was floored to eps.
    bool degenerate = false;
};

struct RevinResult {
    std::vector<double> values;
    RevinStats stats;
};

/// (x - mean) / stdev * gamma + beta. When `observed` is non-empty the
/// statistics use only points flagged 1 (unobserved points still get mapped).
RevinResult revin_normalize(std::span<const double> x, double gamma = 1.0, double beta = 0.0, double eps = 1e-5,
                            std::span<const std::uint8_t> observed = {});

/// Exact inverse of revin_normalize. Throws ConfigError when gamma == 0.
std::vector<double> revin_denormalize(std::span<const double> y, const RevinStats& stats);

// ---------------------------------------------------------------------------
// Windows and patches

struct PatchMatrix {
    Tensor<double> patches;  // [N_p, L_p]
    std::size_t window_start = 0;
    std::size_t channel = 0;
    std::size_t stride = 0;
    std::size_t window_len = 0;

    std::size_t count() const { return patches.rows(); }
    std::size_t patch_len() const { return patches.cols(); }
};

/// Splits `window` into window.size() / patch_len contiguous patches.
PatchMatrix patchify(std::span<const double> window, std::size_t patch_len);

/// Window i covers [i * stride, i * stride + window_len) of one channel.
std::vector<PatchMatrix> window_and_patch(std::span<const double> series, std::size_t window_len, std::size_t stride,
                                          std::size_t patch_len, std::size_t channel = 0);

// ---------------------------------------------------------------------------
// Spans

struct Span {
    std::size_t start = 0;   // first patch
    std::size_t length = 0;  // patches

    bool operator==(const Span&) const = default;
};

struct SpanSet {
    std::vector<Span> spans;         // sorted by start
    std::vector<std::size_t> order;  // order[k] = span emitted k-th in the generated part

    std::size_t masked_count() const;
};

/// Throws ConfigError unless spans are sorted, nonempty, disjoint, inside
/// [0, num_patches), and `order` is a permutation.
void validate(const SpanSet& spans, std::size_t num_patches);

/// Identity order over the given spans.
SpanSet make_span_set(std::vector<Span> spans);

struct SpanSampling {
    double mask_ratio = 0.25;
    std::size_t min_len = 1;
    std::size_t max_len = 3;
};

/// Draws round(mask_ratio * num_patches) masked patches as disjoint,
/// non-adjacent spans with lengths uniform in [min_len, max_len] (the last one
/// clipped), then a random order. Tail mode masks one run ending at the last
/// patch.
SpanSet sample_spans(std::size_t num_patches, const SpanSampling& sampling, bool tail_mode, Rng& rng);

// ---------------------------------------------------------------------------
// Blank-infilling instance

enum class TokenKind : std::uint8_t { patch, mask, start, end };

/// Token layout [corrupted context | START span ... | START span ...].
///
/// Part A is the patch sequence with every span replaced by one MASK. Part B
/// holds, for each span in `spans.order`, a START token followed by the span's
/// patches; its targets are the span's patches followed by END. Every Part-B
/// token shares the 1-D position of its span's MASK and counts 1..len+1 on the
/// 2-D axis; Part A has 2-D position 0.
struct InfillingInstance {
    std::size_t patch_len = 0;
    std::size_t part_a_len = 0;
    std::vector<TokenKind> kinds;
    Tensor<double> payload;  // [n_tokens, L_p], zero rows for special tokens
    std::vector<std::size_t> pos1d;
    std::vector<std::size_t> pos2d;
    std::vector<std::uint8_t> predict;  // 1 on Part B
    std::vector<std::size_t> span_lens;  // patches per span, in Part-B order
    Tensor<double> targets;              // [part_b_len, L_p], zero rows for END
    std::vector<std::uint8_t> target_is_end;
    SpanSet spans;

    std::size_t n_tokens() const { return kinds.size(); }
    std::size_t part_b_len() const { return kinds.size() - part_a_len; }
    /// Part-B rows that carry a numeric patch target.
    std::vector<std::size_t> patch_target_rows() const;
};

InfillingInstance build_infilling_instance(const PatchMatrix& patches, const SpanSet& spans);

/// Keeps Part A and the first `part_b_len` Part-B tokens (and their targets).
InfillingInstance truncate_part_b(const InfillingInstance& inst, std::size_t part_b_len);

/// Reassembles the original patch matrix from Part A and the Part-B targets.
Tensor<double> reassemble_patches(const InfillingInstance& inst, std::size_t num_patches);

// ---------------------------------------------------------------------------
// Embedding

template <typename T>
struct EmbeddingParams {
    Parameter<T> w_emb;   // [L_p, D]
    Parameter<T> pos1d;   // [maxpos, D]
    Parameter<T> pos2d;   // [maxspan, D]
    Parameter<T> mask;    // [1, D]
    Parameter<T> start;   // [1, D]
    Parameter<T> end;     // [1, D]
};

/// H = payload * W_emb (+ special vector on MASK/START/END rows) + pos1d + pos2d.
template <typename T>
Var<T> embed(Tape<T>& tape, const InfillingInstance& inst, EmbeddingParams<T>& params);

// ---------------------------------------------------------------------------
// Sampling granularity

enum class GranularityScaling : std::uint8_t { log1p, raw };

/// [day, hour, minute, second, millisecond] of the sampling interval.
struct GranularityQuintuple {
    std::array<std::int64_t, 5> q{};

    std::array<double, 5> features(GranularityScaling scaling) const;
    bool operator==(const GranularityQuintuple&) const = default;
};

/// q_f = features(g) * W_f^Q, a [1, d_fk] row.
template <typename T>
Var<T> encode_granularity(Tape<T>& tape, const GranularityQuintuple& g, Parameter<T>& w_query,
                          GranularityScaling scaling);

}  // namespace gtm
