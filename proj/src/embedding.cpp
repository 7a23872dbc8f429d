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

#include "gtm/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gtm {

RevinResult revin_normalize(std::span<const double> x, double gamma, double beta, double eps,
                            std::span<const std::uint8_t> observed) {
    if (!observed.empty() && observed.size() != x.size()) {
        throw DimensionError("revin_normalize: observed mask length differs from window length");
    }
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!observed.empty() && !observed[i]) continue;
        sum += x[i];
        ++n;
    }
    if (n < 2) throw ConfigError("revin_normalize: need at least 2 (observed) points, got " + std::to_string(n));
    RevinResult out;
    out.stats.mean = sum / static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!observed.empty() && !observed[i]) continue;
        const double d = x[i] - out.stats.mean;
        var += d * d;
    }
    var /= static_cast<double>(n);
    const double sd = std::sqrt(var);
    out.stats.degenerate = !(sd > eps);
    out.stats.stdev = out.stats.degenerate ? eps : sd;
    out.stats.gamma = gamma;
    out.stats.beta = beta;
    out.values.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        out.values[i] = (x[i] - out.stats.mean) / out.stats.stdev * gamma + beta;
    }
    return out;
}

std::vector<double> revin_denormalize(std::span<const double> y, const RevinStats& stats) {
    if (stats.gamma == 0.0) throw ConfigError("revin_denormalize: affine gamma is zero, normalization is not invertible");
    std::vector<double> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        out[i] = (y[i] - stats.beta) / stats.gamma * stats.stdev + stats.mean;
    }
    return out;
}

PatchMatrix patchify(std::span<const double> window, std::size_t patch_len) {
    if (patch_len == 0 || window.size() % patch_len != 0) {
        throw ConfigError("patch length " + std::to_string(patch_len) + " does not divide window length " +
                          std::to_string(window.size()));
    }
    PatchMatrix pm;
    pm.patches = Tensor<double>({window.size() / patch_len, patch_len},
                                std::vector<double>(window.begin(), window.end()));
    pm.window_len = window.size();
    return pm;
}

std::vector<PatchMatrix> window_and_patch(std::span<const double> series, std::size_t window_len, std::size_t stride,
                                          std::size_t patch_len, std::size_t channel) {
    if (patch_len == 0 || window_len % patch_len != 0) {
        throw ConfigError("patch length " + std::to_string(patch_len) + " does not divide window length " +
                          std::to_string(window_len));
    }
    if (stride == 0) throw ConfigError("window stride must be positive");
    if (series.size() < window_len) {
        throw ConfigError("series of length " + std::to_string(series.size()) + " is shorter than one window (" +
                          std::to_string(window_len) + ")");
    }
    std::vector<PatchMatrix> out;
    for (std::size_t s = 0; s + window_len <= series.size(); s += stride) {
        PatchMatrix pm = patchify(series.subspan(s, window_len), patch_len);
        pm.window_start = s;
        pm.channel = channel;
        pm.stride = stride;
        out.push_back(std::move(pm));
    }
    return out;
}

std::size_t SpanSet::masked_count() const {
    std::size_t n = 0;
    for (const auto& s : spans) n += s.length;
    return n;
}

void validate(const SpanSet& set, std::size_t num_patches) {
    if (set.spans.empty()) throw ConfigError("span set is empty");
    std::size_t prev_end = 0;
    for (std::size_t i = 0; i < set.spans.size(); ++i) {
        const Span& s = set.spans[i];
        if (s.length == 0) throw ConfigError("span " + std::to_string(i) + " is empty");
        if (i > 0 && s.start < prev_end) throw ConfigError("spans overlap or are unsorted at span " + std::to_string(i));
        if (s.start + s.length > num_patches) {
            throw ConfigError("span " + std::to_string(i) + " exceeds " + std::to_string(num_patches) + " patches");
        }
        prev_end = s.start + s.length;
    }
    if (set.order.size() != set.spans.size()) throw ConfigError("span order has the wrong length");
    std::vector<std::uint8_t> seen(set.spans.size(), 0);
    for (const std::size_t k : set.order) {
        if (k >= seen.size() || seen[k]) throw ConfigError("span order is not a permutation");
        seen[k] = 1;
    }
}

SpanSet make_span_set(std::vector<Span> spans) {
    SpanSet set;
    set.order.resize(spans.size());
    std::iota(set.order.begin(), set.order.end(), std::size_t{0});
    set.spans = std::move(spans);
    return set;
}

SpanSet sample_spans(std::size_t num_patches, const SpanSampling& sampling, bool tail_mode, Rng& rng) {
    if (num_patches < 2) throw ConfigError("span sampling needs at least 2 patches");
    if (!(sampling.mask_ratio > 0.0 && sampling.mask_ratio < 1.0)) {
        throw ConfigError("mask ratio must lie in (0, 1)");
    }
    if (sampling.min_len == 0 || sampling.min_len > sampling.max_len) {
        throw ConfigError("span length range must satisfy 1 <= min <= max");
    }
    const auto target = static_cast<std::size_t>(std::llround(sampling.mask_ratio * static_cast<double>(num_patches)));
    if (target == 0 || target >= num_patches) {
        throw ConfigError("mask ratio " + std::to_string(sampling.mask_ratio) + " is infeasible for " +
                          std::to_string(num_patches) + " patches");
    }
    if (tail_mode) return make_span_set({Span{num_patches - target, target}});

    std::uniform_int_distribution<std::size_t> len_dist(sampling.min_len, sampling.max_len);
    std::vector<std::size_t> lengths;
    std::size_t total = 0;
    while (total < target) {
        const std::size_t len = std::min(len_dist(rng), target - total);
        lengths.push_back(len);
        total += len;
    }
    // Non-adjacent placement needs (count - 1) separating patches.
    while (lengths.size() > 1 && num_patches - target < lengths.size() - 1) {
        const std::size_t last = lengths.back();
        lengths.pop_back();
        lengths.back() += last;
    }
    const std::size_t count = lengths.size();
    std::vector<std::size_t> gaps(count + 1, 0);
    for (std::size_t k = 1; k < count; ++k) gaps[k] = 1;
    std::uniform_int_distribution<std::size_t> gap_dist(0, count);
    for (std::size_t free = num_patches - target - (count - 1); free > 0; --free) ++gaps[gap_dist(rng)];

    std::vector<Span> spans;
    std::size_t pos = gaps[0];
    for (std::size_t k = 0; k < count; ++k) {
        spans.push_back({pos, lengths[k]});
        pos += lengths[k] + gaps[k + 1];
    }
    SpanSet set = make_span_set(std::move(spans));
    std::shuffle(set.order.begin(), set.order.end(), rng);
    return set;
}

std::vector<std::size_t> InfillingInstance::patch_target_rows() const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < target_is_end.size(); ++i) {
        if (!target_is_end[i]) rows.push_back(i);
    }
    return rows;
}

InfillingInstance build_infilling_instance(const PatchMatrix& pm, const SpanSet& set) {
    const std::size_t np = pm.count();
    const std::size_t lp = pm.patch_len();
    validate(set, np);

    InfillingInstance inst;
    inst.patch_len = lp;
    inst.spans = set;

    std::vector<std::vector<double>> rows;
    std::vector<std::size_t> mask_pos(set.spans.size());
    const std::vector<double> zeros(lp, 0.0);
    auto patch_row = [&](std::size_t p) {
        const auto r = pm.patches.row(p);
        return std::vector<double>(r.begin(), r.end());
    };

    std::size_t next_span = 0;
    for (std::size_t p = 0; p < np;) {
        if (next_span < set.spans.size() && set.spans[next_span].start == p) {
            mask_pos[next_span] = inst.kinds.size();
            inst.kinds.push_back(TokenKind::mask);
            rows.push_back(zeros);
            p += set.spans[next_span].length;
            ++next_span;
        } else {
            inst.kinds.push_back(TokenKind::patch);
            rows.push_back(patch_row(p));
            ++p;
        }
    }
    inst.part_a_len = inst.kinds.size();
    inst.pos1d.resize(inst.part_a_len);
    std::iota(inst.pos1d.begin(), inst.pos1d.end(), std::size_t{0});
    inst.pos2d.assign(inst.part_a_len, 0);

    std::vector<double> target_data;
    for (const std::size_t k : set.order) {
        const Span& s = set.spans[k];
        inst.span_lens.push_back(s.length);
        for (std::size_t j = 0; j <= s.length; ++j) {
            inst.kinds.push_back(j == 0 ? TokenKind::start : TokenKind::patch);
            rows.push_back(j == 0 ? zeros : patch_row(s.start + j - 1));
            inst.pos1d.push_back(mask_pos[k]);
            inst.pos2d.push_back(j + 1);
            const bool is_end = j == s.length;
            inst.target_is_end.push_back(is_end ? 1 : 0);
            const std::vector<double> tgt = is_end ? zeros : patch_row(s.start + j);
            target_data.insert(target_data.end(), tgt.begin(), tgt.end());
        }
    }

    const std::size_t n = inst.kinds.size();
    std::vector<double> payload;
    payload.reserve(n * lp);
    for (const auto& r : rows) payload.insert(payload.end(), r.begin(), r.end());
    inst.payload = Tensor<double>({n, lp}, std::move(payload));
    inst.targets = Tensor<double>({n - inst.part_a_len, lp}, std::move(target_data));
    inst.predict.assign(n, 0);
    std::fill(inst.predict.begin() + static_cast<std::ptrdiff_t>(inst.part_a_len), inst.predict.end(), 1);
    return inst;
}

InfillingInstance truncate_part_b(const InfillingInstance& inst, std::size_t part_b_len) {
    if (part_b_len > inst.part_b_len()) throw DimensionError("truncate_part_b: longer than the instance");
    InfillingInstance out = inst;
    const std::size_t n = inst.part_a_len + part_b_len;
    const std::size_t lp = inst.patch_len;
    out.kinds.resize(n);
    out.pos1d.resize(n);
    out.pos2d.resize(n);
    out.predict.resize(n);
    out.target_is_end.resize(part_b_len);
    out.payload = Tensor<double>({n, lp}, std::vector<double>(inst.payload.data(), inst.payload.data() + n * lp));
    out.targets = Tensor<double>({part_b_len, lp},
                                 std::vector<double>(inst.targets.data(), inst.targets.data() + part_b_len * lp));
    return out;
}

Tensor<double> reassemble_patches(const InfillingInstance& inst, std::size_t num_patches) {
    const std::size_t lp = inst.patch_len;
    Tensor<double> out({num_patches, lp});
    // Part-B offset of each span's first target row.
    std::vector<std::size_t> offset(inst.spans.spans.size());
    std::size_t row = 0;
    for (const std::size_t k : inst.spans.order) {
        offset[k] = row;
        row += inst.spans.spans[k].length + 1;
    }
    std::size_t p = 0;
    std::size_t next_span = 0;
    for (std::size_t a = 0; a < inst.part_a_len; ++a) {
        if (inst.kinds[a] == TokenKind::mask) {
            const Span& s = inst.spans.spans[next_span];
            for (std::size_t j = 0; j < s.length; ++j) {
                const auto src = inst.targets.row(offset[next_span] + j);
                std::copy(src.begin(), src.end(), out.row(p + j).begin());
            }
            p += s.length;
            ++next_span;
        } else {
            const auto src = inst.payload.row(a);
            std::copy(src.begin(), src.end(), out.row(p).begin());
            ++p;
        }
    }
    if (p != num_patches) throw DimensionError("reassemble_patches: instance covers a different patch count");
    return out;
}

template <typename T>
Var<T> embed(Tape<T>& tape, const InfillingInstance& inst, EmbeddingParams<T>& params) {
    const std::size_t n = inst.n_tokens();
    const std::size_t d = params.w_emb.value.cols();
    if (inst.patch_len != params.w_emb.value.rows()) {
        throw DimensionError("embed: patch length " + std::to_string(inst.patch_len) + " vs embedding input " +
                             std::to_string(params.w_emb.value.rows()));
    }
    const std::size_t maxpos = params.pos1d.value.rows();
    const std::size_t maxspan = params.pos2d.value.rows();
    std::vector<std::size_t> special(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (inst.pos1d[i] >= maxpos) {
            throw ConfigError("1-D position " + std::to_string(inst.pos1d[i]) + " exceeds table size " +
                              std::to_string(maxpos));
        }
        if (inst.pos2d[i] >= maxspan) {
            throw ConfigError("2-D position " + std::to_string(inst.pos2d[i]) + " exceeds table size " +
                              std::to_string(maxspan));
        }
        special[i] = static_cast<std::size_t>(inst.kinds[i]);
    }
    Var<T> x = tape.constant(inst.payload.template cast<T>());
    Var<T> h = ops::matmul(x, tape.param(params.w_emb));
    Var<T> bank = ops::concat_rows<T>({tape.constant(Tensor<T>({1, d})), tape.param(params.mask),
                                       tape.param(params.start), tape.param(params.end)});
    h = ops::add(h, ops::gather_rows(bank, std::span<const std::size_t>(special)));
    h = ops::add(h, ops::gather_rows(tape.param(params.pos1d), std::span<const std::size_t>(inst.pos1d)));
    h = ops::add(h, ops::gather_rows(tape.param(params.pos2d), std::span<const std::size_t>(inst.pos2d)));
    return h;
}

std::array<double, 5> GranularityQuintuple::features(GranularityScaling scaling) const {
    std::array<double, 5> f{};
    for (std::size_t i = 0; i < 5; ++i) {
        const auto v = static_cast<double>(q[i]);
        f[i] = scaling == GranularityScaling::log1p ? std::log1p(v) : v;
    }
    return f;
}

template <typename T>
Var<T> encode_granularity(Tape<T>& tape, const GranularityQuintuple& g, Parameter<T>& w_query,
                          GranularityScaling scaling) {
    if (w_query.value.dim() != 2 || w_query.value.rows() != 5) {
        throw DimensionError("granularity query weights must be [5, d_fk], got " + shape_string(w_query.value.shape()));
    }
    for (const auto v : g.q) {
        if (v < 0) throw ConfigError("granularity entries must be nonnegative");
    }
    const auto f = g.features(scaling);
    Tensor<T> row({1, 5});
    for (std::size_t i = 0; i < 5; ++i) row[i] = static_cast<T>(f[i]);
    return ops::matmul(tape.constant(std::move(row)), tape.param(w_query));
}

template Var<float> embed<float>(Tape<float>&, const InfillingInstance&, EmbeddingParams<float>&);
template Var<double> embed<double>(Tape<double>&, const InfillingInstance&, EmbeddingParams<double>&);
template Var<float> encode_granularity<float>(Tape<float>&, const GranularityQuintuple&, Parameter<float>&,
                                              GranularityScaling);
template Var<double> encode_granularity<double>(Tape<double>&, const GranularityQuintuple&, Parameter<double>&,
                                                GranularityScaling);

}  // namespace gtm
