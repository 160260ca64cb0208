// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#include "styldiff/disentangle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "styldiff/error.hpp"
#include "styldiff/ops.hpp"
#include "styldiff/params.hpp"
#include "styldiff/rng.hpp"

namespace styldiff {
namespace {

constexpr double kSlope = 0.2;
constexpr ConvGeometry kStage{2, 1, Padding::replicate};

Var flat(const Var& v) { return reshape(v, {v.value().size()}); }

}  // namespace

Projector::Projector(std::uint64_t seed) : seed_(seed) {
    Rng rng(seed);
    std::size_t in = 3;
    for (std::size_t s = 0; s < 3; ++s) {
        const std::size_t out = kStageChannels[s];
        NdArray w = rng.normal_array({out, in, 3, 3});
        const double std = std::sqrt(2.0 / static_cast<double>(in * 9));
        for (double& v : w.data()) v *= std;
        weights_[s] = std::move(w);
        in = out;
    }
}

std::vector<Var> Projector::features(const Var& x) const {
    const Shape& s = x.shape();
    if (s.size() != 4 || s[1] != 3) throw ShapeError("projector: expected [N, 3, H, W], got " + to_string(s));
    if (s[2] < kMinSide || s[3] < kMinSide) {
        throw DomainError("projector: image side must be at least " + std::to_string(kMinSide));
    }
    Tape& tape = x.tape();
    std::vector<Var> out;
    Var h = x;
    for (const auto& w : weights_) {
        h = leaky_relu(conv2d(h, tape.constant(w), kStage), kSlope);
        out.push_back(h);
    }
    return out;
}

Var Projector::embed(const Var& x) const {
    std::vector<Var> parts;
    for (const Var& f : features(x)) {
        const Var m = spatial_mean(f);
        const Var centred = channel_add(f, neg(m));
        parts.push_back(m);
        parts.push_back(sqrt(spatial_mean(square(centred))));
    }
    return concat_channels(parts);
}

NdArray Projector::embed(const NdArray& img) const {
    const bool single = img.rank() == 3;
    Tape tape(Tape::Mode::inference);
    const Var x = tape.constant(single ? img.reshape({1, img.extent(0), img.extent(1), img.extent(2)}) : img);
    const NdArray e = embed(x).value();
    return single ? e.reshape({kEmbeddingSize}) : e;
}

void LossWeights::validate() const {
    if (!(lambda_l1 >= 0.0 && lambda_dir >= 0.0)) throw ConfigError("loss weights must be non-negative");
}

NdArray pixel_style_direction(const NdArray& I, const NdArray& Ic) {
    require_same_shape(I, Ic, "pixel_style_direction");
    return I - Ic;
}

NdArray style_direction(const Projector& proj, const NdArray& I, const NdArray& Ic) {
    require_same_shape(I, Ic, "style_direction");
    return proj.embed(I) - proj.embed(Ic);
}

Var loss_l1(const Var& d_cs, const Var& d_s) {
    if (d_cs.value().size() != d_s.value().size()) throw ShapeError("loss_l1: length mismatch");
    return mean(abs(flat(d_cs) - flat(d_s)));
}

Var loss_dir(const Var& d_cs, const Var& d_s) {
    if (d_cs.value().size() != d_s.value().size()) throw ShapeError("loss_dir: length mismatch");
    return add_scalar(neg(cosine_similarity(d_cs, d_s)), 1.0);
}

SdLoss combine_sd(const Var& d_cs, const Var& d_s, const LossWeights& w) {
    w.validate();
    SdLoss out;
    out.l1 = loss_l1(d_cs, d_s);
    out.dir = loss_dir(d_cs, d_s);
    out.total = scale(out.l1, w.lambda_l1) + scale(out.dir, w.lambda_dir);
    return out;
}

SdLoss loss_sd(const Projector& proj, const NdArray& content_c, const Var& stylized, const NdArray& style_c,
               const NdArray& style, const LossWeights& w) {
    Tape& tape = stylized.tape();
    const NdArray d_s = style_direction(proj, style, style_c);
    const Var e_cs = flat(proj.embed(stylized));
    const Var d_cs = e_cs - tape.constant(proj.embed(content_c).reshape({Projector::kEmbeddingSize}));
    return combine_sd(d_cs, tape.constant(d_s), w);
}

Var loss_sr(const Var& reconstruction, const Var& style) {
    if (reconstruction.value().size() != style.value().size()) throw ShapeError("loss_sr: size mismatch");
    return mean(abs(flat(reconstruction) - flat(style)));
}

Var gram_distance(std::span<const Var> features_a, std::span<const Var> features_b) {
    if (features_a.size() != features_b.size() || features_a.empty()) throw ShapeError("gram: stage count mismatch");
    Var total;
    for (std::size_t s = 0; s < features_a.size(); ++s) {
        const Shape& sa = features_a[s].shape();
        if (sa != features_b[s].shape() || sa.size() != 4) throw ShapeError("gram: feature shape mismatch");
        const std::size_t C = sa[1], P = sa[2] * sa[3];
        const double norm = 1.0 / static_cast<double>(C * P);
        for (std::size_t n = 0; n < sa[0]; ++n) {
            auto gram = [&](const Var& f) {
                const Var F = reshape(sa[0] == 1 ? f : select_batch(f, n), {C, P});
                return scale(matmul(F, transpose(F)), norm);
            };
            const Var d = sum(square(gram(features_a[s]) - gram(features_b[s])));
            total = total.valid() ? total + d : d;
        }
    }
    return total;
}

Var gram_loss(const Projector& proj, const Var& a, const Var& b) {
    if (a.shape() != b.shape()) throw ShapeError("gram_loss: shape mismatch");
    const auto fa = proj.features(a);
    const auto fb = proj.features(b);
    return gram_distance(fa, fb);
}

double gram_loss(const Projector& proj, const NdArray& a, const NdArray& b) {
    require_same_shape(a, b, "gram_loss");
    Tape tape(Tape::Mode::inference);
    auto as_batch = [&](const NdArray& x) {
        return tape.constant(x.rank() == 3 ? x.reshape({1, x.extent(0), x.extent(1), x.extent(2)}) : x);
    };
    return gram_loss(proj, as_batch(a), as_batch(b)).value().item();
}

CollapseResult run_collapse_experiment(const CollapseOptions& options) {
    if (options.runs < 1 || options.steps < 0 || options.dims < 1) throw DomainError("collapse: bad options");
    const LossWeights l1_only{options.weights.lambda_l1, 0.0};
    CollapseResult result;
    for (int r = 0; r < options.runs; ++r) {
        Rng rng(derive_seed(options.seed, static_cast<std::uint64_t>(r)));
        const NdArray target = options.target_scale * rng.normal_array({options.dims});
        const NdArray start = options.init_scale * rng.normal_array({options.dims});
        for (const LossWeights* w : {&l1_only, &options.weights}) {
            ParamSet p;
            p.add("d_cs", start);
            AdamState state = make_adam_state(p);
            for (int step = 0; step < options.steps; ++step) {
                Tape tape;
                const BoundParams bound(tape, p);
                const SdLoss loss = combine_sd(bound["d_cs"], tape.constant(target), *w);
                adam_step(p, grad(loss.total, bound), state, options.lr);
            }
            (w == &l1_only ? result.cos_l1 : result.cos_combined).push_back(cosine(p.at("d_cs"), target));
        }
    }
    auto avg = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); };
    result.mean_l1 = avg(result.cos_l1);
    result.mean_combined = avg(result.cos_combined);
    result.min_combined = *std::min_element(result.cos_combined.begin(), result.cos_combined.end());
    return result;
}

}  // namespace styldiff
