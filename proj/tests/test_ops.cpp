// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include "styldiff/error.hpp"
#include "styldiff/ops.hpp"
#include "styldiff/rng.hpp"

namespace styldiff {
namespace {

// Direct-summation convolution used as the reference for the GEMM kernels.
NdArray naive_conv(const NdArray& x, const NdArray& w, ConvGeometry g) {
    const std::size_t n = x.extent(0), c = x.extent(1), h = x.extent(2), wd = x.extent(3);
    const std::size_t o = w.extent(0), k = w.extent(2);
    const std::size_t oh = (h + 2 * g.pad - k) / g.stride + 1, ow = (wd + 2 * g.pad - k) / g.stride + 1;
    NdArray out({n, o, oh, ow});
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t oc = 0; oc < o; ++oc)
            for (std::size_t y = 0; y < oh; ++y)
                for (std::size_t xx = 0; xx < ow; ++xx) {
                    double acc = 0;
                    for (std::size_t ic = 0; ic < c; ++ic)
                        for (std::size_t i = 0; i < k; ++i)
                            for (std::size_t j = 0; j < k; ++j) {
                                long iy = static_cast<long>(y * g.stride + i) - static_cast<long>(g.pad);
                                long ix = static_cast<long>(xx * g.stride + j) - static_cast<long>(g.pad);
                                if (g.padding == Padding::replicate) {
                                    iy = std::clamp<long>(iy, 0, static_cast<long>(h) - 1);
                                    ix = std::clamp<long>(ix, 0, static_cast<long>(wd) - 1);
                                } else if (iy < 0 || ix < 0 || iy >= static_cast<long>(h) || ix >= static_cast<long>(wd)) {
                                    continue;
                                }
                                acc += x[((b * c + ic) * h + iy) * wd + ix] * w[((oc * c + ic) * k + i) * k + j];
                            }
                    out[((b * o + oc) * oh + y) * ow + xx] = acc;
                }
    return out;
}

// Scatter form of the transposed convolution.
NdArray naive_conv_transpose(const NdArray& x, const NdArray& w, std::size_t stride, std::size_t pad) {
    const std::size_t n = x.extent(0), c = x.extent(1), h = x.extent(2), wd = x.extent(3);
    const std::size_t o = w.extent(1), k = w.extent(2);
    const std::size_t oh = (h - 1) * stride + k - 2 * pad, ow = (wd - 1) * stride + k - 2 * pad;
    NdArray out({n, o, oh, ow});
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t ic = 0; ic < c; ++ic)
            for (std::size_t y = 0; y < h; ++y)
                for (std::size_t xx = 0; xx < wd; ++xx)
                    for (std::size_t oc = 0; oc < o; ++oc)
                        for (std::size_t i = 0; i < k; ++i)
                            for (std::size_t j = 0; j < k; ++j) {
                                const long oy = static_cast<long>(y * stride + i) - static_cast<long>(pad);
                                const long ox = static_cast<long>(xx * stride + j) - static_cast<long>(pad);
                                if (oy < 0 || ox < 0 || oy >= static_cast<long>(oh) || ox >= static_cast<long>(ow)) continue;
                                out[((b * o + oc) * oh + oy) * ow + ox] +=
                                    x[((b * c + ic) * h + y) * wd + xx] * w[((ic * o + oc) * k + i) * k + j];
                            }
    return out;
}

// Central-difference check of d sum(weights * f(inputs)) / d inputs.
void expect_gradients_match(const std::vector<NdArray>& inputs,
                            const std::function<Var(Tape&, const std::vector<Var>&)>& f, double tol = 1e-6) {
    Rng rng(99);
    NdArray probe;
    auto loss_of = [&](const std::vector<NdArray>& in, Tape& tape, std::vector<Var>& vars) {
        vars.clear();
        for (const auto& a : in) vars.push_back(tape.variable(a));
        const Var y = f(tape, vars);
        if (probe.empty()) probe = rng.normal_array(y.shape());
        return sum(y * tape.constant(probe));
    };
    Tape tape;
    std::vector<Var> vars;
    const Var loss = loss_of(inputs, tape, vars);
    tape.backward(loss);
    const double h = 1e-6;
    for (std::size_t a = 0; a < inputs.size(); ++a) {
        const NdArray analytic = tape.grad(vars[a]);
        for (std::size_t i = 0; i < inputs[a].size(); ++i) {
            auto plus = inputs, minus = inputs;
            plus[a][i] += h;
            minus[a][i] -= h;
            Tape tp, tm;
            std::vector<Var> vp, vm;
            const double numeric =
                (loss_of(plus, tp, vp).value().item() - loss_of(minus, tm, vm).value().item()) / (2 * h);
            EXPECT_NEAR(analytic[i], numeric, tol * std::max(1.0, std::abs(numeric)))
                << "input " << a << " element " << i;
        }
    }
}

struct ConvCase {
    std::size_t channels, height, width, out_channels, kernel;
    ConvGeometry geometry;
};

class ConvAgainstDirectSum : public ::testing::TestWithParam<ConvCase> {};

TEST_P(ConvAgainstDirectSum, ForwardMatchesAtBothPrecisions) {
    const ConvCase& c = GetParam();
    Rng rng(7);
    const NdArray x = rng.normal_array({2, c.channels, c.height, c.width});
    const NdArray w = rng.normal_array({c.out_channels, c.channels, c.kernel, c.kernel});
    const NdArray expected = naive_conv(x, w, c.geometry);
    for (Precision p : {Precision::f64, Precision::f32}) {
        PrecisionScope scope(p);
        Tape tape;
        const NdArray got = conv2d(tape.constant(x), tape.constant(w), c.geometry).value();
        ASSERT_EQ(got.shape(), expected.shape());
        const double tol = p == Precision::f64 ? 1e-12 : 1e-4;
        for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], expected[i], tol * 10);
    }
}

TEST_P(ConvAgainstDirectSum, GradientsMatchFiniteDifferences) {
    const ConvCase& c = GetParam();
    Rng rng(8);
    const NdArray x = rng.normal_array({2, c.channels, c.height, c.width});
    const NdArray w = rng.normal_array({c.out_channels, c.channels, c.kernel, c.kernel});
    expect_gradients_match({x, w}, [&](Tape&, const std::vector<Var>& v) { return conv2d(v[0], v[1], c.geometry); });
}

INSTANTIATE_TEST_SUITE_P(
    Geometries, ConvAgainstDirectSum,
    ::testing::Values(ConvCase{2, 5, 6, 3, 3, {1, 1, Padding::zeros}}, ConvCase{3, 7, 7, 2, 3, {2, 1, Padding::zeros}},
                      ConvCase{2, 6, 5, 2, 3, {2, 1, Padding::replicate}},
                      ConvCase{1, 4, 4, 2, 1, {1, 0, Padding::zeros}}, ConvCase{2, 8, 8, 2, 5, {3, 2, Padding::replicate}},
                      ConvCase{2, 5, 5, 1, 2, {1, 0, Padding::zeros}}));

TEST(ConvTranspose, MatchesScatterDefinition) {
    Rng rng(3);
    for (auto [stride, pad, k] : {std::tuple<std::size_t, std::size_t, std::size_t>{2, 0, 2}, {2, 1, 3}, {1, 0, 3}}) {
        const NdArray x = rng.normal_array({2, 3, 4, 5});
        const NdArray w = rng.normal_array({3, 2, k, k});
        Tape tape;
        const NdArray got = conv_transpose2d(tape.constant(x), tape.constant(w), stride, pad).value();
        const NdArray expected = naive_conv_transpose(x, w, stride, pad);
        ASSERT_EQ(got.shape(), expected.shape());
        for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], expected[i], 1e-12);
        expect_gradients_match({x, w}, [&](Tape&, const std::vector<Var>& v) {
            return conv_transpose2d(v[0], v[1], stride, pad);
        });
    }
}

TEST(ConvTranspose, IsAdjointOfStridedConv) {
    // <conv(x), y> == <x, conv_transpose(y)> for matching geometry.
    Rng rng(4);
    const NdArray x = rng.normal_array({1, 2, 8, 8});
    const NdArray w = rng.normal_array({3, 2, 2, 2});
    const NdArray y = rng.normal_array({1, 3, 4, 4});
    Tape tape;
    const NdArray cx = conv2d(tape.constant(x), tape.constant(w), {2, 0, Padding::zeros}).value();
    const NdArray ty = conv_transpose2d(tape.constant(y), tape.constant(w), 2, 0).value();
    EXPECT_NEAR(dot(cx, y), dot(x, ty), 1e-10);
}

TEST(ElementwiseOps, GradientsMatchFiniteDifferences) {
    Rng rng(5);
    const NdArray a = rng.normal_array({2, 3});
    NdArray b = rng.normal_array({2, 3});
    NdArray positive = a;
    for (double& v : positive.data()) v = std::abs(v) + 0.5;
    expect_gradients_match({a, b}, [](Tape&, const std::vector<Var>& v) { return v[0] * v[1] - v[0] + v[1]; });
    expect_gradients_match({a}, [](Tape&, const std::vector<Var>& v) { return leaky_relu(v[0], 0.2); });
    expect_gradients_match({a}, [](Tape&, const std::vector<Var>& v) { return abs(v[0]); });
    expect_gradients_match({a}, [](Tape&, const std::vector<Var>& v) { return square(v[0]); });
    expect_gradients_match({positive}, [](Tape&, const std::vector<Var>& v) { return sqrt(v[0]); });
    expect_gradients_match({a, b}, [](Tape&, const std::vector<Var>& v) { return cosine_similarity(v[0], v[1]); });
    expect_gradients_match({a, NdArray::scalar(1.5)}, [](Tape&, const std::vector<Var>& v) { return v[0] * v[1]; });
    expect_gradients_match({a, rng.normal_array({3, 4})},
                           [](Tape&, const std::vector<Var>& v) { return matmul(v[0], v[1]); });
    expect_gradients_match({a}, [](Tape&, const std::vector<Var>& v) { return transpose(v[0]); });
}

TEST(ChannelOps, GradientsMatchFiniteDifferences) {
    Rng rng(6);
    const NdArray x = rng.normal_array({2, 3, 2, 2});
    for (const Shape& cs : {Shape{3}, Shape{2, 3}}) {
        const NdArray c = rng.normal_array(cs);
        expect_gradients_match({x, c}, [](Tape&, const std::vector<Var>& v) { return channel_add(v[0], v[1]); });
        expect_gradients_match({x, c}, [](Tape&, const std::vector<Var>& v) { return channel_mul(v[0], v[1]); });
    }
    expect_gradients_match({x}, [](Tape&, const std::vector<Var>& v) { return spatial_mean(v[0]); });
    expect_gradients_match({rng.normal_array({2, 3}), rng.normal_array({2, 1})}, [](Tape&, const std::vector<Var>& v) {
        const Var parts[] = {v[0], v[1]};
        return concat_channels(parts);
    });
    expect_gradients_match({x}, [](Tape&, const std::vector<Var>& v) { return select_batch(v[0], 1); });
}

TEST(SqrtOp, GradientAtZeroIsZero) {
    Tape tape;
    const Var x = tape.variable(NdArray({2}, std::vector<double>{0.0, 4.0}));
    tape.backward(sum(sqrt(x)));
    const NdArray g = tape.grad(x);
    EXPECT_EQ(g[0], 0.0);
    EXPECT_DOUBLE_EQ(g[1], 0.25);
}

TEST(Tape, InferenceModeKeepsNoGradients) {
    Tape tape(Tape::Mode::inference);
    const Var x = tape.variable(NdArray({2}, 1.0));
    EXPECT_FALSE(x.requires_grad());
    EXPECT_FALSE((x * x).requires_grad());
}

TEST(Tape, NonFiniteResultIsRejected) {
    Tape tape;
    const Var x = tape.variable(NdArray({1}, 1e200));
    EXPECT_THROW(x * x, NonFiniteError);
}

TEST(Tape, OperandsFromDifferentTapesAreRejected) {
    Tape a, b;
    EXPECT_THROW(a.constant(NdArray({1}, 1.0)) + b.constant(NdArray({1}, 1.0)), Error);
}

TEST(Tape, SharedSubexpressionAccumulates) {
    Tape tape;
    const Var x = tape.variable(NdArray::scalar(3.0));
    const Var y = x * x + x;  // dy/dx = 2x + 1
    tape.backward(y);
    EXPECT_DOUBLE_EQ(tape.grad(x).item(), 7.0);
}

}  // namespace
}  // namespace styldiff
