// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "styldiff/denoiser.hpp"
#include "styldiff/disentangle.hpp"
#include "styldiff/error.hpp"
#include "styldiff/ops.hpp"
#include "styldiff/params.hpp"
#include "styldiff/rng.hpp"

namespace styldiff {
namespace {

ParamSet one_param(const std::string& name, NdArray v) {
    ParamSet p;
    p.add(name, std::move(v));
    return p;
}

TEST(Grad, SumOfSquares) {
    const ParamSet ps = one_param("p", NdArray({3}, {1, 2, 3}));
    Tape tape;
    const BoundParams b(tape, ps);
    const ParamSet g = grad(sum(b["p"] * b["p"]), b);
    EXPECT_EQ(g.at("p").shape(), Shape{3});
    EXPECT_DOUBLE_EQ(g.at("p")[0], 2.0);
    EXPECT_DOUBLE_EQ(g.at("p")[1], 4.0);
    EXPECT_DOUBLE_EQ(g.at("p")[2], 6.0);
}

TEST(Grad, UnusedParamsGetZerosOrErrorInStrictMode) {
    ParamSet ps = one_param("used", NdArray({2}, {1, 1}));
    ps.add("unused", NdArray({2}, {5, 5}));
    {
        Tape tape;
        const BoundParams b(tape, ps);
        const ParamSet g = grad(sum(b["used"]), b);
        EXPECT_EQ(max_abs(g.at("unused")), 0.0);
    }
    Tape tape;
    const BoundParams b(tape, ps);
    EXPECT_THROW(grad(sum(b["used"]), b, GradMode::strict), DomainError);
}

TEST(Grad, ConstantLossGivesZeroGradients) {
    const ParamSet ps = one_param("p", NdArray({2}, {1, 2}));
    Tape tape;
    const BoundParams b(tape, ps);
    const ParamSet g = grad(sum(tape.constant(NdArray({2}, {3, 4}))), b);
    EXPECT_EQ(max_abs(g.at("p")), 0.0);
}

TEST(Grad, NonScalarLossIsRejected) {
    const ParamSet ps = one_param("p", NdArray({2}, {1, 2}));
    Tape tape;
    const BoundParams b(tape, ps);
    EXPECT_THROW(grad(b["p"] * b["p"], b), ShapeError);
}

// L_SD through a two-parameter denoiser: the predicted x0 of one reverse
// step is pushed through the projector.
TEST(Grad, DisentanglementLossThroughAffineDenoiserMatchesFiniteDifferences) {
    PrecisionScope f64(Precision::f64);
    const NoiseSchedule sched = NoiseSchedule::linear(100, 1e-4, 0.02);
    Rng rng(12);
    const NdArray x_t = rng.normal_array({1, 3, 8, 8});
    const NdArray cc = rng.normal_array({3, 8, 8}), sc = rng.normal_array({3, 8, 8}), st = rng.normal_array({3, 8, 8});
    const Projector proj;
    AffineDenoiser den(0.3, -0.1);
    const std::vector<int> t = {40};

    auto loss_at = [&](const ParamSet& ps, Tape& tape, const BoundParams& b) {
        const Var x = tape.constant(x_t);
        const Var x0 = predict_x0(x, t[0], den.forward(b, x, t), sched);
        (void)ps;
        return loss_sd(proj, cc, x0, sc, st, LossWeights{}).total;
    };
    Tape tape;
    const BoundParams b(tape, den.params());
    const ParamSet g = grad(loss_at(den.params(), tape, b), b);

    const double h = 1e-5;
    for (std::size_t i = 0; i < den.params().size(); ++i) {
        auto eval = [&](double delta) {
            ParamSet ps = den.params();
            ps.value(i)[0] += delta;
            Tape t2(Tape::Mode::inference);
            const BoundParams b2(t2, ps);
            return loss_at(ps, t2, b2).value().item();
        };
        const double numeric = (eval(h) - eval(-h)) / (2 * h);
        const double exact = g.value(i)[0];
        EXPECT_LE(std::abs(numeric - exact), 1e-6 * std::max(std::abs(exact), 1e-8)) << den.params().name(i);
    }
}

TEST(Adam, ZeroGradientLeavesParamsAndAdvancesStep) {
    ParamSet ps = one_param("p", NdArray({2}, {0.5, -1.5}));
    AdamState st = make_adam_state(ps);
    adam_step(ps, one_param("p", NdArray({2}, 0.0)), st, 0.1);
    EXPECT_EQ(st.step, 1);
    EXPECT_EQ(ps.at("p")[0], 0.5);
    EXPECT_EQ(ps.at("p")[1], -1.5);
}

TEST(Adam, FirstStepMovesByLearningRate) {
    ParamSet ps = one_param("p", NdArray::scalar(0.0));
    AdamState st = make_adam_state(ps);
    adam_step(ps, one_param("p", NdArray::scalar(1.0)), st, 0.1);
    // m_hat = 1, v_hat = 1: the step is lr / (1 + eps).
    EXPECT_NEAR(ps.at("p").item(), -0.1 / (1.0 + 1e-8), 1e-15);
}

TEST(Adam, RepeatedStepsDecreaseMonotonically) {
    ParamSet ps = one_param("p", NdArray::scalar(0.0));
    AdamState st = make_adam_state(ps);
    double prev = 0.0;
    for (int i = 0; i < 5; ++i) {
        adam_step(ps, one_param("p", NdArray::scalar(1.0)), st, 0.1);
        EXPECT_LT(ps.at("p").item(), prev);
        prev = ps.at("p").item();
    }
    EXPECT_EQ(st.step, 5);
}

TEST(Adam, ZeroLearningRateIsIdentity) {
    Rng rng(4);
    ParamSet ps = one_param("w", rng.normal_array({4, 3}));
    const NdArray before = ps.at("w");
    AdamState st = make_adam_state(ps);
    for (int i = 0; i < 3; ++i) adam_step(ps, one_param("w", rng.normal_array({4, 3})), st, 0.0);
    EXPECT_TRUE(bit_equal(before, ps.at("w")));
}

TEST(Adam, RejectsMismatchedOrNonFiniteGradients) {
    ParamSet ps = one_param("p", NdArray({2}, {0, 0}));
    AdamState st = make_adam_state(ps);
    EXPECT_THROW(adam_step(ps, one_param("p", NdArray({3}, 0.0)), st, 0.1), ShapeError);
    EXPECT_THROW(adam_step(ps, one_param("q", NdArray({2}, 0.0)), st, 0.1), ShapeError);
    NdArray bad({2}, 0.0);
    bad[1] = std::nan("");
    ParamSet g;
    g.add("p", bad);
    EXPECT_THROW(adam_step(ps, g, st, 0.1), NonFiniteError);
}

TEST(ParamSet, NamesAreUniqueAndOrdered) {
    ParamSet ps;
    ps.add("b", NdArray({1}));
    ps.add("a", NdArray({2}));
    EXPECT_THROW(ps.add("a", NdArray({1})), DomainError);
    EXPECT_EQ(ps.name(0), "b");
    EXPECT_EQ(ps.name(1), "a");
    EXPECT_EQ(ps.index_of("a"), 1u);
    EXPECT_EQ(ps.total_elements(), 3u);
}

TEST(ParamSet, F32StorageRoundsValues) {
    ParamSet ps;
    ps.add("p", NdArray::scalar(0.1));
    ps.set_storage(Precision::f32);
    EXPECT_EQ(ps.at("p").item(), static_cast<double>(0.1f));
    ps.add("q", NdArray::scalar(1.0 / 3.0));
    EXPECT_EQ(ps.at("q").item(), static_cast<double>(1.0f / 3.0f));
}

}  // namespace
}  // namespace styldiff
