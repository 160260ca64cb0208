// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "styldiff/error.hpp"
#include "styldiff/rng.hpp"
#include "styldiff/schedule.hpp"

namespace styldiff {
namespace {

TEST(LinearSchedule, Endpoints) {
    const NoiseSchedule s = NoiseSchedule::linear(1000, 1e-4, 0.02);
    EXPECT_EQ(s.steps(), 1000);
    EXPECT_DOUBLE_EQ(s.beta(1), 1e-4);
    EXPECT_DOUBLE_EQ(s.beta(1000), 0.02);
    EXPECT_EQ(s.alpha_bar(0), 1.0);
}

TEST(LinearSchedule, RejectsBadBounds) {
    EXPECT_THROW(NoiseSchedule::linear(10, 0.0, 0.0), DomainError);
    EXPECT_THROW(NoiseSchedule::linear(0, 1e-4, 0.02), DomainError);
    EXPECT_THROW(NoiseSchedule::linear(10, 0.02, 1e-4), DomainError);
    EXPECT_THROW(NoiseSchedule::linear(10, 1e-4, 1.0), DomainError);
}

TEST(Schedule, HandProduct) {
    const NoiseSchedule s = NoiseSchedule::from_betas({0.1, 0.2});
    EXPECT_NEAR(s.alpha_bar(1), 0.9, 1e-15);
    EXPECT_NEAR(s.alpha_bar(2), 0.72, 1e-15);
    EXPECT_NEAR(s.alpha(2), 0.8, 1e-15);
}

TEST(Schedule, AlphaBarDecreasesAndMatchesDirectProduct) {
    const NoiseSchedule s = NoiseSchedule::linear(1000, 1e-4, 0.02);
    long double prod = 1.0L;
    for (int t = 1; t <= 1000; ++t) {
        prod *= 1.0L - static_cast<long double>(s.beta(t));
        ASSERT_LT(s.alpha_bar(t), s.alpha_bar(t - 1));
        ASSERT_GT(s.alpha_bar(t), 0.0);
        EXPECT_LE(std::abs(static_cast<double>(prod) - s.alpha_bar(t)) / static_cast<double>(prod), 1e-12);
    }
}

TEST(Schedule, OutOfRangeIndicesThrow) {
    const NoiseSchedule s = NoiseSchedule::linear(10, 1e-4, 0.02);
    EXPECT_THROW(s.beta(0), DomainError);
    EXPECT_THROW(s.alpha_bar(11), DomainError);
    EXPECT_THROW(s.alpha_bar(-1), DomainError);
}

TEST(MakePlan, Examples) {
    EXPECT_EQ(make_plan(2, 601, 1000).steps, (std::vector<int>{0, 601}));
    EXPECT_EQ(make_plan(5, 601, 1000).steps, (std::vector<int>{0, 150, 301, 451, 601}));
    const TimestepPlan p = make_plan(40, 601, 1000);
    EXPECT_EQ(p.size(), 40u);
    EXPECT_EQ(p.steps.front(), 0);
    EXPECT_EQ(p.return_step(), 601);
}

TEST(MakePlan, DenseRequestsStillIncrease) {
    EXPECT_EQ(make_plan(4, 3, 10).steps, (std::vector<int>{0, 1, 2, 3}));
    EXPECT_THROW(make_plan(5, 3, 10), DomainError);
    EXPECT_THROW(make_plan(1, 3, 10), DomainError);
    EXPECT_THROW(make_plan(3, 11, 10), DomainError);
}

TEST(MakePlan, EveryDrawIsAValidPlan) {
    Rng rng(8);
    for (int i = 0; i < 2000; ++i) {
        const int total = static_cast<int>(rng.uniform_int(1, 1000));
        const int ret = static_cast<int>(rng.uniform_int(1, total));
        const int count = static_cast<int>(rng.uniform_int(2, ret + 1));
        const TimestepPlan p = make_plan(count, ret, total);
        ASSERT_EQ(p.size(), static_cast<std::size_t>(count));
        ASSERT_EQ(p.return_step(), ret);
        ASSERT_NO_THROW(validate_plan(p, total));
    }
}

TEST(ValidatePlan, RejectsBrokenPlans) {
    EXPECT_THROW(validate_plan({{0}}, 10), DomainError);
    EXPECT_THROW(validate_plan({{1, 5}}, 10), DomainError);
    EXPECT_THROW(validate_plan({{0, 5, 5}}, 10), DomainError);
    EXPECT_THROW(validate_plan({{0, 11}}, 10), DomainError);
}

}  // namespace
}  // namespace styldiff
