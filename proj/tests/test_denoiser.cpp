// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "styldiff/denoiser.hpp"
#include "styldiff/error.hpp"
#include "styldiff/ops.hpp"
#include "styldiff/toyworld.hpp"

namespace styldiff {
namespace {

namespace fs = std::filesystem;

DenoiserConfig small(int size = 16, int width = 4) {
    DenoiserConfig c;
    c.image_size = size;
    c.base_width = width;
    c.levels = 2;
    c.time_embed_dim = 16;
    c.seed = 21;
    return c;
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "styldiff_test_denoiser";
    fs::create_directories(dir);
    return dir / name;
}

bool same_params(const ParamSet& a, const ParamSet& b) {
    if (!a.aligned_with(b)) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!bit_equal(a.value(i), b.value(i))) return false;
    }
    return true;
}

TEST(DenoiserConfig, Validation) {
    DenoiserConfig c = small();
    EXPECT_NO_THROW(c.validate());
    c.image_size = 24;
    EXPECT_THROW(c.validate(), ConfigError);
    c = small();
    c.levels = 5;
    EXPECT_THROW(c.validate(), ConfigError);
    c = small();
    c.time_embed_dim = 7;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(UNet, OutputShapeMatchesInputAcrossSizes) {
    for (int size : {16, 32, 64}) {
        const UNetDenoiser net(small(size, 2));
        Rng rng(1);
        const NdArray x = rng.normal_array({3, static_cast<std::size_t>(size), static_cast<std::size_t>(size)});
        EXPECT_EQ(net.predict_noise(x, 10).shape(), x.shape()) << size;
    }
}

TEST(UNet, DeterministicForSeedAndInput) {
    const UNetDenoiser a(small()), b(small());
    EXPECT_TRUE(same_params(a.params(), b.params()));
    Rng rng(2);
    const NdArray x = rng.normal_array({2, 3, 16, 16});
    EXPECT_TRUE(bit_equal(a.predict_noise(x, 100), a.predict_noise(x, 100)));
    EXPECT_THROW(a.predict_noise(rng.normal_array({3, 32, 32}), 1), ShapeError);
}

TEST(UNet, BoundedAtInitialisation) {
    const UNetDenoiser net(small(32, 8));
    Rng rng(3);
    NdArray x = rng.normal_array({4, 3, 32, 32});
    x = clamp(x, -1.0, 1.0);
    for (int t : {1, 500, 1000}) EXPECT_LT(max_abs(net.predict_noise(x, t)), 1e3);
}

TEST(UNet, WeightGradientsMatchFiniteDifferences) {
    PrecisionScope f64(Precision::f64);
    UNetDenoiser net(small(16, 2));
    Rng rng(4);
    for (std::size_t i = 0; i < net.params().size(); ++i) {
        NdArray& p = net.params().value(i);
        p = axpby(1.0, p, 0.1, rng.normal_array(p.shape()));
    }
    const NdArray x = rng.normal_array({1, 3, 16, 16});
    const std::vector<int> t = {250};
    Tape tape;
    const BoundParams b(tape, net.params());
    const ParamSet g = grad(sum(net.forward(b, tape.constant(x), t)), b);
    const double h = 1e-6;
    int checked = 0;
    for (std::size_t i = 0; i < net.params().size(); i += 2) {
        const std::size_t k = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(net.params().value(i).size()) - 1));
        auto eval = [&](double d) {
            ParamSet ps = net.params();
            ps.value(i)[k] += d;
            Tape t2(Tape::Mode::inference);
            return sum(net.forward(BoundParams(t2, ps), t2.constant(x), t)).value().item();
        };
        const double numeric = (eval(h) - eval(-h)) / (2 * h);
        const double exact = g.value(i)[k];
        EXPECT_LE(std::abs(numeric - exact), 1e-5 * std::max(std::abs(exact), 1e-3)) << net.params().name(i);
        ++checked;
    }
    EXPECT_GT(checked, 5);
}

TEST(UNet, SaveLoadRoundTripIsBitExact) {
    UNetDenoiser net(small());
    Rng rng(5);
    for (std::size_t i = 0; i < net.params().size(); ++i) {
        NdArray v = axpby(1.0, net.params().value(i), 0.01, rng.normal_array(net.params().value(i).shape()));
        round_to_f32(v);
        net.params().value(i) = v;
    }
    const fs::path p = scratch("rt.sdfz");
    net.save(p);
    const UNetDenoiser back = UNetDenoiser::load(p, small());
    EXPECT_TRUE(same_params(net.params(), back.params()));
    EXPECT_EQ(back.config(), small());
    EXPECT_EQ(param_checksum(back.params()), param_checksum(net.params()));
}

TEST(UNet, CorruptOrMismatchedFilesAreRejected) {
    const UNetDenoiser net(small());
    const fs::path p = scratch("bad.sdfz");
    net.save(p);
    std::vector<char> bytes;
    {
        std::ifstream f(p, std::ios::binary);
        bytes.assign(std::istreambuf_iterator<char>(f), {});
    }
    auto write_variant = [&](const std::vector<char>& b) {
        std::ofstream f(p, std::ios::binary | std::ios::trunc);
        f.write(b.data(), static_cast<std::streamsize>(b.size()));
    };
    auto magic = bytes;
    magic[0] = 'X';
    write_variant(magic);
    EXPECT_THROW(UNetDenoiser::load(p), FormatError);
    write_variant({bytes.begin(), bytes.begin() + static_cast<long>(bytes.size() / 2)});
    EXPECT_THROW(UNetDenoiser::load(p), FormatError);
    write_variant(bytes);
    EXPECT_THROW(UNetDenoiser::load(p, small(32)), ConfigMismatchError);
}

TEST(Oracle, HandExample) {
    const NoiseSchedule s = NoiseSchedule::from_betas({0.5});
    const LinearGaussianOracle o(NdArray({1, 1, 1}, 0.0), NdArray({1, 1, 1}, 1.0), s);
    const NdArray x({1, 1, 1}, 1.0);
    EXPECT_NEAR(o.posterior_mean(x, 1)[0], std::sqrt(0.5), 1e-12);
    EXPECT_NEAR(o.predict_noise(x, 1)[0], (1.0 - std::sqrt(0.5) * std::sqrt(0.5)) / std::sqrt(0.5), 1e-12);
    EXPECT_THROW(o.predict_noise(x, 0), DomainError);
    EXPECT_THROW(LinearGaussianOracle(NdArray({1, 1, 1}, 0.0), NdArray({1, 1, 1}, 0.0), s), DomainError);
}

TEST(Oracle, PointMassPriorRecoversInjectedNoise) {
    const NoiseSchedule s = NoiseSchedule::linear(1000, 1e-4, 0.02);
    Rng rng(6);
    const NdArray mean = rng.normal_array({3, 4, 4});
    const LinearGaussianOracle o(mean, NdArray(mean.shape(), 1e-14), s);
    const NdArray eps = rng.normal_array(mean.shape());
    EXPECT_LE(max_abs(o.predict_noise(q_sample(mean, 400, eps, s), 400) - eps), 1e-6);
}

TEST(Oracle, NearlyCleanLevelIsFinite) {
    const NoiseSchedule s = NoiseSchedule::from_betas({1e-6});
    const LinearGaussianOracle o(NdArray({1, 1, 1}, 0.2), NdArray({1, 1, 1}, 0.5), s);
    const double a = o.predict_noise(NdArray({1, 1, 1}, 0.3), 1)[0];
    const double b = o.predict_noise(NdArray({1, 1, 1}, 0.3 + 1e-9), 1)[0];
    EXPECT_TRUE(std::isfinite(a));
    EXPECT_NEAR(a, b, 1e-5);
}

TEST(Oracle, PredictedX0IsThePosteriorMean) {
    const NoiseSchedule s = NoiseSchedule::linear(1000, 1e-4, 0.02);
    Rng rng(7);
    const NdArray mean = rng.normal_array({3, 4, 4});
    NdArray var(mean.shape());
    for (std::size_t i = 0; i < var.size(); ++i) var[i] = rng.uniform(0.05, 1.0);
    const LinearGaussianOracle o(mean, var, s);
    const NdArray x = rng.normal_array(mean.shape());
    for (int t : {1, 37, 601, 1000}) {
        const double ab = s.alpha_bar(t);
        const NdArray f = predict_x0(x, t, o.predict_noise(x, t), s);
        for (std::size_t i = 0; i < x.size(); ++i) {
            // Gaussian conditioning of x0 ~ N(m, v) on x = sqrt(ab) x0 + sqrt(1 - ab) e.
            const double gain = std::sqrt(ab) * var[i] / (ab * var[i] + 1.0 - ab);
            const double direct = mean[i] + gain * (x[i] - std::sqrt(ab) * mean[i]);
            EXPECT_NEAR(f[i], direct, 1e-10);
        }
    }
}

TEST(Pretrain, ZeroStepsLeavesParams) {
    UNetDenoiser net(small());
    const ParamSet before = net.params();
    PretrainOptions o;
    o.steps = 0;
    const auto data = gen_content(1, 2, 16);
    pretrain(net, data, NoiseSchedule::linear(1000, 1e-4, 0.02), o);
    EXPECT_TRUE(same_params(before, net.params()));
    o.steps = 1;
    EXPECT_THROW(pretrain(net, std::vector<NdArray>{}, NoiseSchedule::linear(1000, 1e-4, 0.02), o), DomainError);
}

TEST(Pretrain, LossFallsOnOneImage) {
    PrecisionScope f32(Precision::f32);
    UNetDenoiser net(small(16, 4));
    PretrainOptions o;
    o.steps = 500;
    o.batch = 8;
    o.lr = 1e-3;
    o.seed = 2;
    const auto data = gen_content(3, 1, 16);
    const PretrainResult r = pretrain(net, data, NoiseSchedule::linear(1000, 1e-4, 0.02), o);
    ASSERT_EQ(r.losses.size(), 500u);
    double first = 0, last = 0;
    for (int i = 0; i < 50; ++i) {
        first += r.losses[static_cast<std::size_t>(i)];
        last += r.losses[r.losses.size() - 1 - static_cast<std::size_t>(i)];
    }
    EXPECT_LT(last, first);
}

TEST(Pretrain, ResumeContinuesBitExactly) {
    PrecisionScope f32(Precision::f32);
    const NoiseSchedule s = NoiseSchedule::linear(1000, 1e-4, 0.02);
    const auto data = gen_content(4, 8, 16);
    PretrainOptions o;
    o.batch = 4;
    o.seed = 9;

    UNetDenoiser straight(small());
    o.steps = 6;
    pretrain(straight, data, s, o);

    UNetDenoiser split(small());
    o.steps = 3;
    const PretrainResult first = pretrain(split, data, s, o);
    const fs::path model = scratch("resume.sdfz"), state = scratch("resume.sdts");
    split.save(model);
    first.state.save(state, split.params());
    UNetDenoiser reloaded = UNetDenoiser::load(model, small());
    pretrain(reloaded, data, s, o, TrainingState::load(state, reloaded.params()));
    EXPECT_TRUE(same_params(straight.params(), reloaded.params()));
}

}  // namespace
}  // namespace styldiff
