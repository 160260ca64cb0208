// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "styldiff/denoiser.hpp"
#include "styldiff/diffusion.hpp"
#include "styldiff/disentangle.hpp"
#include "styldiff/metrics.hpp"
#include "styldiff/ops.hpp"
#include "styldiff/rng.hpp"
#include "styldiff/toyworld.hpp"

namespace styldiff {
namespace {

DenoiserConfig desk_config() {
    DenoiserConfig c;
    c.base_width = 8;
    c.levels = 2;
    c.time_embed_dim = 64;
    c.seed = 3;
    return c;
}

const NoiseSchedule& desk_schedule() {
    static const NoiseSchedule s = NoiseSchedule::linear(1000, 1e-4, 0.02);
    return s;
}

// 3x3 convolution, forward only; arg is the channel count.
void BM_Conv3x3(benchmark::State& state) {
    PrecisionScope f32(Precision::f32);
    const auto ch = static_cast<std::size_t>(state.range(0));
    Rng rng(1);
    const NdArray x = rng.normal_array({16, ch, 32, 32});
    const NdArray w = rng.normal_array({ch, ch, 3, 3});
    for (auto _ : state) {
        Tape tape(Tape::Mode::inference);
        benchmark::DoNotOptimize(conv2d(tape.constant(x), tape.constant(w), ConvGeometry{1, 1, Padding::zeros}).value());
    }
    state.SetItemsProcessed(state.iterations() * 16);
}
BENCHMARK(BM_Conv3x3)->Arg(8)->Arg(16)->Unit(benchmark::kMicrosecond);

void BM_DenoiserInference(benchmark::State& state) {
    PrecisionScope f32(Precision::f32);
    const UNetDenoiser net(desk_config());
    Rng rng(2);
    const NdArray x = rng.normal_array({static_cast<std::size_t>(state.range(0)), 3, 32, 32});
    for (auto _ : state) benchmark::DoNotOptimize(net.predict_noise(x, 500));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DenoiserInference)->Arg(1)->Arg(16)->Unit(benchmark::kMillisecond);

// One pretraining step: forward, backward and Adam on a batch of 16.
void BM_PretrainStep(benchmark::State& state) {
    PrecisionScope f32(Precision::f32);
    UNetDenoiser net(desk_config());
    const auto data = gen_content(1, 64, 32);
    PretrainOptions o;
    o.steps = 1;
    o.batch = 16;
    std::optional<TrainingState> st;
    for (auto _ : state) {
        PretrainResult r = pretrain(net, data, desk_schedule(), o, std::move(st));
        st = std::move(r.state);
    }
}
BENCHMARK(BM_PretrainStep)->Unit(benchmark::kMillisecond);

void BM_InvertGenerate(benchmark::State& state) {
    PrecisionScope f32(Precision::f32);
    const UNetDenoiser net(desk_config());
    const NdArray img = gen_content_image(4, 32);
    const TimestepPlan plan = make_plan(40, 601, 1000);
    for (auto _ : state) {
        benchmark::DoNotOptimize(generate(invert(img, plan, net, desk_schedule()), plan, net, desk_schedule()).final);
    }
}
BENCHMARK(BM_InvertGenerate)->Unit(benchmark::kMillisecond);

void BM_GenContent(benchmark::State& state) {
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(gen_content_image(seed++, 32));
}
BENCHMARK(BM_GenContent)->Unit(benchmark::kMicrosecond);

void BM_ProjectorEmbed(benchmark::State& state) {
    const Projector proj;
    const NdArray img = gen_content_image(5, 32);
    for (auto _ : state) benchmark::DoNotOptimize(proj.embed(img));
}
BENCHMARK(BM_ProjectorEmbed)->Unit(benchmark::kMicrosecond);

void BM_Ssim(benchmark::State& state) {
    const NdArray a = gen_content_image(6, 32), b = gen_content_image(7, 32);
    for (auto _ : state) benchmark::DoNotOptimize(ssim(a, b));
}
BENCHMARK(BM_Ssim)->Unit(benchmark::kMicrosecond);

}  // namespace
}  // namespace styldiff

BENCHMARK_MAIN();
