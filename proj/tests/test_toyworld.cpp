// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>

#include "styldiff/disentangle.hpp"
#include "styldiff/error.hpp"
#include "styldiff/image.hpp"
#include "styldiff/toyworld.hpp"

namespace styldiff {
namespace {

namespace fs = std::filesystem;

TEST(GenContent, DeterministicAndInRange) {
    const auto a = gen_content(42, 6, 32);
    const auto b = gen_content(42, 6, 32);
    ASSERT_EQ(a.size(), 6u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_TRUE(bit_equal(a[i], b[i]));
        EXPECT_EQ(a[i].shape(), (Shape{3, 32, 32}));
        EXPECT_LE(max_abs(a[i]), 1.0);
        EXPECT_TRUE(bit_equal(a[i], gen_content_image(content_seed(42, static_cast<int>(i)), 32)));
    }
    EXPECT_FALSE(bit_equal(a[0], a[1]));
    EXPECT_FALSE(bit_equal(a[0], gen_content(43, 1, 32)[0]));
    EXPECT_THROW(gen_content(1, 0, 32), DomainError);
}

TEST(GenContent, FullCorpusIsQuick) {
    const auto start = std::chrono::steady_clock::now();
    const auto corpus = gen_content(7, 512, 32);
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    EXPECT_EQ(corpus.size(), 512u);
    EXPECT_LT(s, 5.0);
}

TEST(ApplyStyle, ZeroAmplitudeSpeckleIsIdentity) {
    const NdArray c = gen_content_image(1, 32);
    StyleSpec s = random_style(StyleKind::speckle, 3);
    s.amplitude = 0.0;
    EXPECT_TRUE(bit_equal(apply_style(c, s), c));
}

TEST(ApplyStyle, UnitCellBlocksIsIdentity) {
    const NdArray c = gen_content_image(2, 32);
    StyleSpec s;
    s.kind = StyleKind::blocks;
    s.cell = 1;
    EXPECT_LE(max_abs(apply_style(c, s) - c), 1e-15);
}

TEST(ApplyStyle, PaletteChangesLuminance) {
    const NdArray c = gen_content_image(3, 32);
    const NdArray out = apply_style(c, random_style(StyleKind::palette, 4));
    EXPECT_GT(max_abs(luma(out) - luma(c)), 0.05);
}

// Stripes at angle 0 vary along x only; the DFT of each row peaks at
// W / period cycles.
TEST(ApplyStyle, StripesHaveTheirPeriodAsDominantFrequency) {
    constexpr std::size_t n = 32;
    StyleSpec s;
    s.kind = StyleKind::stripes;
    s.period = 4.0;
    s.angle = 0.0;
    s.amplitude = 0.6;
    const NdArray out = apply_style(NdArray({3, n, n}, 0.0), s);
    std::vector<double> power(n / 2 + 1, 0.0);
    for (std::size_t y = 0; y < n; ++y) {
        for (std::size_t k = 1; k <= n / 2; ++k) {
            std::complex<double> acc = 0.0;
            for (std::size_t x = 0; x < n; ++x) {
                acc += out[y * n + x] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * x) / n);
            }
            power[k] += std::norm(acc);
        }
    }
    const auto peak = std::max_element(power.begin() + 1, power.end()) - power.begin();
    EXPECT_EQ(peak, static_cast<long>(n / 4));
}

TEST(StyleSpec, ValidationRejectsOutOfRangeParameters) {
    StyleSpec s;
    s.period = 1.0;
    EXPECT_THROW(s.validate(), DomainError);
    EXPECT_THROW(apply_style(gen_content_image(1, 16), s), DomainError);
    s = StyleSpec{};
    s.amplitude = 1.5;
    EXPECT_THROW(s.validate(), DomainError);
    s = StyleSpec{};
    s.kind = StyleKind::blocks;
    s.cell = 0;
    EXPECT_THROW(s.validate(), DomainError);
    EXPECT_THROW(parse_style_kind("watercolour"), Error);
}

TEST(StyleSpec, ParamsRoundTripExactly) {
    for (StyleKind kind : kAllStyleKinds) {
        for (std::uint64_t seed : {1u, 77u, 901u}) {
            const StyleSpec s = random_style(kind, seed);
            EXPECT_NO_THROW(s.validate());
            EXPECT_EQ(parse_style_params(kind, seed, format_style_params(s)), s) << to_string(kind);
            EXPECT_EQ(parse_style_kind(to_string(kind)), kind);
        }
    }
}

TEST(ApplyStyle, DeterministicAndEveryKindMovesTheEmbedding) {
    const Projector proj;
    for (StyleKind kind : kAllStyleKinds) {
        double smallest = 1e9;
        for (int i = 0; i < 8; ++i) {
            const NdArray c = luma(gen_content_image(100 + static_cast<std::uint64_t>(i), 32));
            const StyleSpec s = random_style(kind, 200 + static_cast<std::uint64_t>(i));
            const NdArray a = apply_style(c, s);
            EXPECT_TRUE(bit_equal(a, apply_style(c, s)));
            smallest = std::min(smallest, l2_norm(style_direction(proj, a, c)));
        }
        EXPECT_GT(smallest, 0.01) << to_string(kind);
    }
}

// Style directions of the same kind, painted over different contents, agree
// more than directions of different kinds.
TEST(ApplyStyle, KindsAreSeparableInProjectorSpace) {
    const Projector proj;
    std::vector<std::vector<NdArray>> emb(kAllStyleKinds.size());
    for (std::size_t k = 0; k < kAllStyleKinds.size(); ++k) {
        for (int i = 0; i < 6; ++i) {
            const std::uint64_t seed = 1000 + static_cast<std::uint64_t>(k * 10 + static_cast<std::size_t>(i));
            const NdArray c = gen_content_image(seed, 32);
            emb[k].push_back(style_direction(proj, apply_style(c, random_style(kAllStyleKinds[k], seed)), c));
        }
    }
    for (std::size_t k = 0; k < emb.size(); ++k) {
        double same = 0, cross = 0;
        int ns = 0, nc = 0;
        for (std::size_t i = 0; i < emb[k].size(); ++i) {
            for (std::size_t j = i + 1; j < emb[k].size(); ++j, ++ns) same += cosine(emb[k][i], emb[k][j]);
            for (std::size_t o = 0; o < emb.size(); ++o) {
                if (o == k) continue;
                for (const auto& e : emb[o]) {
                    cross += cosine(emb[k][i], e);
                    ++nc;
                }
            }
        }
        EXPECT_GT(same / ns, cross / nc) << to_string(kAllStyleKinds[k]);
    }
}

TEST(Manifest, RoundTripAndRender) {
    const fs::path dir = fs::temp_directory_path() / "styldiff_test_toyworld";
    fs::create_directories(dir);
    const StyleSpec spec = random_style(StyleKind::stripes, 9);
    const std::vector<ManifestEntry> entries = {
        {"c0000", content_seed(5, 0), "content", "size=32"},
        {"s_stripes_0", 9, "stripes", "content=c0000;" + format_style_params(spec)},
    };
    write_manifest(dir / "manifest.tsv", entries);
    const auto back = read_manifest(dir / "manifest.tsv");
    EXPECT_EQ(back, entries);
    const NdArray content = render_entry(back[0], back);
    EXPECT_TRUE(bit_equal(content, gen_content_image(content_seed(5, 0), 32)));
    EXPECT_TRUE(bit_equal(render_entry(back[1], back), apply_style(content, spec)));
}

}  // namespace
}  // namespace styldiff
