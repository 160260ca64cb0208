// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>

#include "styldiff/error.hpp"
#include "styldiff/image.hpp"
#include "styldiff/metrics.hpp"
#include "styldiff/rng.hpp"
#include "styldiff/toyworld.hpp"

namespace styldiff {
namespace {

TEST(Ssim, IdentityAndInversion) {
    const NdArray a = gen_content_image(1, 32);
    EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
    // A checkerboard is zero-mean inside every window.
    NdArray z({3, 16, 16});
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = ((i / 16 + i % 16) % 2 == 0) ? 0.5 : -0.5;
    EXPECT_LT(ssim(z, z * -1.0), 0.0);
}

TEST(Ssim, ContinuousAtConstantImages) {
    const NdArray c({3, 16, 16}, 0.25);
    EXPECT_NEAR(ssim(c, c + NdArray(c.shape(), 1e-4)), 1.0, 1e-6);
}

TEST(Ssim, SymmetricBoundedAndSized) {
    Rng rng(3);
    for (int i = 0; i < 20; ++i) {
        const NdArray a = clamp(rng.normal_array({3, 16, 16}), -1.0, 1.0);
        const NdArray b = clamp(rng.normal_array({3, 16, 16}), -1.0, 1.0);
        const double s = ssim(a, b);
        EXPECT_NEAR(s, ssim(b, a), 1e-14);
        EXPECT_GE(s, -1.0);
        EXPECT_LE(s, 1.0);
    }
    EXPECT_THROW(ssim(NdArray({3, 8, 8}), NdArray({3, 8, 8})), DomainError);
    EXPECT_THROW(ssim(NdArray({3, 16, 16}), NdArray({3, 32, 32})), ShapeError);
}

// Only the luma channel counts: a chroma change at fixed luma is invisible.
TEST(Ssim, UsesLumaOnly) {
    const NdArray a = gen_content_image(4, 16);
    EXPECT_NEAR(ssim(a, luma(a)), 1.0, 1e-12);
}

TEST(StyleScore, BasicProperties) {
    const Projector p;
    const NdArray a = gen_content_image(5, 32);
    const NdArray b = apply_style(a, random_style(StyleKind::blocks, 5));
    EXPECT_NEAR(style_score(p, a, a), 1.0, 1e-12);
    EXPECT_NEAR(style_score(p, a, b), style_score(p, b, a), 1e-15);
    EXPECT_EQ(style_distance_gram(p, a, b), gram_loss(p, a, b));
    EXPECT_GE(style_distance_gram(p, a, b), 0.0);
}

// Style images of one kind resemble each other more than images of other
// kinds, measured on the projector embeddings of their style directions
// relative to a shared content.
TEST(StyleScore, SameKindScoresAboveCrossKind) {
    const Projector p;
    double same = 0, cross = 0;
    int ns = 0, nc = 0;
    for (int i = 0; i < 8; ++i) {
        const NdArray c = gen_content_image(40 + static_cast<std::uint64_t>(i), 32);
        std::vector<NdArray> a, b;
        for (StyleKind k : kAllStyleKinds) {
            a.push_back(apply_style(c, random_style(k, 100 + static_cast<std::uint64_t>(i))));
            b.push_back(apply_style(c, random_style(k, 200 + static_cast<std::uint64_t>(i))));
        }
        for (std::size_t x = 0; x < a.size(); ++x) {
            for (std::size_t y = 0; y < b.size(); ++y) {
                (x == y ? same : cross) += style_score(p, a[x], b[y]);
                ++(x == y ? ns : nc);
            }
        }
    }
    EXPECT_GT(same / ns, cross / nc);
}

TEST(Report, ByteIdenticalAcrossRuns) {
    auto rows = [] {
        const Projector p;
        const NdArray c = gen_content_image(9, 32);
        const NdArray s = apply_style(c, random_style(StyleKind::palette, 9));
        return std::vector<MetricRow>{
            {"ssim", "c0", "s0", ssim(s, c)},
            {"style_score", "c0", "s0", style_score(p, s, c)},
            {"gram", "c0", "s0", style_distance_gram(p, s, c)},
        };
    };
    const std::string text = format_report(rows());
    EXPECT_EQ(text, format_report(rows()));
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
    EXPECT_EQ(text.rfind("ssim\tc0\ts0\t", 0), 0u);

    const auto path = std::filesystem::temp_directory_path() / "styldiff_test_report.tsv";
    write_report(path, rows());
    std::ifstream f(path);
    EXPECT_EQ(std::string(std::istreambuf_iterator<char>(f), {}), text);
}

TEST(Report, ValuesRoundTripThroughText) {
    const double v = 0.1 + 0.2;
    const std::string line = format_report({{"m", "a", "b", v}});
    EXPECT_EQ(std::strtod(line.substr(line.rfind('\t') + 1).c_str(), nullptr), v);
}

}  // namespace
}  // namespace styldiff
