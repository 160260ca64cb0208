// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#include "styldiff/metrics.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "styldiff/error.hpp"

namespace styldiff {
namespace {

constexpr double kRange = 2.0;
constexpr double kC1 = (0.01 * kRange) * (0.01 * kRange);
constexpr double kC2 = (0.03 * kRange) * (0.03 * kRange);

std::array<double, kSsimWindow> gaussian_window() {
    std::array<double, kSsimWindow> w{};
    const double c = (kSsimWindow - 1) / 2.0;
    double total = 0.0;
    for (std::size_t i = 0; i < kSsimWindow; ++i) {
        const double d = static_cast<double>(i) - c;
        w[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
        total += w[i];
    }
    for (double& v : w) v /= total;
    return w;
}

std::vector<double> luma_plane(const NdArray& img) {
    const std::size_t plane = img.extent(1) * img.extent(2);
    std::vector<double> out(plane);
    for (std::size_t p = 0; p < plane; ++p) out[p] = 0.299 * img[p] + 0.587 * img[plane + p] + 0.114 * img[2 * plane + p];
    return out;
}

// Separable valid-mode Gaussian filter of an H x W plane.
std::vector<double> filter_valid(const std::vector<double>& x, std::size_t H, std::size_t W,
                                 const std::array<double, kSsimWindow>& w) {
    const std::size_t Ho = H - kSsimWindow + 1, Wo = W - kSsimWindow + 1;
    std::vector<double> rows(H * Wo);
    for (std::size_t y = 0; y < H; ++y) {
        for (std::size_t x0 = 0; x0 < Wo; ++x0) {
            double s = 0.0;
            for (std::size_t k = 0; k < kSsimWindow; ++k) s += w[k] * x[y * W + x0 + k];
            rows[y * Wo + x0] = s;
        }
    }
    std::vector<double> out(Ho * Wo);
    for (std::size_t y0 = 0; y0 < Ho; ++y0) {
        for (std::size_t x0 = 0; x0 < Wo; ++x0) {
            double s = 0.0;
            for (std::size_t k = 0; k < kSsimWindow; ++k) s += w[k] * rows[(y0 + k) * Wo + x0];
            out[y0 * Wo + x0] = s;
        }
    }
    return out;
}

}  // namespace

double ssim(const NdArray& a, const NdArray& b) {
    require_same_shape(a, b, "ssim");
    if (a.rank() != 3 || a.extent(0) != 3) throw ShapeError("ssim: expected {3, H, W}, got " + to_string(a.shape()));
    const std::size_t H = a.extent(1), W = a.extent(2);
    if (H < kSsimWindow || W < kSsimWindow) throw DomainError("ssim: image smaller than the 11x11 window");
    const auto w = gaussian_window();
    const std::vector<double> x = luma_plane(a), y = luma_plane(b);
    std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }
    const auto mx = filter_valid(x, H, W, w), my = filter_valid(y, H, W, w);
    const auto sxx = filter_valid(xx, H, W, w), syy = filter_valid(yy, H, W, w), sxy = filter_valid(xy, H, W, w);
    double total = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
        const double vx = sxx[i] - mx[i] * mx[i], vy = syy[i] - my[i] * my[i], cxy = sxy[i] - mx[i] * my[i];
        total += ((2 * mx[i] * my[i] + kC1) * (2 * cxy + kC2)) / ((mx[i] * mx[i] + my[i] * my[i] + kC1) * (vx + vy + kC2));
    }
    return total / static_cast<double>(mx.size());
}

double style_score(const Projector& proj, const NdArray& a, const NdArray& b) {
    require_same_shape(a, b, "style_score");
    const NdArray ea = proj.embed(a), eb = proj.embed(b);
    if (l2_norm(ea) == 0.0 || l2_norm(eb) == 0.0) throw DomainError("style_score: zero embedding");
    return cosine(ea, eb);
}

double style_distance_gram(const Projector& proj, const NdArray& a, const NdArray& b) { return gram_loss(proj, a, b); }

std::string format_report(const std::vector<MetricRow>& rows) {
    std::string out;
    char buf[40];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.17g", r.value);
        out += r.metric + '\t' + r.content_id + '\t' + r.style_id + '\t' + buf + '\n';
    }
    return out;
}

void write_report(const std::filesystem::path& path, const std::vector<MetricRow>& rows) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path.string());
    f << format_report(rows);
    if (!f) throw Error("write failed: " + path.string());
}

}  // namespace styldiff
