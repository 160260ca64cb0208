// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "styldiff/disentangle.hpp"
#include "styldiff/ndarray.hpp"

namespace styldiff {

/// SSIM of the luma channels of two `{3, H, W}` images: 11x11 Gaussian
/// window (sigma 1.5), dynamic range 2, averaged over the windows that fit
/// inside the image.
double ssim(const NdArray& a, const NdArray& b);
inline constexpr std::size_t kSsimWindow = 11;

/// Cosine similarity of projector embeddings.
double style_score(const Projector& proj, const NdArray& a, const NdArray& b);

/// Gram-matrix style distance over projector features.
double style_distance_gram(const Projector& proj, const NdArray& a, const NdArray& b);

struct MetricRow {
    std::string metric;
    std::string content_id;
    std::string style_id;
    double value = 0.0;
};

/// Tab-separated "metric content_id style_id value" lines with values printed
/// to 17 significant digits, so equal inputs give byte-identical reports.
std::string format_report(const std::vector<MetricRow>& rows);
void write_report(const std::filesystem::path& path, const std::vector<MetricRow>& rows);

}  // namespace styldiff
