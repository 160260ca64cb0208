// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace styldiff::acceptance {

struct Options {
    /// Criterion numbers to run; empty runs all of them.
    std::vector<int> only;
    /// Scratch space for models, latent stores and images.
    std::filesystem::path work_dir;
    std::function<void(const std::string&)> log;
};

struct Outcome {
    int id = 0;
    std::string title;
    bool pass = false;
    /// Measured values next to their thresholds.
    std::string detail;
    double seconds = 0.0;
};

inline constexpr int kCriterionCount = 11;

/// Runs the selected criteria in order. Criteria 7, 8 and 10 share one
/// pretrained model and criterion 9 reuses the fine-tuned one, so running any
/// of them trains the base model first.
std::vector<Outcome> run(const Options& options);

/// "[PASS] criterion N: title | detail (12.3 s)"
std::string format_line(const Outcome& outcome);

}  // namespace styldiff::acceptance
