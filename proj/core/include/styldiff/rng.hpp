// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

#include "styldiff/ndarray.hpp"

namespace styldiff {

/// Seeded generator whose streams are identical on every platform.
///
/// std::mt19937_64 is fully specified by the standard; the distributions in
/// <random> are not, so uniform and Gaussian variates are derived here.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0);

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer on [lo, hi], unbiased.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
    /// Standard normal (Box-Muller).
    double normal();

    NdArray normal_array(const Shape& shape);

    std::string state() const;
    void restore(std::string_view state);

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// splitmix64 finaliser mixing a base seed with a stream index.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace styldiff
