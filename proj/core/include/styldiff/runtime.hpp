// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <optional>

namespace styldiff {

/// Worker count: `requested` if given, else STYLDIFF_THREADS, else 1.
/// Throws ConfigError on values below 1 or unparsable text.
int resolve_thread_count(std::optional<int> requested);

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index runs
/// exactly once; the first exception thrown is rethrown after all workers
/// finish.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

/// Keeps freed memory in the process instead of returning it to the kernel.
/// Training allocates and frees the same large buffers every step, and on
/// glibc the default thresholds turn each of them into fresh page faults.
/// Meant to be called once at program start; a no-op elsewhere.
void tune_allocator() noexcept;

}  // namespace styldiff
