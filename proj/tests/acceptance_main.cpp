// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

// Runs every acceptance criterion and prints one line per criterion. The
// optional argument is the scratch directory.

#include <cstdio>
#include <filesystem>

#include "acceptance.hpp"
#include "styldiff/runtime.hpp"

int main(int argc, char** argv) {
    styldiff::tune_allocator();
    styldiff::acceptance::Options options;
    options.work_dir = argc > 1 ? std::filesystem::path(argv[1])
                                : std::filesystem::temp_directory_path() / "styldiff_acceptance";
    options.log = [](const std::string& line) {
        std::fprintf(stderr, "%s\n", line.c_str());
        std::fflush(stderr);
    };
    int failed = 0;
    const auto outcomes = styldiff::acceptance::run(options);
    std::printf("\n");
    for (const auto& o : outcomes) {
        std::printf("%s\n", styldiff::acceptance::format_line(o).c_str());
        failed += o.pass ? 0 : 1;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(outcomes.size()) - failed, outcomes.size());
    return failed == 0 ? 0 : 1;
}
