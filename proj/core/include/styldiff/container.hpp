// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "styldiff/ndarray.hpp"

namespace styldiff {

std::uint32_t crc32(std::span<const unsigned char> bytes);

/// Little-endian binary container: 4-byte magic, u16 version, a free-form
/// header block, named arrays stored as 32-bit reals, and a trailing CRC32 of
/// everything before it.
class ContainerWriter {
public:
    ContainerWriter(std::string_view magic, std::uint16_t version);

    void put_u8(std::uint8_t v);
    void put_u16(std::uint16_t v);
    void put_u32(std::uint32_t v);
    void put_u64(std::uint64_t v);
    void put_f64(double v);
    void put_string(std::string_view s);
    /// Values are narrowed to 32-bit floats.
    void put_array(std::string_view name, const NdArray& value);

    /// Finished byte image including the CRC trailer.
    std::vector<unsigned char> finish() const;
    void write(const std::filesystem::path& path) const;

private:
    std::vector<unsigned char> bytes_;
};

class ContainerReader {
public:
    /// Validates size, magic, checksum and version, in that order.
    ContainerReader(std::vector<unsigned char> bytes, std::string_view magic, std::uint16_t version);
    static ContainerReader open(const std::filesystem::path& path, std::string_view magic, std::uint16_t version);

    std::uint8_t get_u8();
    std::uint16_t get_u16();
    std::uint32_t get_u32();
    std::uint64_t get_u64();
    double get_f64();
    std::string get_string();
    /// Returns the stored name alongside the array.
    std::pair<std::string, NdArray> get_array();

    bool at_end() const noexcept { return pos_ == end_; }

private:
    void need(std::size_t n) const;

    std::vector<unsigned char> bytes_;
    std::size_t pos_ = 0;
    std::size_t end_ = 0;
};

}  // namespace styldiff
