// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#include "styldiff/container.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "styldiff/error.hpp"

namespace styldiff {
namespace {

constexpr std::size_t kMagicSize = 4;
constexpr std::size_t kCrcSize = 4;

template <typename U>
void put_le(std::vector<unsigned char>& out, U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

template <typename U>
U get_le(const unsigned char* p) {
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(p[i]) << (8 * i);
    return v;
}

}  // namespace

std::uint32_t crc32(std::span<const unsigned char> bytes) {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    std::size_t offset = 0;
    while (offset < bytes.size()) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - offset, 1u << 30));
        crc = ::crc32(crc, bytes.data() + offset, chunk);
        offset += chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

ContainerWriter::ContainerWriter(std::string_view magic, std::uint16_t version) {
    if (magic.size() != kMagicSize) throw DomainError("container: magic must be 4 bytes");
    bytes_.insert(bytes_.end(), magic.begin(), magic.end());
    put_u16(version);
}

void ContainerWriter::put_u8(std::uint8_t v) { bytes_.push_back(v); }
void ContainerWriter::put_u16(std::uint16_t v) { put_le(bytes_, v); }
void ContainerWriter::put_u32(std::uint32_t v) { put_le(bytes_, v); }
void ContainerWriter::put_u64(std::uint64_t v) { put_le(bytes_, v); }
void ContainerWriter::put_f64(double v) { put_le(bytes_, std::bit_cast<std::uint64_t>(v)); }

void ContainerWriter::put_string(std::string_view s) {
    put_u32(static_cast<std::uint32_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
}

void ContainerWriter::put_array(std::string_view name, const NdArray& value) {
    put_string(name);
    put_u8(static_cast<std::uint8_t>(value.rank()));
    for (std::size_t d : value.shape()) put_u32(static_cast<std::uint32_t>(d));
    for (double v : value.data()) put_le(bytes_, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

std::vector<unsigned char> ContainerWriter::finish() const {
    std::vector<unsigned char> out = bytes_;
    put_le(out, crc32(bytes_));
    return out;
}

void ContainerWriter::write(const std::filesystem::path& path) const {
    const std::vector<unsigned char> out = finish();
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw Error("container: cannot open '" + path.string() + "' for writing");
    file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!file) throw Error("container: write to '" + path.string() + "' failed");
}

ContainerReader::ContainerReader(std::vector<unsigned char> bytes, std::string_view magic, std::uint16_t version)
    : bytes_(std::move(bytes)) {
    if (bytes_.size() < kMagicSize + sizeof(std::uint16_t) + kCrcSize) throw FormatError("container: file truncated");
    if (std::memcmp(bytes_.data(), magic.data(), kMagicSize) != 0) {
        throw FormatError("container: bad magic, expected '" + std::string(magic) + "'");
    }
    end_ = bytes_.size() - kCrcSize;
    const auto stored = get_le<std::uint32_t>(bytes_.data() + end_);
    if (crc32(std::span(bytes_.data(), end_)) != stored) throw FormatError("container: checksum mismatch");
    pos_ = kMagicSize;
    const std::uint16_t found = get_u16();
    if (found != version) {
        throw FormatError("container: format version " + std::to_string(found) + ", expected " +
                          std::to_string(version));
    }
}

ContainerReader ContainerReader::open(const std::filesystem::path& path, std::string_view magic,
                                      std::uint16_t version) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw Error("container: cannot open '" + path.string() + "'");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
    return ContainerReader(std::move(bytes), magic, version);
}

void ContainerReader::need(std::size_t n) const {
    if (end_ - pos_ < n) throw FormatError("container: file truncated");
}

std::uint8_t ContainerReader::get_u8() {
    need(1);
    return bytes_[pos_++];
}

std::uint16_t ContainerReader::get_u16() {
    need(2);
    const auto v = get_le<std::uint16_t>(bytes_.data() + pos_);
    pos_ += 2;
    return v;
}

std::uint32_t ContainerReader::get_u32() {
    need(4);
    const auto v = get_le<std::uint32_t>(bytes_.data() + pos_);
    pos_ += 4;
    return v;
}

std::uint64_t ContainerReader::get_u64() {
    need(8);
    const auto v = get_le<std::uint64_t>(bytes_.data() + pos_);
    pos_ += 8;
    return v;
}

double ContainerReader::get_f64() { return std::bit_cast<double>(get_u64()); }

std::string ContainerReader::get_string() {
    const std::uint32_t n = get_u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
}

std::pair<std::string, NdArray> ContainerReader::get_array() {
    std::string name = get_string();
    const std::uint8_t rank = get_u8();
    Shape shape(rank);
    for (auto& d : shape) d = get_u32();
    const std::size_t n = numel(shape);
    need(n * 4);
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) {
        values[i] = static_cast<double>(std::bit_cast<float>(get_le<std::uint32_t>(bytes_.data() + pos_)));
        pos_ += 4;
    }
    return {std::move(name), NdArray(std::move(shape), std::move(values))};
}

}  // namespace styldiff
