// Copyright 2026 The dynfilt Authors
// SPDX-License-Identifier: Apache-2.0

// Little-endian encoding helpers shared by the binary file formats.

#ifndef DYNFILT_BYTE_IO_H_
#define DYNFILT_BYTE_IO_H_

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <utility>

#include "dynfilt/errors.h"

namespace dynfilt::bytes {

inline void PutU8(std::string& out, std::uint8_t v) {
  out.push_back(static_cast<char>(v));
}

inline void PutU16(std::string& out, std::uint16_t v) {
  for (int i = 0; i < 2; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void PutU32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void PutF32(std::string& out, float v) {
  PutU32(out, std::bit_cast<std::uint32_t>(v));
}

// Bounds-checked sequential reader.
class Reader {
 public:
  Reader(const std::string& data, std::string what)
      : data_(data), what_(std::move(what)) {}

  std::uint8_t U8() { return static_cast<std::uint8_t>(Take(1)[0]); }
  std::uint16_t U16() {
    const auto* p = reinterpret_cast<const unsigned char*>(Take(2));
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
  }
  std::uint32_t U32() {
    const auto* p = reinterpret_cast<const unsigned char*>(Take(4));
    return static_cast<std::uint32_t>(p[0]) |
           (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
  }
  float F32() { return std::bit_cast<float>(U32()); }
  std::string Bytes(std::size_t n) { return std::string(Take(n), n); }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  const char* Take(std::size_t n) {
    if (pos_ + n > data_.size()) {
      throw IngestionError(what_ + ": unexpected end of data");
    }
    const char* p = data_.data() + pos_;
    pos_ += n;
    return p;
  }

  const std::string& data_;
  std::string what_;
  std::size_t pos_ = 0;
};

std::string ReadFile(const std::filesystem::path& path);
// Writes to a temporary sibling and renames it into place.
void WriteFileAtomic(const std::filesystem::path& path,
                     const std::string& contents);

}  // namespace dynfilt::bytes

#endif  // DYNFILT_BYTE_IO_H_
