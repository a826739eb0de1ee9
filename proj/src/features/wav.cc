// Copyright 2026 The dynfilt Authors
// SPDX-License-Identifier: Apache-2.0

#include "dynfilt/wav.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "dynfilt/byte_io.h"
#include "dynfilt/errors.h"

namespace dynfilt {

namespace {

std::uint32_t ReadU32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t ReadU16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void PutU32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void PutU16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

}  // namespace

Waveform ReadWav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                         std::istreambuf_iterator<char>());
  const std::string where = path.string() + ": ";
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw IngestionError(where + "not a RIFF/WAVE file");
  }
  bool have_fmt = false;
  int channels = 0, bits = 0, rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t chunk_size = ReadU32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + chunk_size > bytes.size() &&
        std::memcmp(chunk, "data", 4) != 0) {
      throw IngestionError(where + "truncated chunk");
    }
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (chunk_size < 16) throw IngestionError(where + "short fmt chunk");
      const std::uint16_t format = ReadU16(bytes.data() + body);
      channels = ReadU16(bytes.data() + body + 2);
      rate = static_cast<int>(ReadU32(bytes.data() + body + 4));
      bits = ReadU16(bytes.data() + body + 14);
      if (format != 1) {
        throw IngestionError(where + "unsupported encoding (format tag " +
                             std::to_string(format) + "), need PCM");
      }
      if (channels != 1) {
        throw IngestionError(where + "expected mono audio, got " +
                             std::to_string(channels) + " channels");
      }
      if (bits != 16) {
        throw IngestionError(where + "expected 16-bit samples, got " +
                             std::to_string(bits));
      }
      if (rate <= 0) throw IngestionError(where + "invalid sample rate");
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) throw IngestionError(where + "data chunk before fmt chunk");
      if (body + chunk_size > bytes.size()) {
        throw IngestionError(where + "data chunk is truncated");
      }
      if (chunk_size % 2 != 0) {
        throw IngestionError(where + "odd data size for 16-bit samples");
      }
      Waveform wave;
      wave.sample_rate_hz = rate;
      wave.samples.resize(chunk_size / 2);
      for (std::size_t i = 0; i < wave.samples.size(); ++i) {
        const auto code = static_cast<std::int16_t>(
            ReadU16(bytes.data() + body + 2 * i));
        wave.samples[i] = static_cast<double>(code) / 32768.0;
      }
      if (wave.samples.empty()) throw IngestionError(where + "no samples");
      return wave;
    }
    pos = body + chunk_size + (chunk_size & 1);
  }
  throw IngestionError(where + "missing data chunk");
}

void WriteWav(const std::filesystem::path& path, const Waveform& wave) {
  const auto n = static_cast<std::uint32_t>(wave.samples.size());
  std::string out;
  out.reserve(44 + 2 * n);
  out += "RIFF";
  PutU32(out, 36 + 2 * n);
  out += "WAVEfmt ";
  PutU32(out, 16);
  PutU16(out, 1);
  PutU16(out, 1);
  PutU32(out, static_cast<std::uint32_t>(wave.sample_rate_hz));
  PutU32(out, static_cast<std::uint32_t>(wave.sample_rate_hz) * 2);
  PutU16(out, 2);
  PutU16(out, 16);
  out += "data";
  PutU32(out, 2 * n);
  for (double s : wave.samples) {
    const double code = std::clamp(std::round(s * 32768.0), -32768.0, 32767.0);
    PutU16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(code)));
  }
  bytes::WriteFileAtomic(path, out);
}

}  // namespace dynfilt
