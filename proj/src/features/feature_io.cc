// Copyright 2026 The dynfilt Authors
// SPDX-License-Identifier: Apache-2.0

#include "dynfilt/feature_io.h"

#include <fstream>
#include <iomanip>
#include <limits>

#include "dynfilt/byte_io.h"
#include "dynfilt/errors.h"

namespace dynfilt {

std::string EncodeFeatureFile(const TFFeature& feature, std::uint32_t flags) {
  if (feature.bins > std::numeric_limits<std::uint16_t>::max() ||
      feature.frames > std::numeric_limits<std::uint32_t>::max()) {
    throw DimensionError("feature too large for the container");
  }
  if (feature.values.size() != feature.bins * feature.frames) {
    throw DimensionError("feature values do not match F x T");
  }
  std::string out = "DYNF";
  bytes::PutU8(out, static_cast<std::uint8_t>(feature.kind));
  bytes::PutU8(out, 0);
  bytes::PutU16(out, static_cast<std::uint16_t>(feature.bins));
  bytes::PutU32(out, static_cast<std::uint32_t>(feature.frames));
  bytes::PutU32(out, flags);
  for (double v : feature.values) bytes::PutF32(out, static_cast<float>(v));
  return out;
}

TFFeature DecodeFeatureFile(const std::string& data) {
  bytes::Reader in(data, "feature file");
  if (in.Bytes(4) != "DYNF") throw IngestionError("feature file: bad magic");
  TFFeature f;
  const std::uint8_t kind = in.U8();
  if (kind > 1) throw IngestionError("feature file: unknown kind");
  f.kind = static_cast<FeatureKind>(kind);
  in.U8();
  f.bins = in.U16();
  f.frames = in.U32();
  in.U32();
  if (in.remaining() != 4 * f.bins * f.frames) {
    throw IngestionError("feature file: payload size does not match header");
  }
  f.values.resize(f.bins * f.frames);
  for (double& v : f.values) v = in.F32();
  return f;
}

void WriteFeatureFile(const std::filesystem::path& path,
                      const TFFeature& feature) {
  bytes::WriteFileAtomic(path, EncodeFeatureFile(feature));
}

TFFeature ReadFeatureFile(const std::filesystem::path& path) {
  return DecodeFeatureFile(bytes::ReadFile(path));
}

void WriteFeatureCsv(const std::filesystem::path& path,
                     const TFFeature& feature) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write " + path.string());
  out << std::setprecision(9);
  for (std::size_t f = 0; f < feature.bins; ++f) {
    for (std::size_t t = 0; t < feature.frames; ++t) {
      if (t) out << ',';
      out << feature.at(f, t);
    }
    out << '\n';
  }
}

}  // namespace dynfilt
