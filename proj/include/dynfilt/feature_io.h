// Copyright 2026 The dynfilt Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef DYNFILT_FEATURE_IO_H_
#define DYNFILT_FEATURE_IO_H_

#include <cstdint>
#include <filesystem>
#include <string>

#include "dynfilt/features.h"

namespace dynfilt {

// Feature container, little-endian:
//   bytes 0-3   magic "DYNF"
//   byte  4     kind (0 mfcc, 1 logmel)
//   byte  5     reserved, 0
//   bytes 6-7   u16 bins (F)
//   bytes 8-11  u32 frames (T)
//   bytes 12-15 u32 flags, 0
// followed by F * T float32 values, row-major.
inline constexpr std::size_t kFeatureHeaderBytes = 16;

std::string EncodeFeatureFile(const TFFeature& feature, std::uint32_t flags = 0);
TFFeature DecodeFeatureFile(const std::string& bytes);

void WriteFeatureFile(const std::filesystem::path& path,
                      const TFFeature& feature);
TFFeature ReadFeatureFile(const std::filesystem::path& path);

// One line per frequency bin, comma-separated frames.
void WriteFeatureCsv(const std::filesystem::path& path,
                     const TFFeature& feature);

}  // namespace dynfilt

#endif  // DYNFILT_FEATURE_IO_H_
