// Copyright 2026 The dynfilt Authors
// SPDX-License-Identifier: Apache-2.0

// CSV manifests read by the command-line tool. Fields are split on commas
// with no quoting. Relative paths resolve against the manifest's directory.

#ifndef DYNFILT_MANIFEST_H_
#define DYNFILT_MANIFEST_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace dynfilt {

struct CsvRow {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

// Header must equal `columns` exactly. Blank lines are skipped. Throws
// IngestionError with file and line on a missing file, wrong header or
// wrong field count.
std::vector<CsvRow> ReadCsv(const std::filesystem::path& path,
                            const std::vector<std::string>& columns);

// path,label  or  path,speaker_id
struct LabeledPath {
  std::filesystem::path path;
  std::string label;
};
std::vector<LabeledPath> ReadLabeledManifest(const std::filesystem::path& path,
                                             const std::string& label_column);

// path  (a bare list, for feature extraction)
std::vector<std::filesystem::path> ReadPathManifest(const std::filesystem::path& path);

// speech_path,noise_path,snr_db,seed
struct MixRow {
  std::filesystem::path speech;
  std::filesystem::path noise;
  double snr_db = 0.0;
  std::uint64_t seed = 0;
};
std::vector<MixRow> ReadMixManifest(const std::filesystem::path& path);

// name,path
struct NoiseSource {
  std::string name;
  std::filesystem::path path;
};
std::vector<NoiseSource> ReadNoiseManifest(const std::filesystem::path& path);

// enroll_path,test_path,is_target
struct TrialPair {
  std::filesystem::path enroll;
  std::filesystem::path test;
  bool is_target = false;
};
std::vector<TrialPair> ReadTrialManifest(const std::filesystem::path& path);

}  // namespace dynfilt

#endif  // DYNFILT_MANIFEST_H_
