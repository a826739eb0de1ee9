// Copyright 2026 The dynfilt Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef DYNFILT_WAV_H_
#define DYNFILT_WAV_H_

#include <filesystem>
#include <vector>

namespace dynfilt {

struct Waveform {
  std::vector<double> samples;  // in [-1, 1)
  int sample_rate_hz = 16000;

  double duration_seconds() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

// Reads a PCM 16-bit mono RIFF/WAVE file; samples are scaled by 1/32768.
// Throws IngestionError on anything else.
Waveform ReadWav(const std::filesystem::path& path);

// Writes PCM 16-bit mono. Samples are rounded to the nearest code and
// clamped to [-32768, 32767].
void WriteWav(const std::filesystem::path& path, const Waveform& wave);

}  // namespace dynfilt

#endif  // DYNFILT_WAV_H_
