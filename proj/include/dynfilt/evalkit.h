// Copyright 2026 The dynfilt Authors
// SPDX-License-Identifier: Apache-2.0

// Noise mixing at a target SNR, and the classification / verification
// metrics used to evaluate the task heads.

#ifndef DYNFILT_EVALKIT_H_
#define DYNFILT_EVALKIT_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "dynfilt/wav.h"

namespace dynfilt {

// Passing this as snr_db returns the speech untouched.
inline constexpr double kCleanSnr = std::numeric_limits<double>::infinity();

struct MixSpec {
  double snr_db = 0.0;
  std::uint64_t seed = 0;
};

struct MixResult {
  Waveform mixed;
  double gain = 0.0;        // applied to the noise
  double peak_scale = 1.0;  // < 1 when the mix was rescaled to fit [-1, 1]
  std::size_t noise_offset = 0;
  double speech_power = 0.0;
  double noise_power = 0.0;  // of the unscaled noise over the mixed region
};

// speech + g * noise, where the noise is read circularly from a seeded
// offset (so shorter noise is looped) and g sets the mean-square power
// ratio to snr_db. If any sample would exceed 1 in magnitude, the whole mix
// is scaled down, which leaves the SNR unchanged. Throws MixError on silent
// speech or noise, or mismatched sample rates.
MixResult MixAtSnr(const Waveform& speech, const Waveform& noise,
                   const MixSpec& spec);

double MeanSquare(std::span<const double> x);
// 10 log10(P(speech) / P(noise)).
double SnrDb(std::span<const double> speech, std::span<const double> noise);

// Fraction of equal entries. Throws MetricError on empty or unequal input.
double Accuracy(std::span<const std::size_t> predictions,
                std::span<const std::size_t> labels);

struct AccuracySummary {
  double mean = 0.0;
  double best = 0.0;
};
AccuracySummary SummarizeRuns(std::span<const double> accuracies);

struct Trial {
  double score;
  bool is_target;
};

struct ErrorRates {
  double threshold;
  double far;  // P(score >= threshold | non-target)
  double frr;  // P(score < threshold | target)
};

// Rates at every distinct score, ascending, followed by +inf. Throws
// MetricError unless both classes are present and all scores are finite.
std::vector<ErrorRates> ErrorRateSweep(std::span<const Trial> trials);

// FAR = FRR crossing of the sweep, linearly interpolated between adjacent
// thresholds when not attained exactly.
double Eer(std::span<const Trial> trials);

struct DcfParams {
  double p_target = 0.05;
  double c_miss = 1.0;
  double c_fa = 1.0;
};

// min over thresholds of c_miss p FRR + c_fa (1 - p) FAR, divided by
// min(c_miss p, c_fa (1 - p)).
double MinDcf(std::span<const Trial> trials, const DcfParams& params = {});

// CSV with header score,is_target.
void WriteTrials(const std::filesystem::path& path, std::span<const Trial> trials);
std::vector<Trial> ReadTrials(const std::filesystem::path& path);

// Noise type by SNR accuracy table with a leading clean column.
struct AccuracyGrid {
  std::vector<std::string> noises;
  std::vector<double> snrs_db;
  double clean = 0.0;
  std::vector<std::vector<double>> cells;  // [noise][snr]

  std::string ToCsv() const;
};

}  // namespace dynfilt

#endif  // DYNFILT_EVALKIT_H_
