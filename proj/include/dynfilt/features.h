// Copyright 2026 The dynfilt Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef DYNFILT_FEATURES_H_
#define DYNFILT_FEATURES_H_

#include <cstddef>
#include <span>
#include <vector>

#include "dynfilt/tensor.h"
#include "dynfilt/wav.h"

namespace dynfilt {

enum class FeatureKind : unsigned char { kMfcc = 0, kLogMel = 1 };

// Frequency-by-time feature matrix, row-major (values[f * frames + t]).
struct TFFeature {
  std::vector<double> values;
  std::size_t bins = 0;
  std::size_t frames = 0;
  FeatureKind kind = FeatureKind::kMfcc;

  double at(std::size_t f, std::size_t t) const { return values[f * frames + t]; }
  Tensor ToTensor() const;
  static TFFeature FromTensor(const Tensor& t, FeatureKind kind);
};

// Analysis recipe. Pipeline: Hann window, |DFT|^2, HTK-mel triangular
// filterbank with unit peaks, log(. + 1e-10), and for MFCC an orthonormal
// DCT-II keeping the first n_coeffs rows. No pre-emphasis, no liftering.
struct FeatureConfig {
  FeatureKind kind = FeatureKind::kMfcc;
  int sample_rate_hz = 16000;
  double win_ms = 30.0;
  double hop_ms = 10.0;
  std::size_t n_mels = 64;
  std::size_t n_coeffs = 40;
  std::size_t fft_size = 0;  // 0: next power of two >= window length
  double fmin_hz = 0.0;
  double fmax_hz = 0.0;  // 0: Nyquist

  std::size_t window_length() const;
  std::size_t hop_length() const;
  std::size_t resolved_fft_size() const;
  double resolved_fmax() const;
  std::size_t output_bins() const;
  // Throws ConfigError on an inconsistent recipe.
  void Validate() const;
};

// 30 ms / 10 ms / 64 mels / 40 coefficients.
FeatureConfig KeywordSpottingConfig();
// 25 ms / 10 ms / 40 log-mel bins.
FeatureConfig SpeakerVerificationConfig();

inline constexpr double kLogFloor = 1e-10;

// 1 + floor((n - win) / hop); throws GeometryError when n < win.
std::size_t FrameCount(std::size_t n_samples, std::size_t win,
                       std::size_t hop);

double HzToMel(double hz);
double MelToHz(double mel);

// Triangular filters in the HTK mel domain over the one-sided spectrum.
class MelFilterbank {
 public:
  MelFilterbank(std::size_t n_mels, std::size_t fft_size, int sample_rate_hz,
                double fmin_hz, double fmax_hz);

  std::size_t size() const { return n_mels_; }
  std::size_t bins() const { return fft_size_ / 2 + 1; }
  // Response of filter m at an arbitrary frequency; 1 at its center.
  double Response(std::size_t m, double hz) const;
  double CenterHz(std::size_t m) const { return MelToHz(edges_mel_[m + 1]); }
  // Weight of filter m on FFT bin k.
  double Weight(std::size_t m, std::size_t k) const {
    return weights_[m * bins() + k];
  }
  // out[m] = sum_k Weight(m, k) * power[k].
  void Apply(std::span<const double> power, std::span<double> out) const;

 private:
  std::size_t n_mels_;
  std::size_t fft_size_;
  int sample_rate_hz_;
  std::vector<double> edges_mel_;
  std::vector<double> weights_;
};

// |DFT|^2 of the zero-padded frame, bins 0..fft_size/2.
std::vector<double> PowerSpectrum(std::span<const double> frame,
                                  std::size_t fft_size);

std::vector<double> HannWindow(std::size_t length);

// Orthonormal DCT-II of `in`, first `keep` outputs.
std::vector<double> DctII(std::span<const double> in, std::size_t keep);

// Mel energies before the log, [n_mels][frames].
std::vector<double> MelEnergies(const Waveform& wave, const FeatureConfig& cfg,
                                std::size_t* frames_out);

TFFeature Mfcc(const Waveform& wave, const FeatureConfig& cfg);
TFFeature LogMel(const Waveform& wave, const FeatureConfig& cfg);
// Dispatches on cfg.kind.
TFFeature ExtractFeatures(const Waveform& wave, const FeatureConfig& cfg);

// Per-row mean/std normalization inside each of `chunks` temporal chunks,
// followed by gamma[f] * x + beta[f] when gamma/beta are non-empty.
TFFeature InstanceNorm(const TFFeature& x, std::size_t chunks,
                       std::span<const double> gamma = {},
                       std::span<const double> beta = {});

}  // namespace dynfilt

#endif  // DYNFILT_FEATURES_H_
