// Copyright 2026 The dynfilt Authors
// SPDX-License-Identifier: Apache-2.0

#include "dynfilt/features.h"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <string>

#include "dynfilt/errors.h"
#include "dynfilt/ops.h"

namespace dynfilt {

namespace {

// The FFTW planner is not reentrant; execution with the plan's own buffers
// is, as long as each analyzer is used by one thread.
std::mutex& PlannerMutex() {
  static std::mutex mu;
  return mu;
}

class SpectrumAnalyzer {
 public:
  explicit SpectrumAnalyzer(std::size_t fft_size) : n_(fft_size) {
    in_ = fftw_alloc_real(n_);
    out_ = fftw_alloc_complex(n_ / 2 + 1);
    std::lock_guard<std::mutex> lock(PlannerMutex());
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n_), in_, out_,
                                 FFTW_ESTIMATE);
  }
  ~SpectrumAnalyzer() {
    {
      std::lock_guard<std::mutex> lock(PlannerMutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }
  SpectrumAnalyzer(const SpectrumAnalyzer&) = delete;
  SpectrumAnalyzer& operator=(const SpectrumAnalyzer&) = delete;

  void Power(std::span<const double> frame, std::span<double> power) {
    std::fill(in_, in_ + n_, 0.0);
    std::copy(frame.begin(), frame.end(), in_);
    fftw_execute(plan_);
    for (std::size_t k = 0; k <= n_ / 2; ++k) {
      power[k] = out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1];
    }
  }

 private:
  std::size_t n_;
  double* in_ = nullptr;
  fftw_complex* out_ = nullptr;
  fftw_plan plan_ = nullptr;
};

// Row k of the orthonormal DCT-II matrix, rows 0..keep-1.
std::vector<double> DctBasis(std::size_t n, std::size_t keep) {
  std::vector<double> basis(keep * n);
  for (std::size_t k = 0; k < keep; ++k) {
    const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
      basis[k * n + i] =
          scale * std::cos(std::numbers::pi * static_cast<double>(k) *
                           (2.0 * static_cast<double>(i) + 1.0) /
                           (2.0 * static_cast<double>(n)));
    }
  }
  return basis;
}

std::size_t NextPowerOfTwo(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

Tensor TFFeature::ToTensor() const {
  return Tensor::FromData({bins, frames}, values);
}

TFFeature TFFeature::FromTensor(const Tensor& t, FeatureKind kind) {
  if (t.rank() != 2) {
    throw DimensionError("feature tensor must be rank 2, got " +
                         ShapeToString(t.shape()));
  }
  TFFeature f;
  f.bins = t.dim(0);
  f.frames = t.dim(1);
  f.kind = kind;
  f.values.assign(t.data().begin(), t.data().end());
  return f;
}

std::size_t FeatureConfig::window_length() const {
  return static_cast<std::size_t>(std::llround(win_ms * sample_rate_hz / 1000.0));
}

std::size_t FeatureConfig::hop_length() const {
  return static_cast<std::size_t>(std::llround(hop_ms * sample_rate_hz / 1000.0));
}

std::size_t FeatureConfig::resolved_fft_size() const {
  return fft_size ? fft_size : NextPowerOfTwo(window_length());
}

double FeatureConfig::resolved_fmax() const {
  return fmax_hz > 0 ? fmax_hz : sample_rate_hz / 2.0;
}

std::size_t FeatureConfig::output_bins() const {
  return kind == FeatureKind::kMfcc ? n_coeffs : n_mels;
}

void FeatureConfig::Validate() const {
  if (sample_rate_hz <= 0) throw ConfigError("sample rate must be positive");
  if (window_length() == 0 || hop_length() == 0) {
    throw ConfigError("window and hop must span at least one sample");
  }
  if (hop_ms > win_ms) throw ConfigError("hop_ms must not exceed win_ms");
  if (n_mels == 0) throw ConfigError("n_mels must be positive");
  if (kind == FeatureKind::kMfcc && (n_coeffs == 0 || n_coeffs > n_mels)) {
    throw ConfigError("n_coeffs must be in [1, n_mels]");
  }
  if (resolved_fft_size() < window_length()) {
    throw ConfigError("fft_size is shorter than the window");
  }
  if (fmin_hz < 0 || resolved_fmax() <= fmin_hz ||
      resolved_fmax() > sample_rate_hz / 2.0) {
    throw ConfigError("need 0 <= fmin < fmax <= Nyquist");
  }
}

FeatureConfig KeywordSpottingConfig() { return FeatureConfig{}; }

FeatureConfig SpeakerVerificationConfig() {
  FeatureConfig cfg;
  cfg.kind = FeatureKind::kLogMel;
  cfg.win_ms = 25.0;
  cfg.n_mels = 40;
  cfg.n_coeffs = 40;
  return cfg;
}

std::size_t FrameCount(std::size_t n_samples, std::size_t win,
                       std::size_t hop) {
  if (win == 0 || hop == 0) throw GeometryError("window and hop must be > 0");
  if (n_samples < win) {
    throw GeometryError("clip of " + std::to_string(n_samples) +
                        " samples is shorter than one window (" +
                        std::to_string(win) + ")");
  }
  return 1 + (n_samples - win) / hop;
}

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double MelToHz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

MelFilterbank::MelFilterbank(std::size_t n_mels, std::size_t fft_size,
                             int sample_rate_hz, double fmin_hz,
                             double fmax_hz)
    : n_mels_(n_mels), fft_size_(fft_size), sample_rate_hz_(sample_rate_hz) {
  const double lo = HzToMel(fmin_hz);
  const double hi = HzToMel(fmax_hz);
  edges_mel_.resize(n_mels + 2);
  for (std::size_t i = 0; i < edges_mel_.size(); ++i) {
    edges_mel_[i] = lo + (hi - lo) * static_cast<double>(i) /
                             static_cast<double>(n_mels + 1);
  }
  weights_.assign(n_mels * bins(), 0.0);
  for (std::size_t m = 0; m < n_mels; ++m) {
    for (std::size_t k = 0; k < bins(); ++k) {
      const double hz = static_cast<double>(k) * sample_rate_hz_ /
                        static_cast<double>(fft_size_);
      weights_[m * bins() + k] = Response(m, hz);
    }
  }
}

double MelFilterbank::Response(std::size_t m, double hz) const {
  const double mel = HzToMel(hz);
  const double left = edges_mel_[m];
  const double center = edges_mel_[m + 1];
  const double right = edges_mel_[m + 2];
  if (mel <= left || mel >= right) return 0.0;
  if (mel <= center) return (mel - left) / (center - left);
  return (right - mel) / (right - center);
}

void MelFilterbank::Apply(std::span<const double> power,
                          std::span<double> out) const {
  for (std::size_t m = 0; m < n_mels_; ++m) {
    const double* w = weights_.data() + m * bins();
    double acc = 0.0;
    for (std::size_t k = 0; k < bins(); ++k) acc += w[k] * power[k];
    out[m] = acc;
  }
}

std::vector<double> PowerSpectrum(std::span<const double> frame,
                                  std::size_t fft_size) {
  if (frame.size() > fft_size) {
    throw DimensionError("frame longer than fft_size");
  }
  SpectrumAnalyzer analyzer(fft_size);
  std::vector<double> power(fft_size / 2 + 1);
  analyzer.Power(frame, power);
  return power;
}

std::vector<double> HannWindow(std::size_t length) {
  // Periodic form, as used for spectral analysis.
  std::vector<double> w(length);
  for (std::size_t n = 0; n < length; ++n) {
    w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                static_cast<double>(length));
  }
  return w;
}

std::vector<double> DctII(std::span<const double> in, std::size_t keep) {
  const std::vector<double> basis = DctBasis(in.size(), keep);
  std::vector<double> out(keep, 0.0);
  for (std::size_t k = 0; k < keep; ++k) {
    for (std::size_t i = 0; i < in.size(); ++i) out[k] += basis[k * in.size() + i] * in[i];
  }
  return out;
}

std::vector<double> MelEnergies(const Waveform& wave, const FeatureConfig& cfg,
                                std::size_t* frames_out) {
  cfg.Validate();
  if (wave.sample_rate_hz != cfg.sample_rate_hz) {
    throw ConfigError("waveform is " + std::to_string(wave.sample_rate_hz) +
                      " Hz but the recipe expects " +
                      std::to_string(cfg.sample_rate_hz) + " Hz");
  }
  const std::size_t win = cfg.window_length();
  const std::size_t hop = cfg.hop_length();
  const std::size_t frames = FrameCount(wave.samples.size(), win, hop);
  const std::size_t fft = cfg.resolved_fft_size();
  const std::vector<double> window = HannWindow(win);
  const MelFilterbank bank(cfg.n_mels, fft, cfg.sample_rate_hz, cfg.fmin_hz,
                           cfg.resolved_fmax());
  SpectrumAnalyzer analyzer(fft);
  std::vector<double> frame(win), power(fft / 2 + 1), mel(cfg.n_mels);
  std::vector<double> energies(cfg.n_mels * frames);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t i = 0; i < win; ++i) {
      frame[i] = wave.samples[t * hop + i] * window[i];
    }
    analyzer.Power(frame, power);
    bank.Apply(power, mel);
    for (std::size_t m = 0; m < cfg.n_mels; ++m) energies[m * frames + t] = mel[m];
  }
  if (frames_out) *frames_out = frames;
  return energies;
}

TFFeature LogMel(const Waveform& wave, const FeatureConfig& cfg) {
  TFFeature out;
  out.values = MelEnergies(wave, cfg, &out.frames);
  for (double& v : out.values) v = std::log(v + kLogFloor);
  out.bins = cfg.n_mels;
  out.kind = FeatureKind::kLogMel;
  return out;
}

TFFeature Mfcc(const Waveform& wave, const FeatureConfig& cfg) {
  const TFFeature logmel = LogMel(wave, cfg);
  TFFeature out;
  out.bins = cfg.n_coeffs;
  out.frames = logmel.frames;
  out.kind = FeatureKind::kMfcc;
  out.values.resize(out.bins * out.frames);
  const std::vector<double> basis = DctBasis(cfg.n_mels, cfg.n_coeffs);
  for (std::size_t k = 0; k < cfg.n_coeffs; ++k) {
    for (std::size_t m = 0; m < cfg.n_mels; ++m) {
      const double b = basis[k * cfg.n_mels + m];
      for (std::size_t t = 0; t < out.frames; ++t) {
        out.values[k * out.frames + t] += b * logmel.at(m, t);
      }
    }
  }
  return out;
}

TFFeature ExtractFeatures(const Waveform& wave, const FeatureConfig& cfg) {
  return cfg.kind == FeatureKind::kMfcc ? Mfcc(wave, cfg) : LogMel(wave, cfg);
}

TFFeature InstanceNorm(const TFFeature& x, std::size_t chunks,
                       std::span<const double> gamma,
                       std::span<const double> beta) {
  Tensor g, b;
  if (!gamma.empty() || !beta.empty()) {
    g = Tensor::FromData({gamma.size()}, {gamma.begin(), gamma.end()});
    b = Tensor::FromData({beta.size()}, {beta.begin(), beta.end()});
  }
  return TFFeature::FromTensor(ChunkedInstanceNorm(x.ToTensor(), chunks, g, b),
                               x.kind);
}

}  // namespace dynfilt
