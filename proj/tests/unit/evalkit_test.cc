// Copyright 2026 The dynfilt Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "dynfilt/errors.h"
#include "dynfilt/evalkit.h"
#include "dynfilt/random.h"
#include "oracles.h"

namespace dynfilt {
namespace {

Waveform RandomWave(std::size_t n, double scale, Rng& rng) {
  Waveform w;
  w.samples.resize(n);
  for (double& s : w.samples) s = scale * rng.Normal();
  return w;
}

std::vector<Trial> RandomTrials(std::size_t n, Rng& rng, bool ties) {
  std::vector<Trial> out;
  for (std::size_t i = 0; i < n; ++i) {
    const bool target = rng.Below(3) == 0 || i == 0;
    double s = rng.Normal() + (target ? 1.0 : 0.0);
    if (ties) s = std::round(s * 4) / 4;
    out.push_back({s, i == 1 ? false : target});
  }
  return out;
}

std::vector<oracle::ScoredTrial> ToOracle(const std::vector<Trial>& trials) {
  std::vector<oracle::ScoredTrial> out;
  for (const Trial& t : trials) out.push_back({t.score, t.is_target});
  return out;
}

TEST(MixTest, EqualPowersAtZeroDbUseUnitGain) {
  Waveform speech, noise;
  for (int i = 0; i < 1000; ++i) {
    speech.samples.push_back(i % 2 ? 0.5 : -0.5);
    noise.samples.push_back(i % 3 ? 0.5 : -0.5);
  }
  const MixResult r = MixAtSnr(speech, noise, {0.0, 1});
  EXPECT_NEAR(r.gain, 1.0, 1e-12);
  EXPECT_EQ(r.peak_scale, 1.0);
  std::vector<double> scaled(1000);
  for (std::size_t i = 0; i < 1000; ++i) {
    scaled[i] = r.mixed.samples[i] - speech.samples[i];
  }
  EXPECT_NEAR(SnrDb(speech.samples, scaled), 0.0, 1e-9);
}

TEST(MixTest, GainFollowsClosedForm) {
  Rng rng(2);
  const Waveform speech = RandomWave(4000, 0.1, rng);
  const Waveform noise = RandomWave(4000, 0.05, rng);
  const MixResult r = MixAtSnr(speech, noise, {20.0, 5});
  const double expected = std::pow(10.0, -1.0) * std::sqrt(r.speech_power / r.noise_power);
  EXPECT_NEAR(r.gain, expected, 1e-14);
}

// Realized SNR re-measured from the output, before any rescale.
TEST(MixTest, RealizedSnrWithinTolerance) {
  Rng rng(3);
  for (int pair = 0; pair < 100; ++pair) {
    const Waveform speech = RandomWave(1000 + rng.Below(8000), rng.Uniform(0.01, 0.3), rng);
    const Waveform noise = RandomWave(500 + rng.Below(12000), rng.Uniform(0.01, 0.5), rng);
    for (double snr : {20.0, 15.0, 10.0, 5.0, 0.0}) {
      const MixResult r = MixAtSnr(speech, noise, {snr, rng.NextU64()});
      std::vector<double> s(speech.samples.size()), n(s.size());
      for (std::size_t i = 0; i < s.size(); ++i) {
        s[i] = speech.samples[i] * r.peak_scale;
        n[i] = r.mixed.samples[i] - s[i];
      }
      EXPECT_NEAR(SnrDb(s, n), snr, 0.05);
      for (double v : r.mixed.samples) ASSERT_LE(std::abs(v), 1.0);
    }
  }
}

TEST(MixTest, LoudMixIsRescaledNotClipped) {
  Waveform speech, noise;
  speech.samples.assign(100, 0.9);
  for (int i = 0; i < 100; ++i) noise.samples.push_back(i % 2 ? 1.0 : -1.0);
  const MixResult r = MixAtSnr(speech, noise, {0.0, 7});
  EXPECT_LT(r.peak_scale, 1.0);
  double peak = 0;
  for (double v : r.mixed.samples) peak = std::max(peak, std::abs(v));
  EXPECT_NEAR(peak, 1.0, 1e-12);
}

TEST(MixTest, CleanSentinelReturnsSpeechUnchanged) {
  Rng rng(4);
  const Waveform speech = RandomWave(3000, 0.2, rng);
  const Waveform noise = RandomWave(100, 0.2, rng);
  const MixResult r = MixAtSnr(speech, noise, {kCleanSnr, 9});
  EXPECT_EQ(r.mixed.samples, speech.samples);
}

TEST(MixTest, ShortNoiseIsLoopedFromSeededOffset) {
  Waveform speech, noise;
  speech.samples.assign(10, 0.1);
  noise.samples = {0.1, -0.2, 0.3};
  const MixResult a = MixAtSnr(speech, noise, {6.0, 11});
  const MixResult b = MixAtSnr(speech, noise, {6.0, 11});
  EXPECT_EQ(a.mixed.samples, b.mixed.samples);
  for (std::size_t i = 0; i < 10; ++i) {
    const double n = noise.samples[(a.noise_offset + i) % 3];
    EXPECT_NEAR(a.mixed.samples[i], 0.1 + a.gain * n, 1e-15);
  }
}

TEST(MixTest, SilentInputsAreMixErrors) {
  Waveform speech, silent;
  speech.samples.assign(10, 0.1);
  silent.samples.assign(10, 0.0);
  EXPECT_THROW(MixAtSnr(speech, silent, {10.0, 1}), MixError);
  EXPECT_THROW(MixAtSnr(silent, speech, {10.0, 1}), MixError);
  Waveform other_rate = speech;
  other_rate.sample_rate_hz = 8000;
  EXPECT_THROW(MixAtSnr(speech, other_rate, {10.0, 1}), MixError);
}

TEST(AccuracyTest, KnownValues) {
  const std::vector<std::size_t> labels{1, 2, 3, 0};
  EXPECT_EQ(Accuracy(labels, labels), 1.0);
  EXPECT_EQ(Accuracy(std::vector<std::size_t>{0, 0, 0, 1}, labels), 0.0);
  EXPECT_EQ(Accuracy(std::vector<std::size_t>{1, 0, 3, 0}, labels), 0.75);
  EXPECT_THROW(Accuracy(std::vector<std::size_t>{1}, labels), MetricError);
  EXPECT_THROW(Accuracy({}, {}), MetricError);
}

TEST(AccuracyTest, RandomSetsMatchCounting) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.Below(500);
    std::vector<std::size_t> p(n), l(n);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = rng.Below(4);
      l[i] = rng.Below(4);
      if (p[i] == l[i]) ++hits;
    }
    EXPECT_NEAR(Accuracy(p, l), static_cast<double>(hits) / n, 1e-15);
  }
}

TEST(AccuracyTest, SummaryOfRuns) {
  const std::vector<double> runs{0.9, 0.95, 0.85, 0.92};
  const AccuracySummary s = SummarizeRuns(runs);
  EXPECT_NEAR(s.mean, 0.905, 1e-15);
  EXPECT_EQ(s.best, 0.95);
}

TEST(EerTest, SeparatedAndIndistinguishable) {
  const std::vector<Trial> separated{{0.9, true}, {0.8, true}, {0.1, false}, {0.2, false}};
  EXPECT_EQ(Eer(separated), 0.0);
  EXPECT_EQ(MinDcf(separated), 0.0);
  std::vector<Trial> same;
  for (double s : {0.1, 0.4, 0.7, 0.9}) {
    same.push_back({s, true});
    same.push_back({s, false});
  }
  EXPECT_NEAR(Eer(same), 0.5, 1e-15);
}

TEST(EerTest, SingleClassIsAMetricError) {
  const std::vector<Trial> only_targets{{0.9, true}, {0.8, true}};
  EXPECT_THROW(Eer(only_targets), MetricError);
  EXPECT_THROW(MinDcf(only_targets), MetricError);
}

TEST(MinDcfTest, AllScoresEqualCostsOne) {
  const std::vector<Trial> flat{{0.5, true}, {0.5, false}, {0.5, false}, {0.5, true}};
  EXPECT_NEAR(MinDcf(flat), 1.0, 1e-15);
  EXPECT_NEAR(MinDcf(flat, {0.5, 2.0, 1.0}), 1.0, 1e-15);
  EXPECT_THROW(MinDcf(flat, {1.5, 1, 1}), MetricError);
}

TEST(MetricOracleTest, RandomSetsMatchBruteForce) {
  Rng rng(6);
  for (int trial = 0; trial < 150; ++trial) {
    const std::size_t n = trial == 0 ? 200 : 2 + rng.Below(499);
    const auto trials = RandomTrials(n, rng, trial % 3 == 0);
    const auto ref = ToOracle(trials);
    EXPECT_NEAR(Eer(trials), oracle::BruteForceEer(ref), 1e-9);
    EXPECT_NEAR(MinDcf(trials), oracle::BruteForceMinDcf(ref, 0.05, 1, 1), 1e-9);
    EXPECT_NEAR(MinDcf(trials, {0.3, 2, 0.5}), oracle::BruteForceMinDcf(ref, 0.3, 2, 0.5),
                1e-9);
  }
}

TEST(MetricPropertyTest, InvariantUnderMonotoneTransform) {
  Rng rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const auto trials = RandomTrials(300, rng, trial % 2 == 0);
    std::vector<Trial> warped = trials;
    for (Trial& t : warped) t.score = std::exp(2 * t.score) - 5;
    EXPECT_NEAR(Eer(warped), Eer(trials), 1e-12);
    EXPECT_NEAR(MinDcf(warped), MinDcf(trials), 1e-12);
  }
}

TEST(MetricPropertyTest, NegationWithSwappedLabelsKeepsEer) {
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const auto trials = RandomTrials(250, rng, false);
    std::vector<Trial> mirrored = trials;
    for (Trial& t : mirrored) {
      t.score = -t.score;
      t.is_target = !t.is_target;
    }
    EXPECT_NEAR(Eer(mirrored), Eer(trials), 1e-12);
  }
}

TEST(TrialFileTest, RoundTripAndValidation) {
  Rng rng(9);
  const auto trials = RandomTrials(50, rng, false);
  const auto path = std::filesystem::temp_directory_path() / "dynfilt_trials.csv";
  WriteTrials(path, trials);
  const auto back = ReadTrials(path);
  ASSERT_EQ(back.size(), trials.size());
  for (std::size_t i = 0; i < trials.size(); ++i) {
    EXPECT_EQ(back[i].score, trials[i].score);
    EXPECT_EQ(back[i].is_target, trials[i].is_target);
  }
  { std::ofstream(path) << "score,is_target\n0.5,yes\n"; }
  EXPECT_THROW(ReadTrials(path), IngestionError);
  { std::ofstream(path) << "a,b\n"; }
  EXPECT_THROW(ReadTrials(path), IngestionError);
}

TEST(AccuracyGridTest, TableLayout) {
  AccuracyGrid g;
  g.noises = {"babble", "street", "hum"};
  g.snrs_db = {20, 15, 10, 5, 0};
  g.clean = 0.9;
  g.cells.assign(3, std::vector<double>(5, 0.5));
  const std::string csv = g.ToCsv();
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "noise,clean,20dB,15dB,10dB,5dB,0dB");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 6);
  }
  EXPECT_EQ(rows, 3);
}

}  // namespace
}  // namespace dynfilt
