// Copyright 2026 The dynfilt Authors
// SPDX-License-Identifier: Apache-2.0

#include "dynfilt/evalkit.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dynfilt/byte_io.h"
#include "dynfilt/errors.h"
#include "dynfilt/random.h"

namespace dynfilt {

double MeanSquare(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double s = 0;
  for (double v : x) s += v * v;
  return s / static_cast<double>(x.size());
}

double SnrDb(std::span<const double> speech, std::span<const double> noise) {
  return 10.0 * std::log10(MeanSquare(speech) / MeanSquare(noise));
}

MixResult MixAtSnr(const Waveform& speech, const Waveform& noise,
                   const MixSpec& spec) {
  MixResult r;
  r.speech_power = MeanSquare(speech.samples);
  if (std::isinf(spec.snr_db) && spec.snr_db > 0) {
    r.mixed = speech;
    return r;
  }
  if (!(r.speech_power > 0)) throw MixError("speech has zero power");
  if (std::isnan(spec.snr_db)) throw MixError("SNR is NaN");
  if (noise.samples.empty()) throw MixError("noise is empty");
  if (noise.sample_rate_hz != speech.sample_rate_hz) {
    throw MixError("sample rates differ: speech " +
                   std::to_string(speech.sample_rate_hz) + " Hz, noise " +
                   std::to_string(noise.sample_rate_hz) + " Hz");
  }
  const std::size_t n = speech.samples.size();
  Rng rng(spec.seed);
  r.noise_offset = rng.Below(noise.samples.size());
  std::vector<double> region(n);
  for (std::size_t i = 0; i < n; ++i) {
    region[i] = noise.samples[(r.noise_offset + i) % noise.samples.size()];
  }
  r.noise_power = MeanSquare(region);
  if (!(r.noise_power > 0)) throw MixError("noise has zero power over the mixed region");
  r.gain = std::sqrt(r.speech_power / (r.noise_power * std::pow(10.0, spec.snr_db / 10.0)));
  r.mixed.sample_rate_hz = speech.sample_rate_hz;
  r.mixed.samples.resize(n);
  double peak = 0;
  for (std::size_t i = 0; i < n; ++i) {
    r.mixed.samples[i] = speech.samples[i] + r.gain * region[i];
    peak = std::max(peak, std::abs(r.mixed.samples[i]));
  }
  if (peak > 1.0) {
    r.peak_scale = 1.0 / peak;
    for (double& v : r.mixed.samples) v *= r.peak_scale;
  }
  return r;
}

double Accuracy(std::span<const std::size_t> predictions,
                std::span<const std::size_t> labels) {
  if (predictions.size() != labels.size()) {
    throw MetricError("accuracy: " + std::to_string(predictions.size()) +
                      " predictions for " + std::to_string(labels.size()) + " labels");
  }
  if (labels.empty()) throw MetricError("accuracy: no examples");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predictions[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

AccuracySummary SummarizeRuns(std::span<const double> accuracies) {
  if (accuracies.empty()) throw MetricError("accuracy summary: no runs");
  AccuracySummary s;
  s.best = accuracies[0];
  for (double a : accuracies) {
    s.mean += a;
    s.best = std::max(s.best, a);
  }
  s.mean /= static_cast<double>(accuracies.size());
  return s;
}

std::vector<ErrorRates> ErrorRateSweep(std::span<const Trial> trials) {
  std::vector<double> targets, nontargets;
  for (const Trial& t : trials) {
    if (!std::isfinite(t.score)) throw MetricError("trial score is not finite");
    (t.is_target ? targets : nontargets).push_back(t.score);
  }
  if (targets.empty() || nontargets.empty()) {
    throw MetricError("need at least one target and one non-target trial");
  }
  std::sort(targets.begin(), targets.end());
  std::sort(nontargets.begin(), nontargets.end());
  std::vector<double> thresholds;
  thresholds.reserve(trials.size() + 1);
  std::merge(targets.begin(), targets.end(), nontargets.begin(), nontargets.end(),
             std::back_inserter(thresholds));
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  thresholds.push_back(std::numeric_limits<double>::infinity());

  const double nt = static_cast<double>(targets.size());
  const double nn = static_cast<double>(nontargets.size());
  std::vector<ErrorRates> out;
  out.reserve(thresholds.size());
  std::size_t below_t = 0, below_n = 0;
  for (double th : thresholds) {
    while (below_t < targets.size() && targets[below_t] < th) ++below_t;
    while (below_n < nontargets.size() && nontargets[below_n] < th) ++below_n;
    out.push_back({th, (nn - static_cast<double>(below_n)) / nn,
                   static_cast<double>(below_t) / nt});
  }
  return out;
}

double Eer(std::span<const Trial> trials) {
  const std::vector<ErrorRates> r = ErrorRateSweep(trials);
  // far - frr falls from 1 at the lowest threshold to -1 at +inf.
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double d = r[i].far - r[i].frr;
    if (d == 0) return r[i].far;
    if (d < 0) {
      const double d0 = r[i - 1].far - r[i - 1].frr;
      const double a = d0 / (d0 - d);
      return r[i - 1].far + a * (r[i].far - r[i - 1].far);
    }
  }
  throw MetricError("error-rate sweep never crossed");
}

double MinDcf(std::span<const Trial> trials, const DcfParams& params) {
  if (!(params.p_target > 0 && params.p_target < 1)) {
    throw MetricError("p_target must lie in (0, 1)");
  }
  if (!(params.c_miss > 0 && params.c_fa > 0)) throw MetricError("costs must be positive");
  const double miss = params.c_miss * params.p_target;
  const double fa = params.c_fa * (1 - params.p_target);
  double best = std::numeric_limits<double>::infinity();
  for (const ErrorRates& e : ErrorRateSweep(trials)) {
    best = std::min(best, miss * e.frr + fa * e.far);
  }
  return best / std::min(miss, fa);
}

void WriteTrials(const std::filesystem::path& path, std::span<const Trial> trials) {
  std::ostringstream out;
  out.precision(17);
  out << "score,is_target\n";
  for (const Trial& t : trials) out << t.score << ',' << (t.is_target ? 1 : 0) << '\n';
  bytes::WriteFileAtomic(path, out.str());
}

std::vector<Trial> ReadTrials(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "score,is_target") {
    throw IngestionError(path.string() + ": expected header 'score,is_target'");
  }
  std::vector<Trial> trials;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto comma = line.find(',');
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    if (comma == std::string::npos) throw IngestionError(where + "missing comma");
    Trial t{};
    try {
      std::size_t used = 0;
      t.score = std::stod(line.substr(0, comma), &used);
      if (used != comma) throw std::invalid_argument("trailing text");
    } catch (const std::exception&) {
      throw IngestionError(where + "bad score '" + line.substr(0, comma) + "'");
    }
    const std::string flag = line.substr(comma + 1);
    if (flag == "1") {
      t.is_target = true;
    } else if (flag == "0") {
      t.is_target = false;
    } else {
      throw IngestionError(where + "is_target must be 0 or 1, got '" + flag + "'");
    }
    trials.push_back(t);
  }
  return trials;
}

std::string AccuracyGrid::ToCsv() const {
  std::ostringstream out;
  out << "noise,clean";
  for (double s : snrs_db) out << ',' << s << "dB";
  out << '\n';
  out.precision(6);
  out << std::fixed;
  for (std::size_t i = 0; i < noises.size(); ++i) {
    out << noises[i] << ',' << clean;
    for (std::size_t j = 0; j < snrs_db.size(); ++j) out << ',' << cells.at(i).at(j);
    out << '\n';
  }
  return out.str();
}

}  // namespace dynfilt
