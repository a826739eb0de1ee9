// Copyright 2026 The dynfilt Authors
// SPDX-License-Identifier: Apache-2.0

// Small task models on top of the dynamic filter front-end: a keyword
// classifier and a speaker-embedding network, plus training and trial
// scoring.

#ifndef DYNFILT_TASKHEADS_H_
#define DYNFILT_TASKHEADS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dynfilt/dynfilter.h"
#include "dynfilt/features.h"
#include "dynfilt/param_registry.h"
#include "dynfilt/random.h"
#include "dynfilt/tensor.h"
#include "dynfilt/wav.h"

namespace dynfilt {

enum class Task { kKws, kSv };

struct ConvBlockConfig {
  std::size_t out_channels = 8;
  std::size_t kernel = 3;
  std::size_t stride = 2;
};

struct BackboneConfig {
  std::vector<ConvBlockConfig> conv_blocks{{8, 3, 2}, {16, 3, 2}};
  std::size_t embed_dim = 32;
  std::size_t n_classes = 4;

  // Throws ConfigError on bad values and GeometryError when the blocks do
  // not chain from a [freq_bins, frames] input.
  void Validate(std::size_t freq_bins, std::size_t frames) const;
  // (channels, height, width) after the last block.
  struct Extent {
    std::size_t channels, height, width;
  };
  Extent OutputExtent(std::size_t freq_bins, std::size_t frames) const;
};

struct ModelConfig {
  Task task = Task::kKws;
  bool use_frontend = true;
  // Parameter-free chunked instance norm on the raw feature.
  bool input_norm = true;
  std::size_t input_norm_chunks = 2;
  FrontEndConfig frontend;
  BackboneConfig backbone;
};

// Owns every learnable tensor; the registry shares their storage.
class Model {
 public:
  // Uniform fan-in initialization from `seed`.
  Model(const ModelConfig& config, std::uint64_t seed);
  // All weights and biases zero, norm gains one.
  static Model Zeros(const ModelConfig& config);

  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;

  const ModelConfig& config() const { return config_; }
  ParamRegistry& params() { return registry_; }
  const ParamRegistry& params() const { return registry_; }
  const FrontEndParams& frontend() const { return frontend_; }

  // Input norm and front-end, [F, T] -> [F, T].
  Tensor Prepare(const Tensor& x) const;
  // Class logits. For kSv these come from the speaker classifier on top of
  // the embedding.
  Tensor Logits(const Tensor& x) const;
  // Speaker embedding, length embed_dim. Only for kSv.
  Tensor Embed(const Tensor& x) const;
  std::size_t Predict(const Tensor& x) const;

 private:
  explicit Model(const ModelConfig& config);
  void Register();
  Tensor Backbone(const Tensor& prepared) const;  // [C, H, W]

  ModelConfig config_;
  FrontEndParams frontend_;
  std::vector<Tensor> block_weights_;
  std::vector<Tensor> block_biases_;
  Tensor embed_weight_, embed_bias_;  // kSv only
  Tensor head_weight_, head_bias_;
  ParamRegistry registry_;
};

struct Example {
  Tensor feature;  // [F, T]
  std::size_t label = 0;
  std::string id;
};

struct TrainConfig {
  std::size_t batch_size = 16;
  std::size_t steps = 1000;
  double lr = 1e-3;
  std::size_t lr_decay_every = 10000;
  double lr_decay_factor = 0.1;
  std::uint64_t seed = 0;
  // Written after the last step when non-empty, and every
  // checkpoint_every steps when that is non-zero.
  std::filesystem::path checkpoint_path;
  std::size_t checkpoint_every = 0;

  void Validate() const;
  // Learning rate of 1-based step `step`.
  double LearningRate(std::size_t step) const;
};

struct LossRecord {
  std::size_t step;
  double loss;
  double lr;
};

struct TrainResult {
  std::vector<LossRecord> trace;
};

// Adam on mean cross-entropy over shuffled minibatches. The example order is
// a seeded Fisher-Yates permutation, redrawn every epoch. A non-finite value
// raises TrainingError naming the step and the batch ids.
TrainResult Train(Model& model, const std::vector<Example>& data,
                  const TrainConfig& cfg);

double TrainingAccuracy(const Model& model, const std::vector<Example>& data);

void WriteLossTrace(const std::filesystem::path& path, const TrainResult& result);

// Cosine similarity; 0 when either vector is all zeros.
double Cosine(std::span<const double> a, std::span<const double> b);

// Speaker-verification trial protocol.
inline constexpr std::size_t kTrialSegments = 10;
inline constexpr double kTrialSegmentSeconds = 2.0;

// `count` evenly spaced starts from 0 to n - length inclusive, rounded to
// whole samples. Throws ProtocolError when n < length.
std::vector<std::size_t> SegmentStarts(std::size_t n_samples, std::size_t length,
                                       std::size_t count);

struct TrialCounters {
  std::size_t segments_a = 0;
  std::size_t segments_b = 0;
  std::size_t embeddings = 0;
  std::size_t pairs = 0;
};

using SegmentEmbedder = std::function<std::vector<double>(const Waveform&)>;

// Mean cosine over all segment pairs of the two utterances.
double ScoreTrial(const Waveform& a, const Waveform& b,
                  const SegmentEmbedder& embed, TrialCounters* counters = nullptr);

// Log-mel, per-row norm, then model.Embed.
SegmentEmbedder ModelEmbedder(const Model& model, const FeatureConfig& features);

// Synthetic four-class set: 0 steady tone, 1 rising chirp, 2 falling chirp,
// 3 band-limited noise. One second at 16 kHz per clip, classes interleaved.
struct LabeledClip {
  Waveform wave;
  std::size_t label;
  std::string id;
};

inline constexpr std::size_t kSyntheticClasses = 4;
std::vector<LabeledClip> MakeSyntheticClips(std::size_t count, std::uint64_t seed);
Waveform SynthesizeClip(std::size_t label, Rng& rng, double seconds = 1.0,
                        int sample_rate_hz = 16000);

}  // namespace dynfilt

#endif  // DYNFILT_TASKHEADS_H_
