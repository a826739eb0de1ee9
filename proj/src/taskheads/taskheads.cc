// Copyright 2026 The dynfilt Authors
// SPDX-License-Identifier: Apache-2.0

#include "dynfilt/taskheads.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "dynfilt/adam.h"
#include "dynfilt/byte_io.h"
#include "dynfilt/errors.h"
#include "dynfilt/ops.h"

namespace dynfilt {

namespace {

ConvSpec BlockSpec(const ConvBlockConfig& block) {
  ConvSpec spec;
  spec.kernel_h = spec.kernel_w = block.kernel;
  spec.stride_h = spec.stride_w = block.stride;
  spec.pad_mode = PadMode::kSameBoth;
  return spec;
}

Tensor Uniform(Shape shape, std::size_t fan_in, Rng& rng) {
  const double a = std::sqrt(1.0 / static_cast<double>(fan_in));
  std::vector<double> v(NumElements(shape));
  rng.FillUniform(v, -a, a);
  return Tensor::FromData(std::move(shape), std::move(v), true);
}

std::size_t EmbedInputs(const BackboneConfig& bb, std::size_t freq_bins) {
  // Temporal pooling keeps the frequency axis, so the width is irrelevant.
  const auto e = bb.OutputExtent(freq_bins, 1);
  return e.channels * e.height;
}

}  // namespace

BackboneConfig::Extent BackboneConfig::OutputExtent(std::size_t freq_bins,
                                                    std::size_t frames) const {
  Extent e{1, freq_bins, frames};
  for (const ConvBlockConfig& block : conv_blocks) {
    const auto [h, w] = Conv2dOutputSize(e.height, e.width, BlockSpec(block));
    e = {block.out_channels, h, w};
  }
  return e;
}

void BackboneConfig::Validate(std::size_t freq_bins, std::size_t frames) const {
  if (n_classes < 2) throw ConfigError("backbone: n_classes must be at least 2");
  if (embed_dim == 0) throw ConfigError("backbone: embed_dim must be positive");
  if (conv_blocks.empty()) throw ConfigError("backbone: need at least one conv block");
  for (const ConvBlockConfig& b : conv_blocks) {
    if (b.out_channels == 0 || b.kernel == 0 || b.stride == 0) {
      throw ConfigError("backbone: conv block fields must be positive");
    }
  }
  OutputExtent(freq_bins, frames);
}

Model::Model(const ModelConfig& config) : config_(config) {
  config_.backbone.Validate(config_.frontend.freq_bins, 1);
  if (config_.input_norm && config_.input_norm_chunks == 0) {
    throw ConfigError("model: input_norm_chunks must be positive");
  }
}

Model::Model(const ModelConfig& config, std::uint64_t seed) : Model(config) {
  Rng rng(seed);
  frontend_ = InitFrontEndParams(config_.frontend, rng);
  std::size_t in_channels = 1;
  for (const ConvBlockConfig& b : config_.backbone.conv_blocks) {
    const std::size_t fan_in = in_channels * b.kernel * b.kernel;
    block_weights_.push_back(
        Uniform({b.out_channels, in_channels, b.kernel, b.kernel}, fan_in, rng));
    block_biases_.push_back(Tensor::Zeros({b.out_channels}, true));
    in_channels = b.out_channels;
  }
  const BackboneConfig& bb = config_.backbone;
  if (config_.task == Task::kSv) {
    const std::size_t n = EmbedInputs(bb, config_.frontend.freq_bins);
    embed_weight_ = Uniform({bb.embed_dim, n}, n, rng);
    embed_bias_ = Tensor::Zeros({bb.embed_dim}, true);
    head_weight_ = Uniform({bb.n_classes, bb.embed_dim}, bb.embed_dim, rng);
  } else {
    head_weight_ = Uniform({bb.n_classes, in_channels}, in_channels, rng);
  }
  head_bias_ = Tensor::Zeros({bb.n_classes}, true);
  Register();
}

Model Model::Zeros(const ModelConfig& config) {
  Model m(config);
  m.frontend_ = ZeroFrontEndParams(m.config_.frontend);
  std::size_t in_channels = 1;
  for (const ConvBlockConfig& b : m.config_.backbone.conv_blocks) {
    m.block_weights_.push_back(
        Tensor::Zeros({b.out_channels, in_channels, b.kernel, b.kernel}, true));
    m.block_biases_.push_back(Tensor::Zeros({b.out_channels}, true));
    in_channels = b.out_channels;
  }
  const BackboneConfig& bb = m.config_.backbone;
  if (m.config_.task == Task::kSv) {
    const std::size_t n = EmbedInputs(bb, m.config_.frontend.freq_bins);
    m.embed_weight_ = Tensor::Zeros({bb.embed_dim, n}, true);
    m.embed_bias_ = Tensor::Zeros({bb.embed_dim}, true);
    m.head_weight_ = Tensor::Zeros({bb.n_classes, bb.embed_dim}, true);
  } else {
    m.head_weight_ = Tensor::Zeros({bb.n_classes, in_channels}, true);
  }
  m.head_bias_ = Tensor::Zeros({bb.n_classes}, true);
  m.Register();
  return m;
}

void Model::Register() {
  if (config_.use_frontend) registry_.Append(frontend_.Named());
  for (std::size_t i = 0; i < block_weights_.size(); ++i) {
    const std::string prefix = "backbone.block" + std::to_string(i);
    registry_.Add(prefix + ".weight", block_weights_[i]);
    registry_.Add(prefix + ".bias", block_biases_[i]);
  }
  if (config_.task == Task::kSv) {
    registry_.Add("head.embed.weight", embed_weight_);
    registry_.Add("head.embed.bias", embed_bias_);
  }
  registry_.Add("head.fc.weight", head_weight_);
  registry_.Add("head.fc.bias", head_bias_);
}

Tensor Model::Prepare(const Tensor& x) const {
  if (x.rank() != 2 || x.dim(0) != config_.frontend.freq_bins) {
    throw DimensionError("model expects a [" +
                         std::to_string(config_.frontend.freq_bins) +
                         ", T] feature, got " + ShapeToString(x.shape()));
  }
  Tensor y = x;
  if (config_.input_norm) {
    y = ChunkedInstanceNorm(y, config_.input_norm_chunks, {}, {},
                            config_.frontend.norm_eps);
  }
  if (config_.use_frontend) y = FrontEnd(y, frontend_, config_.frontend);
  return y;
}

Tensor Model::Backbone(const Tensor& prepared) const {
  Tensor h = Reshape(prepared, {1, prepared.dim(0), prepared.dim(1)});
  for (std::size_t i = 0; i < block_weights_.size(); ++i) {
    h = Conv2d(h, block_weights_[i], BlockSpec(config_.backbone.conv_blocks[i]));
    h = Swish(AddChannelBias(h, block_biases_[i]));
  }
  return h;
}

Tensor Model::Logits(const Tensor& x) const {
  if (config_.task == Task::kSv) {
    return Add(MatVec(head_weight_, Swish(Embed(x))), head_bias_);
  }
  const Tensor h = Backbone(Prepare(x));
  const Tensor pooled = MeanLastAxis(Reshape(h, {h.dim(0), h.dim(1) * h.dim(2)}));
  return Add(MatVec(head_weight_, pooled), head_bias_);
}

Tensor Model::Embed(const Tensor& x) const {
  if (config_.task != Task::kSv) {
    throw ContractError("Embed needs a speaker-verification model");
  }
  const Tensor h = Backbone(Prepare(x));
  const Tensor pooled = MeanLastAxis(Reshape(h, {h.dim(0) * h.dim(1), h.dim(2)}));
  return Add(MatVec(embed_weight_, pooled), embed_bias_);
}

std::size_t Model::Predict(const Tensor& x) const {
  const Tensor z = Logits(x);
  const auto d = z.data();
  return static_cast<std::size_t>(std::max_element(d.begin(), d.end()) - d.begin());
}

void TrainConfig::Validate() const {
  if (batch_size == 0 || steps == 0 || lr_decay_every == 0) {
    throw ConfigError("train: batch_size, steps and lr_decay.every must be positive");
  }
  if (!(lr > 0)) throw ConfigError("train: lr must be positive");
  if (!(lr_decay_factor > 0 && lr_decay_factor <= 1)) {
    throw ConfigError("train: lr_decay.factor must lie in (0, 1]");
  }
}

double TrainConfig::LearningRate(std::size_t step) const {
  const std::size_t drops = (step - 1) / lr_decay_every;
  return lr * std::pow(lr_decay_factor, static_cast<double>(drops));
}

TrainResult Train(Model& model, const std::vector<Example>& data,
                  const TrainConfig& cfg) {
  cfg.Validate();
  if (data.empty()) throw ContractError("train: empty dataset");
  for (const Example& e : data) {
    if (e.label >= model.config().backbone.n_classes) {
      throw ContractError("train: label " + std::to_string(e.label) + " of '" +
                          e.id + "' is out of range");
    }
  }
  Rng rng(cfg.seed);
  std::vector<std::size_t> order(data.size());
  std::size_t cursor = order.size();
  auto next_index = [&] {
    if (cursor == order.size()) {
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      for (std::size_t i = order.size() - 1; i > 0; --i) {
        std::swap(order[i], order[rng.Below(i + 1)]);
      }
      cursor = 0;
    }
    return order[cursor++];
  };

  std::vector<Tensor> params = model.params().Tensors();
  AdamState adam;
  TrainResult result;
  result.trace.reserve(cfg.steps);
  const std::size_t batch = std::min(cfg.batch_size, data.size());
  std::vector<std::size_t> ids(batch);
  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    for (std::size_t& i : ids) i = next_index();
    adam.lr = cfg.LearningRate(step);
    double loss_value = 0;
    try {
      std::vector<Tensor> losses;
      losses.reserve(batch);
      for (std::size_t i : ids) {
        losses.push_back(CrossEntropy(model.Logits(data[i].feature), data[i].label));
      }
      const Tensor loss = Scale(AddN(losses), 1.0 / static_cast<double>(batch));
      loss_value = loss.item();
      Backward(loss);
      AdamStep(params, adam);
    } catch (const NumericError& e) {
      std::ostringstream msg;
      msg << "non-finite value at step " << step << ", batch [";
      for (std::size_t k = 0; k < ids.size(); ++k) {
        msg << (k ? ", " : "") << data[ids[k]].id;
      }
      msg << "]: " << e.what();
      throw TrainingError(msg.str());
    }
    result.trace.push_back({step, loss_value, adam.lr});
    if (!cfg.checkpoint_path.empty() &&
        (step == cfg.steps ||
         (cfg.checkpoint_every != 0 && step % cfg.checkpoint_every == 0))) {
      SaveCheckpoint(cfg.checkpoint_path, model.params());
    }
  }
  return result;
}

double TrainingAccuracy(const Model& model, const std::vector<Example>& data) {
  if (data.empty()) throw ContractError("accuracy: empty dataset");
  std::size_t hits = 0;
  for (const Example& e : data) hits += model.Predict(e.feature) == e.label;
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

void WriteLossTrace(const std::filesystem::path& path, const TrainResult& result) {
  std::ostringstream out;
  out.precision(17);
  out << "step,loss,lr\n";
  for (const LossRecord& r : result.trace) {
    out << r.step << ',' << r.loss << ',' << r.lr << '\n';
  }
  bytes::WriteFileAtomic(path, out.str());
}

double Cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionError("cosine: lengths " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()));
  }
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<std::size_t> SegmentStarts(std::size_t n_samples, std::size_t length,
                                       std::size_t count) {
  if (count == 0 || length == 0) throw ContractError("segments: empty request");
  if (n_samples < length) {
    throw ProtocolError("utterance of " + std::to_string(n_samples) +
                        " samples is shorter than one " + std::to_string(length) +
                        "-sample segment");
  }
  const double span = static_cast<double>(n_samples - length);
  std::vector<std::size_t> starts(count, 0);
  if (count == 1) return starts;
  for (std::size_t i = 0; i < count; ++i) {
    starts[i] = static_cast<std::size_t>(
        std::llround(span * static_cast<double>(i) / static_cast<double>(count - 1)));
  }
  return starts;
}

double ScoreTrial(const Waveform& a, const Waveform& b,
                  const SegmentEmbedder& embed, TrialCounters* counters) {
  if (a.sample_rate_hz != b.sample_rate_hz) {
    throw ProtocolError("trial utterances have different sample rates");
  }
  const auto length = static_cast<std::size_t>(
      std::llround(kTrialSegmentSeconds * a.sample_rate_hz));
  auto embed_all = [&](const Waveform& w, std::size_t* n_segments) {
    std::vector<std::vector<double>> out;
    for (std::size_t start : SegmentStarts(w.samples.size(), length, kTrialSegments)) {
      Waveform seg;
      seg.sample_rate_hz = w.sample_rate_hz;
      seg.samples.assign(w.samples.begin() + static_cast<std::ptrdiff_t>(start),
                         w.samples.begin() + static_cast<std::ptrdiff_t>(start + length));
      out.push_back(embed(seg));
      if (counters) {
        ++*n_segments;
        ++counters->embeddings;
      }
    }
    return out;
  };
  std::size_t sink = 0;
  const auto ea = embed_all(a, counters ? &counters->segments_a : &sink);
  const auto eb = embed_all(b, counters ? &counters->segments_b : &sink);
  double total = 0;
  for (const auto& x : ea) {
    for (const auto& y : eb) {
      total += Cosine(x, y);
      if (counters) ++counters->pairs;
    }
  }
  return total / static_cast<double>(ea.size() * eb.size());
}

SegmentEmbedder ModelEmbedder(const Model& model, const FeatureConfig& features) {
  return [&model, features](const Waveform& segment) {
    const TFFeature f = InstanceNorm(ExtractFeatures(segment, features), 1);
    const Tensor e = model.Embed(f.ToTensor());
    return std::vector<double>(e.data().begin(), e.data().end());
  };
}

Waveform SynthesizeClip(std::size_t label, Rng& rng, double seconds,
                        int sample_rate_hz) {
  if (label >= kSyntheticClasses) {
    throw ContractError("synthetic label " + std::to_string(label) + " out of range");
  }
  Waveform w;
  w.sample_rate_hz = sample_rate_hz;
  const auto n = static_cast<std::size_t>(seconds * sample_rate_hz);
  w.samples.resize(n);
  const double fs = sample_rate_hz;
  const double amplitude = rng.Uniform(0.2, 0.6);
  const double phase0 = rng.Uniform(0, 2 * std::numbers::pi);
  switch (label) {
    case 0: {
      const double f = rng.Uniform(300, 3000);
      for (std::size_t i = 0; i < n; ++i) {
        w.samples[i] = amplitude * std::sin(phase0 + 2 * std::numbers::pi * f * i / fs);
      }
      break;
    }
    case 1:
    case 2: {
      double f0 = rng.Uniform(200, 800), f1 = rng.Uniform(2000, 4000);
      if (label == 2) std::swap(f0, f1);
      const double rate = (f1 - f0) / seconds;
      for (std::size_t i = 0; i < n; ++i) {
        const double t = i / fs;
        w.samples[i] = amplitude *
                       std::sin(phase0 + 2 * std::numbers::pi * (f0 * t + 0.5 * rate * t * t));
      }
      break;
    }
    case 3: {
      // White noise through a constant-peak-gain biquad band-pass.
      const double fc = rng.Uniform(500, 3000), q = rng.Uniform(1.5, 4.0);
      const double w0 = 2 * std::numbers::pi * fc / fs, alpha = std::sin(w0) / (2 * q);
      const double a0 = 1 + alpha;
      const double b0 = alpha / a0, b2 = -alpha / a0;
      const double a1 = -2 * std::cos(w0) / a0, a2 = (1 - alpha) / a0;
      double x1 = 0, x2 = 0, y1 = 0, y2 = 0, peak = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const double x = rng.Uniform(-1, 1);
        const double y = b0 * x + b2 * x2 - a1 * y1 - a2 * y2;
        x2 = x1;
        x1 = x;
        y2 = y1;
        y1 = y;
        w.samples[i] = y;
        peak = std::max(peak, std::abs(y));
      }
      for (double& s : w.samples) s *= amplitude / peak;
      break;
    }
  }
  for (double& s : w.samples) s += rng.Uniform(-0.01, 0.01);
  return w;
}

std::vector<LabeledClip> MakeSyntheticClips(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<LabeledClip> clips;
  clips.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t label = i % kSyntheticClasses;
    char id[32];
    std::snprintf(id, sizeof(id), "synth_%04zu_c%zu", i, label);
    clips.push_back({SynthesizeClip(label, rng), label, id});
  }
  return clips;
}

}  // namespace dynfilt
