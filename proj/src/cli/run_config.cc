// Copyright 2026 The dynfilt Authors
// SPDX-License-Identifier: Apache-2.0

#include "dynfilt/run_config.h"

#include <cmath>
#include <set>

#include "dynfilt/byte_io.h"
#include "dynfilt/errors.h"
#include "json.hpp"

namespace dynfilt {

namespace {

using nlohmann::json;

// Reads typed keys from one JSON object and rejects whatever is left over.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  const json* Find(const std::string& key) {
    seen_.insert(key);
    const auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  void Read(const std::string& key, std::size_t& out) {
    if (const json* v = Find(key)) {
      if (!v->is_number_unsigned()) Fail(key, "a non-negative integer");
      out = v->get<std::size_t>();
    }
  }
  void Read(const std::string& key, int& out) {
    if (const json* v = Find(key)) {
      if (!v->is_number_integer()) Fail(key, "an integer");
      out = v->get<int>();
    }
  }
  void Read(const std::string& key, double& out) {
    if (const json* v = Find(key)) {
      if (!v->is_number()) Fail(key, "a number");
      out = v->get<double>();
    }
  }
  void Read(const std::string& key, bool& out) {
    if (const json* v = Find(key)) {
      if (!v->is_boolean()) Fail(key, "true or false");
      out = v->get<bool>();
    }
  }
  void Read(const std::string& key, std::string& out) {
    if (const json* v = Find(key)) {
      if (!v->is_string()) Fail(key, "a string");
      out = v->get<std::string>();
    }
  }

  std::string Child(const std::string& key) const { return path_ + "." + key; }

  void Finish() const {
    for (const auto& [key, value] : node_.items()) {
      if (!seen_.count(key)) throw ConfigError(path_ + ": unknown key '" + key + "'");
    }
  }

 private:
  [[noreturn]] void Fail(const std::string& key, const char* want) const {
    throw ConfigError(path_ + "." + key + ": expected " + want);
  }

  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

void ReadFeatures(const json& node, FeatureConfig& f) {
  Section s(node, "features");
  std::string kind = f.kind == FeatureKind::kMfcc ? "mfcc" : "logmel";
  s.Read("kind", kind);
  if (kind == "mfcc") {
    f.kind = FeatureKind::kMfcc;
  } else if (kind == "logmel") {
    f.kind = FeatureKind::kLogMel;
  } else {
    throw ConfigError("features.kind: expected 'mfcc' or 'logmel', got '" + kind + "'");
  }
  s.Read("sample_rate_hz", f.sample_rate_hz);
  s.Read("win_ms", f.win_ms);
  s.Read("hop_ms", f.hop_ms);
  s.Read("n_mels", f.n_mels);
  s.Read("n_coeffs", f.n_coeffs);
  s.Read("fft_size", f.fft_size);
  s.Read("fmin_hz", f.fmin_hz);
  s.Read("fmax_hz", f.fmax_hz);
  s.Finish();
}

void ReadFrontEnd(const json& node, ModelConfig& m) {
  Section s(node, "frontend");
  FrontEndConfig& f = m.frontend;
  s.Read("enabled", m.use_frontend);
  s.Read("input_norm", m.input_norm);
  s.Read("input_norm_chunks", m.input_norm_chunks);
  s.Read("chunks", f.chunks);
  s.Read("cs_kernel", f.cs_kernel);
  s.Read("cs_dilation", f.cs_dilation);
  s.Read("cs_time_stride", f.cs_time_stride);
  s.Read("dap_kernel", f.dap_kernel);
  s.Read("dap_stride", f.dap_stride);
  s.Read("dap_depthwise", f.dap_depthwise);
  s.Read("dap_on_input", f.dap_on_input);
  s.Read("dyn_kernel", f.dyn_kernel);
  s.Read("dyn_dilation", f.dyn_dilation);
  s.Read("fc_bias", f.fc_bias);
  s.Read("norm_eps", f.norm_eps);
  s.Finish();
}

void ReadBackbone(const json& node, BackboneConfig& b) {
  Section s(node, "backbone");
  if (const json* blocks = s.Find("conv_blocks")) {
    if (!blocks->is_array()) throw ConfigError("backbone.conv_blocks: expected an array");
    b.conv_blocks.clear();
    for (std::size_t i = 0; i < blocks->size(); ++i) {
      Section blk((*blocks)[i], "backbone.conv_blocks[" + std::to_string(i) + "]");
      ConvBlockConfig c;
      blk.Read("out_channels", c.out_channels);
      blk.Read("kernel", c.kernel);
      blk.Read("stride", c.stride);
      blk.Finish();
      b.conv_blocks.push_back(c);
    }
  }
  s.Read("embed_dim", b.embed_dim);
  s.Read("n_classes", b.n_classes);
  s.Finish();
}

void ReadTrain(const json& node, TrainConfig& t) {
  Section s(node, "train");
  s.Read("batch_size", t.batch_size);
  s.Read("steps", t.steps);
  s.Read("lr", t.lr);
  s.Read("checkpoint_every", t.checkpoint_every);
  if (const json* decay = s.Find("lr_decay")) {
    Section d(*decay, "train.lr_decay");
    d.Read("every", t.lr_decay_every);
    d.Read("factor", t.lr_decay_factor);
    d.Finish();
  }
  s.Finish();
}

void ReadEval(const json& node, RunConfig& rc) {
  Section s(node, "eval");
  if (const json* snrs = s.Find("snrs_db")) {
    if (!snrs->is_array()) throw ConfigError("eval.snrs_db: expected an array");
    rc.snrs_db.clear();
    for (const json& v : *snrs) {
      if (!v.is_number()) throw ConfigError("eval.snrs_db: expected numbers");
      rc.snrs_db.push_back(v.get<double>());
    }
  }
  s.Read("p_target", rc.dcf.p_target);
  s.Read("c_miss", rc.dcf.c_miss);
  s.Read("c_fa", rc.dcf.c_fa);
  s.Finish();
}

}  // namespace

RunConfig RunConfig::Defaults(Task task) {
  RunConfig rc;
  rc.model.task = task;
  if (task == Task::kSv) {
    rc.features = SpeakerVerificationConfig();
    rc.clip_seconds = kTrialSegmentSeconds;
    rc.model.input_norm_chunks = 1;
  } else {
    rc.features = KeywordSpottingConfig();
  }
  rc.model.frontend.freq_bins = rc.features.output_bins();
  return rc;
}

std::size_t RunConfig::ExpectedFrames() const {
  const auto samples =
      static_cast<std::size_t>(std::llround(clip_seconds * features.sample_rate_hz));
  try {
    return FrameCount(samples, features.window_length(), features.hop_length());
  } catch (const GeometryError& e) {
    throw ConfigError(std::string("shape chain: features: ") + e.what());
  }
}

void RunConfig::Validate() const {
  if (version != kRunConfigVersion) {
    throw ConfigError("version: expected " + std::to_string(kRunConfigVersion) + ", got " +
                      std::to_string(version));
  }
  if (!(clip_seconds > 0)) throw ConfigError("clip_seconds must be positive");
  features.Validate();
  const FrontEndConfig& fe = model.frontend;
  if (fe.freq_bins != features.output_bins()) {
    throw ConfigError("frontend expects " + std::to_string(fe.freq_bins) +
                      " bins but the features produce " +
                      std::to_string(features.output_bins()));
  }
  for (std::size_t v : {fe.chunks, fe.cs_kernel, fe.cs_dilation, fe.cs_time_stride,
                        fe.dap_kernel, fe.dap_stride, fe.dyn_kernel, fe.dyn_dilation}) {
    if (v == 0) throw ConfigError("frontend: sizes, strides and dilations must be positive");
  }
  if (fe.dyn_kernel % 2 == 0) throw ConfigError("frontend.dyn_kernel must be odd");
  if (!(fe.norm_eps > 0)) throw ConfigError("frontend.norm_eps must be positive");
  if (model.input_norm && model.input_norm_chunks == 0) {
    throw ConfigError("frontend.input_norm_chunks must be positive");
  }
  const std::size_t frames = ExpectedFrames();
  try {
    if (model.input_norm) ChunkBounds(frames, model.input_norm_chunks);
    if (model.use_frontend) PlanFrontEnd(fe, frames);
    model.backbone.Validate(fe.freq_bins, frames);
  } catch (const GeometryError& e) {
    throw ConfigError("shape chain from " + std::to_string(fe.freq_bins) + "x" +
                      std::to_string(frames) + " input: " + e.what());
  }
  train.Validate();
  for (double s : snrs_db) {
    if (!std::isfinite(s)) throw ConfigError("eval.snrs_db: values must be finite");
  }
  if (!(dcf.p_target > 0 && dcf.p_target < 1)) {
    throw ConfigError("eval.p_target must lie in (0, 1)");
  }
  if (!(dcf.c_miss > 0 && dcf.c_fa > 0)) throw ConfigError("eval: costs must be positive");
}

RunConfig ParseRunConfig(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  Section top(root, "config");
  int version = 0;
  top.Read("version", version);
  if (version != kRunConfigVersion) {
    throw ConfigError("version: expected " + std::to_string(kRunConfigVersion) +
                      (top.Find("version") && root.contains("version")
                           ? ", got " + root["version"].dump()
                           : std::string(" (missing)")));
  }
  std::string task = "kws";
  top.Read("task", task);
  if (task != "kws" && task != "sv") {
    throw ConfigError("task: expected 'kws' or 'sv', got '" + task + "'");
  }
  RunConfig rc = RunConfig::Defaults(task == "sv" ? Task::kSv : Task::kKws);
  std::uint64_t seed = rc.seed;
  if (const json* v = top.Find("seed")) {
    if (!v->is_number_unsigned()) throw ConfigError("config.seed: expected a non-negative integer");
    seed = v->get<std::uint64_t>();
  }
  rc.seed = seed;
  rc.train.seed = seed;
  top.Read("clip_seconds", rc.clip_seconds);
  if (const json* v = top.Find("features")) ReadFeatures(*v, rc.features);
  if (const json* v = top.Find("frontend")) ReadFrontEnd(*v, rc.model);
  if (const json* v = top.Find("backbone")) ReadBackbone(*v, rc.model.backbone);
  if (const json* v = top.Find("train")) ReadTrain(*v, rc.train);
  if (const json* v = top.Find("eval")) ReadEval(*v, rc);
  top.Finish();
  rc.model.frontend.freq_bins = rc.features.output_bins();
  rc.Validate();
  return rc;
}

RunConfig LoadRunConfig(const std::filesystem::path& path) {
  std::string text;
  try {
    text = bytes::ReadFile(path);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return ParseRunConfig(text);
}

std::string RunConfig::ToJson() const {
  json blocks = json::array();
  for (const ConvBlockConfig& b : model.backbone.conv_blocks) {
    blocks.push_back({{"out_channels", b.out_channels}, {"kernel", b.kernel}, {"stride", b.stride}});
  }
  const FrontEndConfig& fe = model.frontend;
  json root = {
      {"version", version},
      {"task", model.task == Task::kSv ? "sv" : "kws"},
      {"seed", seed},
      {"clip_seconds", clip_seconds},
      {"features",
       {{"kind", features.kind == FeatureKind::kMfcc ? "mfcc" : "logmel"},
        {"sample_rate_hz", features.sample_rate_hz},
        {"win_ms", features.win_ms},
        {"hop_ms", features.hop_ms},
        {"n_mels", features.n_mels},
        {"n_coeffs", features.n_coeffs},
        {"fft_size", features.fft_size},
        {"fmin_hz", features.fmin_hz},
        {"fmax_hz", features.fmax_hz}}},
      {"frontend",
       {{"enabled", model.use_frontend},
        {"input_norm", model.input_norm},
        {"input_norm_chunks", model.input_norm_chunks},
        {"chunks", fe.chunks},
        {"cs_kernel", fe.cs_kernel},
        {"cs_dilation", fe.cs_dilation},
        {"cs_time_stride", fe.cs_time_stride},
        {"dap_kernel", fe.dap_kernel},
        {"dap_stride", fe.dap_stride},
        {"dap_depthwise", fe.dap_depthwise},
        {"dap_on_input", fe.dap_on_input},
        {"dyn_kernel", fe.dyn_kernel},
        {"dyn_dilation", fe.dyn_dilation},
        {"fc_bias", fe.fc_bias},
        {"norm_eps", fe.norm_eps}}},
      {"backbone",
       {{"conv_blocks", blocks},
        {"embed_dim", model.backbone.embed_dim},
        {"n_classes", model.backbone.n_classes}}},
      {"train",
       {{"batch_size", train.batch_size},
        {"steps", train.steps},
        {"lr", train.lr},
        {"lr_decay", {{"every", train.lr_decay_every}, {"factor", train.lr_decay_factor}}},
        {"checkpoint_every", train.checkpoint_every}}},
      {"eval",
       {{"snrs_db", snrs_db},
        {"p_target", dcf.p_target},
        {"c_miss", dcf.c_miss},
        {"c_fa", dcf.c_fa}}},
  };
  return root.dump(2) + "\n";
}

}  // namespace dynfilt
