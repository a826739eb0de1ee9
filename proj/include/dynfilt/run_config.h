// Copyright 2026 The dynfilt Authors
// SPDX-License-Identifier: Apache-2.0

// JSON run configuration shared by every subcommand.
//
//   {
//     "version": 1,
//     "task": "kws",              // or "sv"
//     "seed": 0,
//     "clip_seconds": 1.0,        // shortest clip the shape chain must fit
//     "features": {...},          // FeatureConfig fields
//     "frontend": {...},          // FrontEndConfig fields plus "enabled",
//                                 // "input_norm", "input_norm_chunks"
//     "backbone": {"conv_blocks": [{"out_channels", "kernel", "stride"}],
//                  "embed_dim", "n_classes"},
//     "train": {"batch_size", "steps", "lr",
//               "lr_decay": {"every", "factor"}, "checkpoint_every"},
//     "eval": {"snrs_db": [...], "p_target", "c_miss", "c_fa"}
//   }
//
// Every section and key is optional; unknown keys are rejected.

#ifndef DYNFILT_RUN_CONFIG_H_
#define DYNFILT_RUN_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dynfilt/evalkit.h"
#include "dynfilt/features.h"
#include "dynfilt/taskheads.h"

namespace dynfilt {

inline constexpr int kRunConfigVersion = 1;

struct RunConfig {
  int version = kRunConfigVersion;
  std::uint64_t seed = 0;
  double clip_seconds = 1.0;
  FeatureConfig features;
  ModelConfig model;
  TrainConfig train;
  std::vector<double> snrs_db{20, 15, 10, 5, 0};
  DcfParams dcf;

  // Task defaults: KWS uses MFCC, SV uses 40-bin log-mel.
  static RunConfig Defaults(Task task);

  // Feature, front-end and backbone shapes chained from a clip of
  // clip_seconds. Throws ConfigError naming the failing stage.
  void Validate() const;
  std::size_t ExpectedFrames() const;
  std::string ToJson() const;
};

// Throws ConfigError on malformed JSON, a version mismatch, an unknown key,
// a wrong type or a failed Validate().
RunConfig ParseRunConfig(const std::string& json_text);
RunConfig LoadRunConfig(const std::filesystem::path& path);

}  // namespace dynfilt

#endif  // DYNFILT_RUN_CONFIG_H_
