// Copyright 2026 The dynfilt Authors
// SPDX-License-Identifier: Apache-2.0

// Subcommands of the dynfilt tool. Each returns a process exit code:
//
//   0  success
//   1  partial failure (some inputs failed) or a failed verification
//   2  usage or configuration error: bad config, unreadable or empty
//      manifest, missing or mismatched checkpoint
//
// Primary outputs are written atomically into the output directory in
// manifest order, whatever the thread count.

#ifndef DYNFILT_COMMANDS_H_
#define DYNFILT_COMMANDS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dynfilt/run_config.h"

namespace dynfilt {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

struct ConfigOverrides {
  std::optional<std::filesystem::path> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> chunks;
  std::optional<std::vector<double>> snrs_db;
};

// Task defaults, then the config file, then DYNFILT_SEED (passed as
// `env_seed`), then flags. Throws ConfigError; the result is validated.
RunConfig ResolveConfig(Task default_task, const ConfigOverrides& overrides,
                        const char* env_seed);

struct CommandEnv {
  RunConfig config;
  std::filesystem::path out_dir;
  std::size_t threads = 1;
  std::ostream* out = &std::cout;
  std::ostream* err = &std::cerr;
};

// path manifest -> NNNNN_<stem>.dynf per clip plus features.csv
// (index,path,output,bins,frames,status).
int CmdFeatures(const CommandEnv& env, const std::filesystem::path& manifest);

// path,label (KWS) or path,speaker_id (SV) -> model.ckpt, loss.csv,
// loss.svg, config.json and, for SV, speakers.csv.
int CmdTrain(const CommandEnv& env, const std::filesystem::path& manifest);

// Test clips (path,label) against every noise (name,path) at every SNR, plus
// the clean column -> accuracy_grid.csv and accuracy_vs_snr.svg.
int CmdEvalKws(const CommandEnv& env, const std::filesystem::path& checkpoint,
               const std::filesystem::path& test_manifest,
               const std::filesystem::path& noise_manifest);

// enroll_path,test_path,is_target -> scores.csv and sv_summary.txt.
int CmdEvalSv(const CommandEnv& env, const std::filesystem::path& checkpoint,
              const std::filesystem::path& trial_manifest);

// speech_path,noise_path,snr_db,seed -> mix_NNNNN.wav plus mix_log.csv.
int CmdMix(const CommandEnv& env, const std::filesystem::path& manifest);

using GradCorruptHook = std::function<void(const std::string&, std::span<double>)>;
// Report on stdout and in gradcheck.txt when an output directory is set.
int CmdGradcheck(const CommandEnv& env, const GradCorruptHook& corrupt = {});

// Cost table on stdout and cost.csv when an output directory is set.
int CmdAccount(const CommandEnv& env);

// Synthetic four-class clips under clips/ plus manifest.csv (path,label).
int CmdSynth(const CommandEnv& env, std::size_t count);

}  // namespace dynfilt

#endif  // DYNFILT_COMMANDS_H_
