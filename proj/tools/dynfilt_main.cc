// Copyright 2026 The dynfilt Authors
// SPDX-License-Identifier: Apache-2.0

// dynfilt: feature extraction, training, evaluation, noise mixing,
// gradient checking and cost accounting from the command line.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dynfilt/commands.h"
#include "dynfilt/errors.h"

int main(int argc, char** argv) {
  using namespace dynfilt;
  CLI::App app{"Dynamic filter front-end toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  std::size_t chunks = 0, threads = 1;
  std::vector<double> snrs;
  auto* seed_opt = app.add_option("--seed", seed, "Seed (falls back to DYNFILT_SEED)");
  auto* config_opt = app.add_option("--config", config_path, "JSON run configuration");
  auto* chunks_opt = app.add_option("--chunks", chunks, "Temporal chunks C")->check(CLI::PositiveNumber);
  auto* snr_opt = app.add_option("--snr", snrs, "Comma-separated SNR list in dB")->delimiter(',');
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--threads", threads, "Worker threads for per-file work")->check(CLI::PositiveNumber);

  std::string manifest, checkpoint, tests, noises, trials;
  std::size_t count = 200;
  auto* features = app.add_subcommand("features", "Extract T-F features for a path manifest");
  features->add_option("manifest", manifest, "CSV with header 'path'")->required();
  auto* train = app.add_subcommand("train", "Train a model on a labeled manifest");
  train->add_option("manifest", manifest, "CSV path,label or path,speaker_id")->required();
  auto* eval_kws = app.add_subcommand("eval-kws", "Keyword accuracy by noise and SNR");
  eval_kws->add_option("--checkpoint", checkpoint)->required();
  eval_kws->add_option("--tests", tests, "CSV path,label")->required();
  eval_kws->add_option("--noises", noises, "CSV name,path")->required();
  auto* eval_sv = app.add_subcommand("eval-sv", "Score verification trials; EER and minDCF");
  eval_sv->add_option("--checkpoint", checkpoint)->required();
  eval_sv->add_option("--trials", trials, "CSV enroll_path,test_path,is_target")->required();
  auto* mix = app.add_subcommand("mix", "Mix speech with noise at given SNRs");
  mix->add_option("manifest", manifest, "CSV speech_path,noise_path,snr_db,seed")->required();
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of the front-end");
  auto* account = app.add_subcommand("account", "Front-end parameters and FLOPs");
  auto* synth = app.add_subcommand("synth", "Write the synthetic four-class clip set");
  synth->add_option("--count", count, "Number of clips")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  ConfigOverrides overrides;
  if (*config_opt) overrides.config_path = config_path;
  if (*seed_opt) overrides.seed = seed;
  if (*chunks_opt) overrides.chunks = chunks;
  if (*snr_opt) overrides.snrs_db = snrs;

  CommandEnv env;
  env.out_dir = out_dir;
  env.threads = threads;
  try {
    const Task task = eval_sv->parsed() ? Task::kSv : Task::kKws;
    env.config = ResolveConfig(task, overrides, std::getenv("DYNFILT_SEED"));
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  }

  if (features->parsed()) return CmdFeatures(env, manifest);
  if (train->parsed()) return CmdTrain(env, manifest);
  if (eval_kws->parsed()) return CmdEvalKws(env, checkpoint, tests, noises);
  if (eval_sv->parsed()) return CmdEvalSv(env, checkpoint, trials);
  if (mix->parsed()) return CmdMix(env, manifest);
  if (gradcheck->parsed()) return CmdGradcheck(env);
  if (account->parsed()) return CmdAccount(env);
  if (synth->parsed()) return CmdSynth(env, count);
  return kExitUsage;
}
