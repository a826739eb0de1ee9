// Copyright 2026 The dynfilt Authors
// SPDX-License-Identifier: Apache-2.0

#include "dynfilt/commands.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "dynfilt/byte_io.h"
#include "dynfilt/cost.h"
#include "dynfilt/errors.h"
#include "dynfilt/evalkit.h"
#include "dynfilt/feature_io.h"
#include "dynfilt/gradcheck.h"
#include "dynfilt/manifest.h"
#include "dynfilt/parallel.h"
#include "dynfilt/svg.h"
#include "dynfilt/taskheads.h"
#include "dynfilt/wav.h"

namespace dynfilt {

namespace fs = std::filesystem;

namespace {

// Bad manifest contents that are the caller's fault rather than a failed
// input file.
class UsageError : public Error {
 public:
  using Error::Error;
};

std::uint64_t SplitMix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Noise offset seed for clip `clip` mixed with noise `noise`. Independent of
// the SNR so that every column of a row sees the same noise excerpt.
std::uint64_t MixSeed(std::uint64_t base, std::size_t noise, std::size_t clip) {
  return SplitMix(SplitMix(SplitMix(base) ^ noise) ^ clip);
}

std::string Fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string Indexed(const char* prefix, std::size_t i, const std::string& rest) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%05zu", prefix, i);
  return buf + rest;
}

// Commas would break the CSV logs.
std::string CsvSafe(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n') c = ';';
  }
  return s;
}

void Write(const fs::path& path, const std::string& text) { bytes::WriteFileAtomic(path, text); }

void RequireOutDir(const CommandEnv& env) {
  if (env.out_dir.empty()) throw ConfigError("an output directory (--out) is required");
  fs::create_directories(env.out_dir);
}

void RequireTask(const CommandEnv& env, Task task, const char* command) {
  if (env.config.model.task != task) {
    throw ConfigError(std::string(command) + " needs a config with task '" +
                      (task == Task::kSv ? "sv" : "kws") + "'");
  }
}

template <typename T>
void RequireRows(const std::vector<T>& rows, const fs::path& manifest) {
  if (rows.empty()) throw UsageError("empty manifest: " + manifest.string());
}

Tensor FeatureTensor(const Waveform& wave, const RunConfig& cfg) {
  return ExtractFeatures(wave, cfg.features).ToTensor();
}

Model LoadModel(const CommandEnv& env, const fs::path& checkpoint) {
  if (!fs::exists(checkpoint)) throw UsageError("missing checkpoint: " + checkpoint.string());
  Model model(env.config.model, env.config.seed);
  try {
    RestoreCheckpoint(checkpoint, model.params());
  } catch (const Error& e) {
    throw UsageError("checkpoint " + checkpoint.string() +
                     " does not match the configured model: " + e.what());
  }
  return model;
}

// Reports per-item failures and returns how many there were.
std::size_t ReportErrors(const CommandEnv& env, const std::vector<std::string>& errors,
                         const std::vector<std::string>& names) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (errors[i].empty()) continue;
    ++n;
    *env.err << "error: " << names[i] << ": " << errors[i] << '\n';
  }
  return n;
}

template <typename Body>
int Guarded(const CommandEnv& env, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    *env.err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    *env.err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IngestionError& e) {
    *env.err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    *env.err << "error: " << e.what() << '\n';
    return kExitFailure;
  } catch (const fs::filesystem_error& e) {
    *env.err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace

RunConfig ResolveConfig(Task default_task, const ConfigOverrides& overrides,
                        const char* env_seed) {
  RunConfig rc = overrides.config_path ? LoadRunConfig(*overrides.config_path)
                                       : RunConfig::Defaults(default_task);
  std::optional<std::uint64_t> seed = overrides.seed;
  if (!seed && env_seed != nullptr && *env_seed != '\0') {
    const std::string s(env_seed);
    std::uint64_t v = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size()) {
      throw ConfigError("DYNFILT_SEED must be a non-negative integer, got '" + s + "'");
    }
    seed = v;
  }
  if (seed) {
    rc.seed = *seed;
    rc.train.seed = *seed;
  }
  if (overrides.chunks) rc.model.frontend.chunks = *overrides.chunks;
  if (overrides.snrs_db) rc.snrs_db = *overrides.snrs_db;
  rc.Validate();
  return rc;
}

int CmdFeatures(const CommandEnv& env, const fs::path& manifest) {
  return Guarded(env, [&] {
    const std::vector<fs::path> paths = ReadPathManifest(manifest);
    RequireRows(paths, manifest);
    RequireOutDir(env);
    const std::size_t n = paths.size();
    std::vector<std::string> outputs(n), errors(n), names(n);
    std::vector<std::size_t> bins(n), frames(n);
    ParallelFor(n, env.threads, [&](std::size_t i) {
      names[i] = paths[i].string();
      outputs[i] = Indexed("", i, "_" + paths[i].stem().string() + ".dynf");
      try {
        const TFFeature f = ExtractFeatures(ReadWav(paths[i]), env.config.features);
        WriteFeatureFile(env.out_dir / outputs[i], f);
        bins[i] = f.bins;
        frames[i] = f.frames;
      } catch (const Error& e) {
        errors[i] = e.what();
      }
    });
    std::ostringstream summary;
    summary << "index,path,output,bins,frames,status\n";
    for (std::size_t i = 0; i < n; ++i) {
      const bool ok = errors[i].empty();
      summary << i << ',' << CsvSafe(names[i]) << ',' << (ok ? outputs[i] : "") << ','
              << bins[i] << ',' << frames[i] << ',' << (ok ? "ok" : "error") << '\n';
    }
    Write(env.out_dir / "features.csv", summary.str());
    const std::size_t failed = ReportErrors(env, errors, names);
    *env.out << "features: " << n - failed << " written, " << failed << " failed\n";
    return failed ? kExitFailure : kExitOk;
  });
}

int CmdTrain(const CommandEnv& env, const fs::path& manifest) {
  return Guarded(env, [&] {
    const RunConfig& cfg = env.config;
    const bool sv = cfg.model.task == Task::kSv;
    const std::vector<LabeledPath> rows =
        ReadLabeledManifest(manifest, sv ? "speaker_id" : "label");
    RequireRows(rows, manifest);
    const std::size_t n_classes = cfg.model.backbone.n_classes;

    std::vector<std::size_t> labels(rows.size());
    std::vector<std::string> speakers;
    if (sv) {
      std::set<std::string> unique;
      for (const LabeledPath& r : rows) unique.insert(r.label);
      speakers.assign(unique.begin(), unique.end());
      if (speakers.size() != n_classes) {
        throw ConfigError("backbone.n_classes is " + std::to_string(n_classes) +
                          " but the manifest has " + std::to_string(speakers.size()) +
                          " speakers");
      }
      for (std::size_t i = 0; i < rows.size(); ++i) {
        labels[i] = static_cast<std::size_t>(
            std::lower_bound(speakers.begin(), speakers.end(), rows[i].label) -
            speakers.begin());
      }
    } else {
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::string& s = rows[i].label;
        std::size_t v = 0;
        const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || end != s.data() + s.size() || v >= n_classes) {
          throw UsageError(manifest.string() + ": label '" + s + "' of " +
                           rows[i].path.string() + " is not a class index below " +
                           std::to_string(n_classes));
        }
        labels[i] = v;
      }
    }
    RequireOutDir(env);

    std::vector<Example> data(rows.size());
    std::vector<std::string> errors(rows.size()), names(rows.size());
    ParallelFor(rows.size(), env.threads, [&](std::size_t i) {
      names[i] = rows[i].path.string();
      try {
        data[i] = {FeatureTensor(ReadWav(rows[i].path), cfg), labels[i], names[i]};
      } catch (const Error& e) {
        errors[i] = e.what();
      }
    });
    if (const std::size_t failed = ReportErrors(env, errors, names)) {
      *env.err << "train: " << failed << " of " << rows.size()
               << " clips could not be loaded; nothing trained\n";
      return kExitFailure;
    }

    Model model(cfg.model, cfg.seed);
    TrainConfig tc = cfg.train;
    tc.checkpoint_path = env.out_dir / "model.ckpt";
    const TrainResult result = Train(model, data, tc);
    WriteLossTrace(env.out_dir / "loss.csv", result);
    ChartSeries loss{"loss", {}, {}};
    for (const LossRecord& r : result.trace) {
      loss.x.push_back(static_cast<double>(r.step));
      loss.y.push_back(r.loss);
    }
    Write(env.out_dir / "loss.svg",
          LineChartSvg({"training loss", "step", "cross-entropy"}, {loss}));
    Write(env.out_dir / "config.json", cfg.ToJson());
    if (sv) {
      std::ostringstream out;
      out << "index,speaker_id\n";
      for (std::size_t i = 0; i < speakers.size(); ++i) out << i << ',' << speakers[i] << '\n';
      Write(env.out_dir / "speakers.csv", out.str());
    }
    *env.out << "train: " << result.trace.size() << " steps, final loss "
             << Fixed(result.trace.back().loss) << ", training accuracy "
             << Fixed(TrainingAccuracy(model, data), 4) << '\n';
    return kExitOk;
  });
}

int CmdEvalKws(const CommandEnv& env, const fs::path& checkpoint,
               const fs::path& test_manifest, const fs::path& noise_manifest) {
  return Guarded(env, [&] {
    const RunConfig& cfg = env.config;
    RequireTask(env, Task::kKws, "eval-kws");
    const Model model = LoadModel(env, checkpoint);
    const std::vector<LabeledPath> tests = ReadLabeledManifest(test_manifest, "label");
    RequireRows(tests, test_manifest);
    const std::vector<NoiseSource> noises = ReadNoiseManifest(noise_manifest);
    RequireRows(noises, noise_manifest);
    RequireOutDir(env);

    const std::size_t n = tests.size();
    std::vector<Waveform> clips(n);
    std::vector<std::size_t> labels(n);
    std::vector<std::string> errors(n), names(n);
    ParallelFor(n, env.threads, [&](std::size_t i) {
      names[i] = tests[i].path.string();
      try {
        const std::string& s = tests[i].label;
        std::size_t v = 0;
        const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || end != s.data() + s.size()) {
          throw IngestionError("label '" + s + "' is not a class index");
        }
        labels[i] = v;
        clips[i] = ReadWav(tests[i].path);
      } catch (const Error& e) {
        errors[i] = e.what();
      }
    });
    std::vector<Waveform> noise_waves;
    std::vector<std::string> noise_errors, noise_names;
    for (const NoiseSource& s : noises) {
      noise_names.push_back(s.name);
      noise_errors.emplace_back();
      try {
        noise_waves.push_back(ReadWav(s.path));
      } catch (const Error& e) {
        noise_errors.back() = e.what();
        noise_waves.emplace_back();
      }
    }
    if (ReportErrors(env, errors, names) + ReportErrors(env, noise_errors, noise_names)) {
      *env.err << "eval-kws: inputs failed to load; no grid written\n";
      return kExitFailure;
    }

    // One accuracy per (noise, snr) column; the clean column goes through
    // the mixer's +inf sentinel.
    auto accuracy_at = [&](const Waveform& noise, std::size_t noise_index, double snr,
                           std::string& error) {
      std::vector<std::size_t> preds(n);
      std::vector<std::string> errs(n);
      ParallelFor(n, env.threads, [&](std::size_t i) {
        try {
          const Waveform mixed =
              MixAtSnr(clips[i], noise, {snr, MixSeed(cfg.seed, noise_index, i)}).mixed;
          preds[i] = model.Predict(FeatureTensor(mixed, cfg));
        } catch (const Error& e) {
          errs[i] = names[i] + ": " + e.what();
        }
      });
      for (const std::string& e : errs) {
        if (!e.empty() && error.empty()) error = e;
      }
      return error.empty() ? Accuracy(preds, labels) : 0.0;
    };

    AccuracyGrid grid;
    grid.snrs_db = cfg.snrs_db;
    std::string error;
    grid.clean = accuracy_at(Waveform{}, 0, kCleanSnr, error);
    for (std::size_t k = 0; k < noises.size() && error.empty(); ++k) {
      grid.noises.push_back(noises[k].name);
      grid.cells.emplace_back();
      for (double snr : cfg.snrs_db) {
        grid.cells.back().push_back(accuracy_at(noise_waves[k], k + 1, snr, error));
      }
    }
    if (!error.empty()) {
      *env.err << "error: " << error << "\neval-kws: no grid written\n";
      return kExitFailure;
    }
    const std::string csv = grid.ToCsv();
    Write(env.out_dir / "accuracy_grid.csv", csv);
    std::vector<ChartSeries> series;
    for (std::size_t k = 0; k < grid.noises.size(); ++k) {
      series.push_back({grid.noises[k], grid.snrs_db, grid.cells[k]});
    }
    Write(env.out_dir / "accuracy_vs_snr.svg",
          LineChartSvg({"accuracy under noise", "SNR (dB)", "accuracy"}, series));
    *env.out << csv;
    return kExitOk;
  });
}

int CmdEvalSv(const CommandEnv& env, const fs::path& checkpoint, const fs::path& trial_manifest) {
  return Guarded(env, [&] {
    const RunConfig& cfg = env.config;
    RequireTask(env, Task::kSv, "eval-sv");
    const Model model = LoadModel(env, checkpoint);
    const std::vector<TrialPair> pairs = ReadTrialManifest(trial_manifest);
    RequireRows(pairs, trial_manifest);
    RequireOutDir(env);
    const SegmentEmbedder embed = ModelEmbedder(model, cfg.features);

    const std::size_t n = pairs.size();
    std::vector<double> scores(n);
    std::vector<std::string> errors(n), names(n);
    ParallelFor(n, env.threads, [&](std::size_t i) {
      names[i] = pairs[i].enroll.string() + " vs " + pairs[i].test.string();
      try {
        scores[i] = ScoreTrial(ReadWav(pairs[i].enroll), ReadWav(pairs[i].test), embed);
      } catch (const Error& e) {
        errors[i] = e.what();
      }
    });
    const std::size_t failed = ReportErrors(env, errors, names);
    std::vector<Trial> trials;
    for (std::size_t i = 0; i < n; ++i) {
      if (errors[i].empty()) trials.push_back({scores[i], pairs[i].is_target});
    }
    WriteTrials(env.out_dir / "scores.csv", trials);
    std::ostringstream summary;
    summary << "trials " << trials.size() << "\nfailed " << failed << '\n';
    int code = failed ? kExitFailure : kExitOk;
    try {
      summary << "eer " << Fixed(Eer(trials)) << "\nmin_dcf " << Fixed(MinDcf(trials, cfg.dcf))
              << "\np_target " << cfg.dcf.p_target << "\nc_miss " << cfg.dcf.c_miss
              << "\nc_fa " << cfg.dcf.c_fa << '\n';
    } catch (const MetricError& e) {
      summary << "metrics unavailable: " << e.what() << '\n';
      code = kExitFailure;
    }
    Write(env.out_dir / "sv_summary.txt", summary.str());
    *env.out << summary.str();
    return code;
  });
}

int CmdMix(const CommandEnv& env, const fs::path& manifest) {
  return Guarded(env, [&] {
    const std::vector<MixRow> rows = ReadMixManifest(manifest);
    RequireRows(rows, manifest);
    RequireOutDir(env);
    const std::size_t n = rows.size();
    std::vector<MixResult> results(n);
    std::vector<std::string> errors(n), names(n), outputs(n);
    ParallelFor(n, env.threads, [&](std::size_t i) {
      names[i] = rows[i].speech.string();
      outputs[i] = Indexed("mix_", i, ".wav");
      try {
        results[i] = MixAtSnr(ReadWav(rows[i].speech), ReadWav(rows[i].noise),
                              {rows[i].snr_db, rows[i].seed});
        WriteWav(env.out_dir / outputs[i], results[i].mixed);
      } catch (const Error& e) {
        errors[i] = e.what();
      }
    });
    std::ostringstream log;
    log << "index,speech_path,noise_path,snr_db,seed,output,gain,peak_scale,noise_offset,"
           "status\n";
    for (std::size_t i = 0; i < n; ++i) {
      const bool ok = errors[i].empty();
      log << i << ',' << CsvSafe(rows[i].speech.string()) << ','
          << CsvSafe(rows[i].noise.string()) << ',' << rows[i].snr_db << ',' << rows[i].seed
          << ',' << (ok ? outputs[i] : "") << ',' << Fixed(results[i].gain, 9) << ','
          << Fixed(results[i].peak_scale, 9) << ',' << results[i].noise_offset << ','
          << (ok ? "ok" : "error: " + CsvSafe(errors[i])) << '\n';
    }
    Write(env.out_dir / "mix_log.csv", log.str());
    const std::size_t failed = ReportErrors(env, errors, names);
    *env.out << "mix: " << n - failed << " written, " << failed << " failed\n";
    return failed ? kExitFailure : kExitOk;
  });
}

int CmdGradcheck(const CommandEnv& env, const GradCorruptHook& corrupt) {
  return Guarded(env, [&] {
    GradcheckOptions options;
    options.frontend = env.config.model.frontend;
    options.frames = env.config.ExpectedFrames();
    options.seed = env.config.seed;
    options.corrupt = corrupt;
    const GradcheckReport report = RunGradcheck(options);
    const std::string text = report.ToText();
    *env.out << text;
    if (!env.out_dir.empty()) {
      RequireOutDir(env);
      Write(env.out_dir / "gradcheck.txt", text);
    }
    if (!report.passed()) {
      for (const TensorCheck& t : report.tensors) {
        if (!t.passed) {
          *env.err << "gradcheck failed: " << t.name << " coordinate " << t.worst_index
                   << " relative error " << t.max_rel_error << '\n';
        }
      }
      return kExitFailure;
    }
    return kExitOk;
  });
}

int CmdAccount(const CommandEnv& env) {
  return Guarded(env, [&] {
    const RunConfig& cfg = env.config;
    const CostReport report = AccountFrontEnd(cfg.model.frontend, cfg.ExpectedFrames());
    *env.out << report.ToText();
    if (!env.out_dir.empty()) {
      RequireOutDir(env);
      Write(env.out_dir / "cost.csv", report.ToCsv());
    }
    return kExitOk;
  });
}

int CmdSynth(const CommandEnv& env, std::size_t count) {
  return Guarded(env, [&] {
    if (count == 0) throw ConfigError("synth needs a positive clip count");
    RequireOutDir(env);
    fs::create_directories(env.out_dir / "clips");
    const std::vector<LabeledClip> clips = MakeSyntheticClips(count, env.config.seed);
    std::ostringstream manifest;
    manifest << "path,label\n";
    for (const LabeledClip& c : clips) {
      const std::string rel = "clips/" + c.id + ".wav";
      WriteWav(env.out_dir / rel, c.wave);
      manifest << rel << ',' << c.label << '\n';
    }
    Write(env.out_dir / "manifest.csv", manifest.str());
    *env.out << "synth: " << clips.size() << " clips\n";
    return kExitOk;
  });
}

}  // namespace dynfilt
