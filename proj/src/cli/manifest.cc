// Copyright 2026 The dynfilt Authors
// SPDX-License-Identifier: Apache-2.0

#include "dynfilt/manifest.h"

#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>

#include "dynfilt/errors.h"

namespace dynfilt {

namespace {

std::vector<std::string> Split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string Join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s;
}

std::filesystem::path Resolve(const std::filesystem::path& manifest, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : manifest.parent_path() / path;
}

std::string Where(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line) + ": ";
}

}  // namespace

std::vector<CsvRow> ReadCsv(const std::filesystem::path& path,
                            const std::vector<std::string>& columns) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != Join(columns)) {
    throw IngestionError(path.string() + ": expected header '" + Join(columns) + "', got '" +
                         line + "'");
  }
  std::vector<CsvRow> rows;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    CsvRow row{n, Split(line)};
    if (row.fields.size() != columns.size()) {
      throw IngestionError(Where(path, n) + "expected " + std::to_string(columns.size()) +
                           " fields, got " + std::to_string(row.fields.size()));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<LabeledPath> ReadLabeledManifest(const std::filesystem::path& path,
                                             const std::string& label_column) {
  std::vector<LabeledPath> out;
  for (const CsvRow& r : ReadCsv(path, {"path", label_column})) {
    if (r.fields[1].empty()) throw IngestionError(Where(path, r.line) + "empty " + label_column);
    out.push_back({Resolve(path, r.fields[0]), r.fields[1]});
  }
  return out;
}

std::vector<std::filesystem::path> ReadPathManifest(const std::filesystem::path& path) {
  std::vector<std::filesystem::path> out;
  for (const CsvRow& r : ReadCsv(path, {"path"})) out.push_back(Resolve(path, r.fields[0]));
  return out;
}

std::vector<MixRow> ReadMixManifest(const std::filesystem::path& path) {
  std::vector<MixRow> out;
  for (const CsvRow& r : ReadCsv(path, {"speech_path", "noise_path", "snr_db", "seed"})) {
    MixRow row;
    row.speech = Resolve(path, r.fields[0]);
    row.noise = Resolve(path, r.fields[1]);
    try {
      std::size_t used = 0;
      row.snr_db = r.fields[2] == "inf" ? std::numeric_limits<double>::infinity()
                                        : std::stod(r.fields[2], &used);
      if (r.fields[2] != "inf" && used != r.fields[2].size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw IngestionError(Where(path, r.line) + "bad snr_db '" + r.fields[2] + "'");
    }
    const std::string& s = r.fields[3];
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), row.seed);
    if (ec != std::errc() || end != s.data() + s.size() || s.empty()) {
      throw IngestionError(Where(path, r.line) + "bad seed '" + s + "'");
    }
    out.push_back(row);
  }
  return out;
}

std::vector<NoiseSource> ReadNoiseManifest(const std::filesystem::path& path) {
  std::vector<NoiseSource> out;
  for (const CsvRow& r : ReadCsv(path, {"name", "path"})) {
    if (r.fields[0].empty()) throw IngestionError(Where(path, r.line) + "empty noise name");
    out.push_back({r.fields[0], Resolve(path, r.fields[1])});
  }
  return out;
}

std::vector<TrialPair> ReadTrialManifest(const std::filesystem::path& path) {
  std::vector<TrialPair> out;
  for (const CsvRow& r : ReadCsv(path, {"enroll_path", "test_path", "is_target"})) {
    if (r.fields[2] != "0" && r.fields[2] != "1") {
      throw IngestionError(Where(path, r.line) + "is_target must be 0 or 1");
    }
    out.push_back({Resolve(path, r.fields[0]), Resolve(path, r.fields[1]), r.fields[2] == "1"});
  }
  return out;
}

}  // namespace dynfilt
