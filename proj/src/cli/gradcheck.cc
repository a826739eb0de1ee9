// Copyright 2026 The dynfilt Authors
// SPDX-License-Identifier: Apache-2.0

#include "dynfilt/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "dynfilt/ops.h"
#include "dynfilt/random.h"

namespace dynfilt {

namespace {

Tensor RandomMatrix(std::size_t rows, std::size_t cols, Rng& rng) {
  std::vector<double> v(rows * cols);
  rng.FillUniform(v, -1, 1);
  return Tensor::FromData({rows, cols}, std::move(v));
}

}  // namespace

bool GradcheckReport::passed() const {
  return std::all_of(tensors.begin(), tensors.end(),
                     [](const TensorCheck& t) { return t.passed; });
}

std::string GradcheckReport::ToText() const {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "gradcheck seed=%llu tolerance=%.1e\n",
                static_cast<unsigned long long>(seed), tolerance);
  out << line;
  for (const TensorCheck& t : tensors) {
    std::snprintf(line, sizeof line,
                  "%-30s size=%-5zu checked=%-3zu max_rel=%.3e worst=%zu "
                  "analytic=%.9e numeric=%.9e %s\n",
                  t.name.c_str(), t.size, t.checked, t.max_rel_error, t.worst_index,
                  t.worst_analytic, t.worst_numeric, t.passed ? "PASS" : "FAIL");
    out << line;
  }
  out << (passed() ? "all tensors pass\n" : "FAILED\n");
  return out.str();
}

GradcheckReport RunGradcheck(const GradcheckOptions& options) {
  const FrontEndConfig& cfg = options.frontend;
  Rng rng(options.seed);
  FrontEndParams p = InitFrontEndParams(cfg, rng);
  for (Tensor* t : {&p.intra_gamma, &p.inter_gamma}) rng.FillUniform(t->mutable_data(), 0.5, 1.5);
  for (Tensor* t : {&p.intra_beta, &p.inter_beta}) rng.FillUniform(t->mutable_data(), -0.5, 0.5);
  if (p.fc_bias.defined()) rng.FillUniform(p.fc_bias.mutable_data(), -0.5, 0.5);
  const Tensor x = RandomMatrix(cfg.freq_bins, options.frames, rng);
  const Tensor r = RandomMatrix(cfg.freq_bins, options.frames, rng);
  auto loss = [&] { return Sum(Mul(FrontEnd(x, p, cfg), r)); };
  Backward(loss());

  GradcheckReport report;
  report.seed = options.seed;
  report.tolerance = options.tolerance;
  for (NamedTensor& nt : p.Named()) {
    Tensor& t = nt.tensor;
    std::vector<double> analytic(t.grad().begin(), t.grad().end());
    if (options.corrupt) options.corrupt(nt.name, analytic);
    std::vector<std::size_t> coords;
    if (t.size() <= options.max_coordinates) {
      for (std::size_t i = 0; i < t.size(); ++i) coords.push_back(i);
    } else {
      for (std::size_t s = 0; s < options.max_coordinates; ++s) coords.push_back(rng.Below(t.size()));
    }
    TensorCheck check;
    check.name = nt.name;
    check.size = t.size();
    check.checked = coords.size();
    bool first = true;
    for (std::size_t i : coords) {
      double& v = t.mutable_data()[i];
      const double saved = v;
      v = saved + options.step;
      const double up = loss().item();
      v = saved - options.step;
      const double down = loss().item();
      v = saved;
      const double numeric = (up - down) / (2 * options.step);
      const double a = analytic[i];
      const double rel = std::abs(a - numeric) /
                         std::max({std::abs(a), std::abs(numeric), options.floor});
      if (first || rel > check.max_rel_error) {
        first = false;
        check.max_rel_error = rel;
        check.worst_index = i;
        check.worst_analytic = a;
        check.worst_numeric = numeric;
      }
    }
    check.passed = check.max_rel_error <= options.tolerance;
    report.tensors.push_back(check);
  }
  return report;
}

}  // namespace dynfilt
