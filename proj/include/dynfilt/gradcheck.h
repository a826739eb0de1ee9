// Copyright 2026 The dynfilt Authors
// SPDX-License-Identifier: Apache-2.0

// Central finite-difference check of every front-end parameter tensor.

#ifndef DYNFILT_GRADCHECK_H_
#define DYNFILT_GRADCHECK_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dynfilt/dynfilter.h"

namespace dynfilt {

struct GradcheckOptions {
  FrontEndConfig frontend;
  std::size_t frames = 98;
  std::uint64_t seed = 0;
  double step = 1e-5;
  double tolerance = 1e-4;
  // Denominator floor of the relative error. An O(10) loss leaves roughly
  // 1e-9 of roundoff in each central difference, so gradients that are
  // structurally zero are held to tolerance * floor in absolute terms.
  double floor = 1e-4;
  // Tensors up to this size are checked in full, larger ones on this many
  // seeded coordinates.
  std::size_t max_coordinates = 64;
  // Test hook: may rewrite the analytic gradient of the named tensor.
  std::function<void(const std::string& name, std::span<double> grad)> corrupt;
};

struct TensorCheck {
  std::string name;
  std::size_t size = 0;
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  bool passed = true;
};

struct GradcheckReport {
  std::uint64_t seed = 0;
  double tolerance = 0.0;
  std::vector<TensorCheck> tensors;

  bool passed() const;
  // One line per tensor, then a verdict. Byte-identical for a fixed seed.
  std::string ToText() const;
};

// Random parameters (norm gains and shifts perturbed away from 1 and 0) and a
// random [F, frames] input, loss = sum(front_end(x) * r) for a fixed random r.
GradcheckReport RunGradcheck(const GradcheckOptions& options);

}  // namespace dynfilt

#endif  // DYNFILT_GRADCHECK_H_
