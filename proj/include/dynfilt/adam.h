// Copyright 2026 The dynfilt Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef DYNFILT_ADAM_H_
#define DYNFILT_ADAM_H_

#include <cstdint>
#include <vector>

#include "dynfilt/tensor.h"

namespace dynfilt {

struct AdamState {
  std::int64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected Adam update of every tensor in `params` using its
// current gradient. Moment buffers are created on the first call; a tensor
// with no gradient buffer is treated as having a zero gradient.
void AdamStep(std::vector<Tensor>& params, AdamState& state);

}  // namespace dynfilt

#endif  // DYNFILT_ADAM_H_
