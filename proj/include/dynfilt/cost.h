// Copyright 2026 The dynfilt Authors
// SPDX-License-Identifier: Apache-2.0

// Parameter and FLOP accounting for the front-end.

#ifndef DYNFILT_COST_H_
#define DYNFILT_COST_H_

#include <cstddef>
#include <string>
#include <vector>

#include "dynfilt/dynfilter.h"

namespace dynfilt {

inline constexpr char kFlopConvention[] =
    "1 multiply-accumulate = 2 FLOPs; convolutions count every tap including "
    "zero padding; add/sub/mul/div/compare = 1, exp = 1, sigmoid = 4, "
    "swish = 5, instance norm = 7 per element, softmax = 4 per element";

struct BlockCost {
  std::string name;
  std::size_t params = 0;
  std::size_t flops = 0;
};

struct CostReport {
  std::size_t freq_bins = 0;
  std::size_t frames = 0;
  std::vector<BlockCost> blocks;
  std::size_t total_params = 0;
  std::size_t total_flops = 0;
  std::string convention = kFlopConvention;

  const BlockCost& Block(const std::string& name) const;
  // Fixed-width table followed by the totals and the convention.
  std::string ToText() const;
  std::string ToCsv() const;
};

// Blocks, in forward order: cs_intra, cs_inter (each conv + norm), dap,
// idf_fc, pdf, dynamic_conv. Parameters are counted from the tensors of
// `params`; FLOPs follow the shapes planned for a `frames`-frame input.
CostReport AccountFrontEnd(const FrontEndConfig& cfg, const FrontEndParams& params,
                           std::size_t frames);
CostReport AccountFrontEnd(const FrontEndConfig& cfg, std::size_t frames);

}  // namespace dynfilt

#endif  // DYNFILT_COST_H_
