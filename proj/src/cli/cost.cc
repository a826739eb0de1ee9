// Copyright 2026 The dynfilt Authors
// SPDX-License-Identifier: Apache-2.0

#include "dynfilt/cost.h"

#include <cstdio>
#include <sstream>

#include "dynfilt/errors.h"

namespace dynfilt {

namespace {

constexpr std::size_t kNormFlops = 7;
constexpr std::size_t kSoftmaxFlops = 4;
constexpr std::size_t kSigmoidFlops = 4;
constexpr std::size_t kSwishFlops = 5;

// "frontend.cs_intra_norm.gamma" -> "cs_intra".
std::string BlockOf(const std::string& name) {
  std::string s = name.substr(name.find('.') + 1);
  s = s.substr(0, s.find('.'));
  if (s.size() > 5 && s.ends_with("_norm")) s.resize(s.size() - 5);
  return s;
}

std::size_t ConvFlops(std::size_t outputs, const ConvSpec& spec, std::size_t in_per_group) {
  return 2 * outputs * spec.kernel_h * spec.kernel_w * in_per_group;
}

}  // namespace

const BlockCost& CostReport::Block(const std::string& name) const {
  for (const BlockCost& b : blocks) {
    if (b.name == name) return b;
  }
  throw ContractError("no cost block named " + name);
}

std::string CostReport::ToText() const {
  std::ostringstream out;
  char line[128];
  out << "front-end cost on a " << freq_bins << " x " << frames << " input\n";
  std::snprintf(line, sizeof line, "%-14s %10s %12s\n", "block", "params", "flops");
  out << line;
  for (const BlockCost& b : blocks) {
    std::snprintf(line, sizeof line, "%-14s %10zu %12zu\n", b.name.c_str(), b.params,
                  b.flops);
    out << line;
  }
  std::snprintf(line, sizeof line, "%-14s %10zu %12zu\n", "total", total_params,
                total_flops);
  out << line << "convention: " << convention << '\n';
  return out.str();
}

std::string CostReport::ToCsv() const {
  std::ostringstream out;
  out << "block,params,flops\n";
  for (const BlockCost& b : blocks) out << b.name << ',' << b.params << ',' << b.flops << '\n';
  out << "total," << total_params << ',' << total_flops << '\n';
  return out.str();
}

CostReport AccountFrontEnd(const FrontEndConfig& cfg, const FrontEndParams& params,
                           std::size_t frames) {
  const FrontEndPlan plan = PlanFrontEnd(cfg, frames);
  const std::size_t f = cfg.freq_bins;
  CostReport r;
  r.freq_bins = f;
  r.frames = frames;
  r.blocks = {{"cs_intra"}, {"cs_inter"}, {"dap"}, {"idf_fc"}, {"pdf"}, {"dynamic_conv"}};
  auto block = [&](const std::string& name) -> BlockCost& {
    for (BlockCost& b : r.blocks) {
      if (b.name == name) return b;
    }
    throw ContractError("front-end tensor in unknown block " + name);
  };

  for (const NamedTensor& nt : params.Named()) block(BlockOf(nt.name)).params += nt.tensor.size();

  if (!cfg.dap_on_input) {
    std::size_t intra_out = 0;
    for (std::size_t w : plan.intra_frames) intra_out += f * w;
    block("cs_intra").flops =
        ConvFlops(intra_out, IntraChunkConvSpec(cfg), 1) + kNormFlops * intra_out;
    const std::size_t inter_out = f * plan.inter_frames;
    block("cs_inter").flops =
        ConvFlops(inter_out, InterChunkConvSpec(cfg), 1) + kNormFlops * inter_out;
  }

  const std::size_t t = plan.dap_input_frames;
  const std::size_t map = f * plan.dap_conv_frames;
  block("dap").flops = ConvFlops(map, DapConvSpec(cfg, t), 1)  // query generator
                       + map                                   // temporal average
                       + 2 * t * f                             // scores
                       + kSoftmaxFlops * t                     // attention
                       + 2 * t * f;                            // pooling

  const std::size_t k = plan.taps;
  block("idf_fc").flops = 2 * k * f + (cfg.fc_bias ? k : 0) + kSwishFlops * k;

  const std::size_t n = plan.pixels;
  block("pdf").flops = ConvFlops(n, DynamicConvSpec(cfg), 1) + kSigmoidFlops * n;
  // Forming the N x K weights, then applying them.
  block("dynamic_conv").flops = n * k + 2 * n * k;

  for (const BlockCost& b : r.blocks) {
    r.total_params += b.params;
    r.total_flops += b.flops;
  }
  return r;
}

CostReport AccountFrontEnd(const FrontEndConfig& cfg, std::size_t frames) {
  return AccountFrontEnd(cfg, ZeroFrontEndParams(cfg), frames);
}

}  // namespace dynfilt
