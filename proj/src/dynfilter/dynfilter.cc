// Copyright 2026 The dynfilt Authors
// SPDX-License-Identifier: Apache-2.0

#include "dynfilt/dynfilter.h"

#include <cmath>
#include <string>

#include "dynfilt/errors.h"

namespace dynfilt {

namespace {

Tensor UniformTensor(Shape shape, std::size_t fan_in, Rng& rng) {
  const double a = std::sqrt(1.0 / static_cast<double>(fan_in));
  std::vector<double> values(NumElements(shape));
  rng.FillUniform(values, -a, a);
  return Tensor::FromData(std::move(shape), std::move(values), true);
}

Shape DapWeightShape(const FrontEndConfig& cfg) {
  return cfg.dap_depthwise ? Shape{cfg.freq_bins, 1, 1, cfg.dap_kernel}
                           : Shape{1, 1, 1, cfg.dap_kernel};
}

void CheckFeature(const Tensor& x, const FrontEndConfig& cfg) {
  if (x.rank() != 2 || x.dim(0) != cfg.freq_bins) {
    throw DimensionError("front-end expects a [" +
                         std::to_string(cfg.freq_bins) + ", T] feature, got " +
                         ShapeToString(x.shape()));
  }
}

}  // namespace

std::vector<NamedTensor> FrontEndParams::Named() const {
  std::vector<NamedTensor> out{
      {"frontend.cs_intra.weight", intra_weight},
      {"frontend.cs_intra_norm.gamma", intra_gamma},
      {"frontend.cs_intra_norm.beta", intra_beta},
      {"frontend.cs_inter.weight", inter_weight},
      {"frontend.cs_inter_norm.gamma", inter_gamma},
      {"frontend.cs_inter_norm.beta", inter_beta},
      {"frontend.dap.weight", dap_weight},
      {"frontend.idf_fc.weight", fc_weight},
  };
  if (fc_bias.defined()) out.push_back({"frontend.idf_fc.bias", fc_bias});
  out.push_back({"frontend.pdf.weight", pdf_weight});
  return out;
}

FrontEndParams InitFrontEndParams(const FrontEndConfig& cfg, Rng& rng) {
  const std::size_t k = cfg.cs_kernel;
  const std::size_t f = cfg.freq_bins;
  FrontEndParams p;
  p.intra_weight = UniformTensor({1, 1, k, k}, k * k, rng);
  p.intra_gamma = Tensor::Full({f}, 1.0, true);
  p.intra_beta = Tensor::Zeros({f}, true);
  p.inter_weight = UniformTensor({1, 1, k, k}, k * k, rng);
  p.inter_gamma = Tensor::Full({f}, 1.0, true);
  p.inter_beta = Tensor::Zeros({f}, true);
  p.dap_weight = UniformTensor(DapWeightShape(cfg), cfg.dap_kernel, rng);
  p.fc_weight = UniformTensor({cfg.kernel_taps(), f}, f, rng);
  if (cfg.fc_bias) p.fc_bias = Tensor::Zeros({cfg.kernel_taps()}, true);
  p.pdf_weight = UniformTensor({1, 1, cfg.dyn_kernel, cfg.dyn_kernel},
                               cfg.kernel_taps(), rng);
  return p;
}

FrontEndParams ZeroFrontEndParams(const FrontEndConfig& cfg) {
  const std::size_t k = cfg.cs_kernel;
  const std::size_t f = cfg.freq_bins;
  FrontEndParams p;
  p.intra_weight = Tensor::Zeros({1, 1, k, k}, true);
  p.intra_gamma = Tensor::Full({f}, 1.0, true);
  p.intra_beta = Tensor::Zeros({f}, true);
  p.inter_weight = Tensor::Zeros({1, 1, k, k}, true);
  p.inter_gamma = Tensor::Full({f}, 1.0, true);
  p.inter_beta = Tensor::Zeros({f}, true);
  p.dap_weight = Tensor::Zeros(DapWeightShape(cfg), true);
  p.fc_weight = Tensor::Zeros({cfg.kernel_taps(), f}, true);
  if (cfg.fc_bias) p.fc_bias = Tensor::Zeros({cfg.kernel_taps()}, true);
  p.pdf_weight = Tensor::Zeros({1, 1, cfg.dyn_kernel, cfg.dyn_kernel}, true);
  return p;
}

ChunkedFeature Chunk(const Tensor& x, std::size_t chunks) {
  if (x.rank() != 2) {
    throw DimensionError("chunk expects [F, T], got " + ShapeToString(x.shape()));
  }
  ChunkedFeature out;
  out.bounds = ChunkBounds(x.dim(1), chunks);
  for (const auto& [b, e] : out.bounds) out.chunks.push_back(SliceCols(x, b, e));
  return out;
}

Tensor Unchunk(const ChunkedFeature& chunked) {
  return ConcatCols(chunked.chunks);
}

ConvSpec IntraChunkConvSpec(const FrontEndConfig& cfg) {
  ConvSpec spec;
  spec.kernel_h = spec.kernel_w = cfg.cs_kernel;
  spec.dilation = cfg.cs_dilation;
  spec.stride_h = 1;
  spec.stride_w = cfg.cs_time_stride;
  spec.pad_mode = PadMode::kSameFreq;
  return spec;
}

ConvSpec InterChunkConvSpec(const FrontEndConfig& cfg) {
  return IntraChunkConvSpec(cfg);
}

ConvSpec DapConvSpec(const FrontEndConfig& cfg, std::size_t input_frames) {
  ConvSpec spec;
  spec.kernel_h = 1;
  spec.kernel_w = cfg.dap_kernel;
  spec.stride_w = cfg.dap_stride;
  spec.pad_mode =
      input_frames < cfg.dap_kernel ? PadMode::kSameBoth : PadMode::kValid;
  spec.groups = cfg.dap_depthwise ? cfg.freq_bins : 1;
  return spec;
}

ConvSpec DynamicConvSpec(const FrontEndConfig& cfg) {
  ConvSpec spec;
  spec.kernel_h = spec.kernel_w = cfg.dyn_kernel;
  spec.dilation = cfg.dyn_dilation;
  spec.pad_mode = PadMode::kSameBoth;
  return spec;
}

FrontEndPlan PlanFrontEnd(const FrontEndConfig& cfg, std::size_t frames) {
  FrontEndPlan plan;
  plan.freq_bins = cfg.freq_bins;
  plan.frames = frames;
  plan.taps = cfg.kernel_taps();
  plan.chunk_bounds = ChunkBounds(frames, cfg.chunks);
  const ConvSpec intra = IntraChunkConvSpec(cfg);
  for (const auto& [b, e] : plan.chunk_bounds) {
    const auto [h, w] = Conv2dOutputSize(cfg.freq_bins, e - b, intra);
    if (h != cfg.freq_bins) throw GeometryError("intra conv changed F");
    plan.intra_frames.push_back(w);
    plan.concat_frames += w;
  }
  const auto [h2, w2] =
      Conv2dOutputSize(cfg.freq_bins, plan.concat_frames, InterChunkConvSpec(cfg));
  if (h2 != cfg.freq_bins) throw GeometryError("inter conv changed F");
  plan.inter_frames = w2;
  // The chunked norm after the inter conv needs a frame per chunk.
  ChunkBounds(plan.inter_frames, cfg.chunks);
  plan.dap_input_frames = cfg.dap_on_input ? frames : plan.inter_frames;
  const ConvSpec dap = DapConvSpec(cfg, plan.dap_input_frames);
  plan.dap_padded = dap.pad_mode != PadMode::kValid;
  plan.dap_conv_frames = Conv2dOutputSize(1, plan.dap_input_frames, dap).second;
  const auto [h3, w3] =
      Conv2dOutputSize(cfg.freq_bins, frames, DynamicConvSpec(cfg));
  plan.pixels = h3 * w3;
  return plan;
}

Tensor CsConv(const ChunkedFeature& x, const FrontEndParams& params,
              const FrontEndConfig& cfg) {
  const std::size_t f = x.freq_bins();
  const ConvSpec intra = IntraChunkConvSpec(cfg);
  std::vector<Tensor> parts;
  parts.reserve(x.chunks.size());
  for (const Tensor& chunk : x.chunks) {
    Tensor y = Conv2d(Reshape(chunk, {1, f, chunk.dim(1)}), params.intra_weight,
                      intra);
    y = Reshape(y, {f, y.dim(2)});
    parts.push_back(ChunkedInstanceNorm(y, 1, params.intra_gamma,
                                        params.intra_beta, cfg.norm_eps));
  }
  Tensor joined = ConcatCols(parts);
  Tensor y = Conv2d(Reshape(joined, {1, f, joined.dim(1)}), params.inter_weight,
                    InterChunkConvSpec(cfg));
  y = Reshape(y, {f, y.dim(2)});
  return ChunkedInstanceNorm(y, cfg.chunks, params.inter_gamma,
                             params.inter_beta, cfg.norm_eps);
}

DapOutput Dap(const Tensor& x, const Tensor& dap_weight,
              const FrontEndConfig& cfg) {
  if (x.rank() != 2) {
    throw DimensionError("dap expects [F, T], got " + ShapeToString(x.shape()));
  }
  const std::size_t f = x.dim(0), t = x.dim(1);
  const ConvSpec spec = DapConvSpec(cfg, t);
  Tensor map;
  if (cfg.dap_depthwise) {
    if (dap_weight.dim(0) != f) {
      throw DimensionError("dap: query generator has " +
                           std::to_string(dap_weight.dim(0)) +
                           " rows but the feature has " + std::to_string(f));
    }
    map = Conv2d(Reshape(x, {f, 1, t}), dap_weight, spec);
  } else {
    map = Conv2d(Reshape(x, {1, f, t}), dap_weight, spec);
  }
  DapOutput out;
  out.query = MeanLastAxis(Reshape(map, {f, map.size() / f}));
  out.attention = Softmax(MatVec(Transpose(x), out.query));
  out.pooled = MatVec(x, out.attention);
  return out;
}

Tensor IdfWeights(const Tensor& x, const FrontEndParams& params,
                  const FrontEndConfig& cfg) {
  CheckFeature(x, cfg);
  const Tensor source =
      cfg.dap_on_input ? x : CsConv(Chunk(x, cfg.chunks), params, cfg);
  Tensor h = MatVec(params.fc_weight, Dap(source, params.dap_weight, cfg).pooled);
  if (params.fc_bias.defined()) h = Add(h, params.fc_bias);
  return Swish(h);
}

Tensor PdfWeights(const Tensor& x, const FrontEndParams& params,
                  const FrontEndConfig& cfg) {
  CheckFeature(x, cfg);
  const std::size_t f = x.dim(0), t = x.dim(1);
  ConvSpec spec = DynamicConvSpec(cfg);
  Tensor y = Conv2d(Reshape(x, {1, f, t}), params.pdf_weight, spec);
  return Reshape(Sigmoid(y), {f * t});
}

std::vector<double> DynamicKernel::CombinedMatrix() const {
  const std::size_t n = pixel_weights.size(), k = kernel_weights.size();
  std::vector<double> w(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      w[i * k + j] = pixel_weights.at(i) * kernel_weights.at(j);
    }
  }
  return w;
}

Tensor DynamicConv(const Tensor& x, const Tensor& pixel_weights,
                   const Tensor& kernel_weights, const FrontEndConfig& cfg) {
  if (x.rank() != 2) {
    throw DimensionError("dynamic conv expects [F, T], got " +
                         ShapeToString(x.shape()));
  }
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  const std::size_t k = cfg.dyn_kernel, d = cfg.dyn_dilation;
  if (pixel_weights.size() != rows * cols) {
    throw DimensionError("dynamic conv: " + std::to_string(pixel_weights.size()) +
                         " pixel weights for a " + ShapeToString(x.shape()) +
                         " feature");
  }
  if (kernel_weights.size() != k * k) {
    throw DimensionError("dynamic conv: expected " + std::to_string(k * k) +
                         " kernel weights, got " +
                         std::to_string(kernel_weights.size()));
  }
  const auto pad = static_cast<std::ptrdiff_t>(SamePadding(k, d).before);
  const auto nrows = static_cast<std::ptrdiff_t>(rows);
  const auto ncols = static_cast<std::ptrdiff_t>(cols);
  // Calls fn(tap, out_index, in_index) for every tap that reads a real pixel.
  auto for_each_tap = [=](auto&& fn) {
    for (std::size_t i = 0; i < k; ++i) {
      const std::ptrdiff_t dr = static_cast<std::ptrdiff_t>(i * d) - pad;
      for (std::size_t j = 0; j < k; ++j) {
        const std::ptrdiff_t dc = static_cast<std::ptrdiff_t>(j * d) - pad;
        const std::size_t tap = i * k + j;
        const std::ptrdiff_t r_lo = std::max<std::ptrdiff_t>(0, -dr);
        const std::ptrdiff_t r_hi = std::min(nrows, nrows - dr);
        const std::ptrdiff_t c_lo = std::max<std::ptrdiff_t>(0, -dc);
        const std::ptrdiff_t c_hi = std::min(ncols, ncols - dc);
        for (std::ptrdiff_t r = r_lo; r < r_hi; ++r) {
          for (std::ptrdiff_t c = c_lo; c < c_hi; ++c) {
            fn(tap, static_cast<std::size_t>(r * ncols + c),
               static_cast<std::size_t>((r + dr) * ncols + c + dc));
          }
        }
      }
    }
  };

  std::vector<double> response(rows * cols, 0.0);
  {
    const auto xd = x.data();
    const auto kw = kernel_weights.data();
    for_each_tap([&](std::size_t tap, std::size_t o, std::size_t in) {
      response[o] += kw[tap] * xd[in];
    });
  }
  std::vector<double> out(rows * cols);
  for (std::size_t n = 0; n < out.size(); ++n) {
    out[n] = pixel_weights.at(n) * response[n];
  }
  return Tensor::MakeResult(
      x.shape(), std::move(out), {x, pixel_weights, kernel_weights},
      [x, pixel_weights, kernel_weights, for_each_tap,
       response = std::move(response)](std::span<const double> gy,
                                        std::span<std::span<double>> gin) {
        const auto xd = x.data();
        const auto pw = pixel_weights.data();
        const auto kw = kernel_weights.data();
        if (!gin[1].empty()) {
          for (std::size_t n = 0; n < gy.size(); ++n) gin[1][n] += gy[n] * response[n];
        }
        std::vector<double> scaled(gy.size());
        for (std::size_t n = 0; n < gy.size(); ++n) scaled[n] = gy[n] * pw[n];
        const bool want_x = !gin[0].empty(), want_k = !gin[2].empty();
        if (!want_x && !want_k) return;
        for_each_tap([&](std::size_t tap, std::size_t o, std::size_t in) {
          if (want_x) gin[0][in] += scaled[o] * kw[tap];
          if (want_k) gin[2][tap] += scaled[o] * xd[in];
        });
      });
}

FrontEndOutput RunFrontEnd(const Tensor& x, const FrontEndParams& params,
                           const FrontEndConfig& cfg) {
  CheckFeature(x, cfg);
  FrontEndOutput out;
  out.kernel.pixel_weights = PdfWeights(x, params, cfg);
  out.kernel.kernel_weights = IdfWeights(x, params, cfg);
  out.output = DynamicConv(x, out.kernel.pixel_weights,
                           out.kernel.kernel_weights, cfg);
  return out;
}

}  // namespace dynfilt
