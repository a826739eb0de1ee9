// Copyright 2026 The dynfilt Authors
// SPDX-License-Identifier: Apache-2.0

// Efficient dynamic filter front-end.
//
// The front-end rescales and filters a single-channel T-F feature with a
// convolution whose weights are generated from the input itself:
//
//   kernel branch (instance level): chunk -> intra-chunk conv -> norm ->
//     inter-chunk conv -> norm -> dynamic attention pooling -> FC -> Swish,
//     giving K = 9 kernel weights per utterance;
//   pixel branch: 3x3 dilated conv -> sigmoid, giving one scale per pixel.
//
// The dynamic layer applies weight[n][k] = pixel[n] * kernel[k] to the 3x3
// (dilation 2) neighbourhood of every pixel n.

#ifndef DYNFILT_DYNFILTER_H_
#define DYNFILT_DYNFILTER_H_

#include <cstddef>
#include <utility>
#include <vector>

#include "dynfilt/ops.h"
#include "dynfilt/param_registry.h"
#include "dynfilt/random.h"
#include "dynfilt/tensor.h"

namespace dynfilt {

struct FrontEndConfig {
  std::size_t freq_bins = 40;
  std::size_t chunks = 2;

  // Chunk separable convolution, both stages.
  std::size_t cs_kernel = 2;
  std::size_t cs_dilation = 2;
  std::size_t cs_time_stride = 2;

  // Dynamic attention pooling query generator.
  std::size_t dap_kernel = 25;
  std::size_t dap_stride = 10;
  // One 1 x dap_kernel kernel per frequency row (true) or a single kernel
  // shared by all rows (false).
  bool dap_depthwise = true;
  // Pool the raw input instead of the CS-Conv output.
  bool dap_on_input = false;

  // Pixel branch and dynamic layer geometry.
  std::size_t dyn_kernel = 3;
  std::size_t dyn_dilation = 2;

  bool fc_bias = false;
  double norm_eps = 1e-5;

  std::size_t kernel_taps() const { return dyn_kernel * dyn_kernel; }
};

// Learnable tensors of the filter generator.
struct FrontEndParams {
  Tensor intra_weight;  // [1, 1, k, k]
  Tensor intra_gamma;   // [F]
  Tensor intra_beta;    // [F]
  Tensor inter_weight;  // [1, 1, k, k]
  Tensor inter_gamma;
  Tensor inter_beta;
  Tensor dap_weight;  // [F, 1, 1, L] depthwise or [1, 1, 1, L]
  Tensor fc_weight;   // [K, F]
  Tensor fc_bias;     // [K], undefined unless FrontEndConfig::fc_bias
  Tensor pdf_weight;  // [1, 1, 3, 3]

  // Stable checkpoint names, prefixed "frontend.".
  std::vector<NamedTensor> Named() const;
};

// Weights ~ U(-a, a) with a = sqrt(1 / fan_in); norm gamma = 1, beta = 0.
FrontEndParams InitFrontEndParams(const FrontEndConfig& cfg, Rng& rng);
// Every weight and bias zero, gamma = 1.
FrontEndParams ZeroFrontEndParams(const FrontEndConfig& cfg);

// Non-overlapping temporal chunks of an [F, T] feature. The last chunk
// absorbs T mod C remainder frames.
struct ChunkedFeature {
  std::vector<Tensor> chunks;  // each [F, Tc_j]
  std::vector<std::pair<std::size_t, std::size_t>> bounds;

  std::size_t freq_bins() const { return chunks.front().dim(0); }
  std::size_t frames() const { return bounds.back().second; }
};

ChunkedFeature Chunk(const Tensor& x, std::size_t chunks);
Tensor Unchunk(const ChunkedFeature& chunked);

// Extents of every intermediate of the front-end for a T-frame input.
// Throws GeometryError when any stage does not fit.
struct FrontEndPlan {
  std::size_t freq_bins = 0;
  std::size_t frames = 0;
  std::vector<std::pair<std::size_t, std::size_t>> chunk_bounds;
  std::vector<std::size_t> intra_frames;  // per chunk
  std::size_t concat_frames = 0;
  std::size_t inter_frames = 0;
  std::size_t dap_input_frames = 0;
  bool dap_padded = false;
  std::size_t dap_conv_frames = 0;
  std::size_t pixels = 0;  // N
  std::size_t taps = 0;    // K
};

FrontEndPlan PlanFrontEnd(const FrontEndConfig& cfg, std::size_t frames);

ConvSpec IntraChunkConvSpec(const FrontEndConfig& cfg);
ConvSpec InterChunkConvSpec(const FrontEndConfig& cfg);
// Time padding is used only when the input is shorter than the kernel.
ConvSpec DapConvSpec(const FrontEndConfig& cfg, std::size_t input_frames);
ConvSpec DynamicConvSpec(const FrontEndConfig& cfg);

// Intra-chunk conv + per-chunk norm, then inter-chunk conv over the
// time-concatenated result + chunked norm. Output is [F, T''].
Tensor CsConv(const ChunkedFeature& x, const FrontEndParams& params,
              const FrontEndConfig& cfg);

struct DapOutput {
  Tensor pooled;     // [F]
  Tensor attention;  // [T], sums to one
  Tensor query;      // [F], the generated w_d
};

// Dynamic attention pooling of x [F, T].
DapOutput Dap(const Tensor& x, const Tensor& dap_weight,
              const FrontEndConfig& cfg);

// Kernel weights [K] for the whole utterance.
Tensor IdfWeights(const Tensor& x, const FrontEndParams& params,
                  const FrontEndConfig& cfg);

// Pixel weights [F * T] in (0, 1), row-major.
Tensor PdfWeights(const Tensor& x, const FrontEndParams& params,
                  const FrontEndConfig& cfg);

struct DynamicKernel {
  Tensor pixel_weights;   // [N]
  Tensor kernel_weights;  // [K]

  // The implied N x K weight matrix, row-major.
  std::vector<double> CombinedMatrix() const;
};

// out[n] = pixel[n] * sum_k kernel[k] * patch_k(x, n), patch gathered from
// the zero-padded dilated neighbourhood. Differentiable in all three inputs.
Tensor DynamicConv(const Tensor& x, const Tensor& pixel_weights,
                   const Tensor& kernel_weights, const FrontEndConfig& cfg);

struct FrontEndOutput {
  Tensor output;  // [F, T]
  DynamicKernel kernel;
};

FrontEndOutput RunFrontEnd(const Tensor& x, const FrontEndParams& params,
                           const FrontEndConfig& cfg);

inline Tensor FrontEnd(const Tensor& x, const FrontEndParams& params,
                       const FrontEndConfig& cfg) {
  return RunFrontEnd(x, params, cfg).output;
}

}  // namespace dynfilt

#endif  // DYNFILT_DYNFILTER_H_
