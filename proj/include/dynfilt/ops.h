// Copyright 2026 The dynfilt Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef DYNFILT_OPS_H_
#define DYNFILT_OPS_H_

#include <cstddef>
#include <vector>

#include "dynfilt/tensor.h"

namespace dynfilt {

enum class PadMode {
  kValid,
  kSameFreq,  // zero-pad axis 0 (height / frequency) only
  kSameBoth,
};

struct ConvSpec {
  std::size_t kernel_h = 1;
  std::size_t kernel_w = 1;
  std::size_t dilation = 1;
  std::size_t stride_h = 1;
  std::size_t stride_w = 1;
  PadMode pad_mode = PadMode::kValid;
  // Channel groups; groups == Cin == Cout gives a depthwise convolution.
  std::size_t groups = 1;
};

// Zero padding placed before and after one axis.
struct AxisPadding {
  std::size_t before = 0;
  std::size_t after = 0;
};

std::size_t EffectiveExtent(std::size_t kernel, std::size_t dilation);

// "Same" padding splits (effective - 1) zeros, the odd one going after.
AxisPadding SamePadding(std::size_t kernel, std::size_t dilation);

// Output extent of one axis: floor((padded - effective) / stride) + 1.
// Throws GeometryError when the effective kernel exceeds the padded extent.
std::size_t ConvOutputExtent(std::size_t input, std::size_t kernel,
                             std::size_t dilation, std::size_t stride,
                             AxisPadding pad);

// Output (H', W') of conv2d on an H x W plane.
std::pair<std::size_t, std::size_t> Conv2dOutputSize(std::size_t height,
                                                     std::size_t width,
                                                     const ConvSpec& spec);

// input [Cin, H, W], kernel [Cout, Cin / groups, kh, kw] -> [Cout, H', W'].
// Cross-correlation, as in every deep learning framework.
Tensor Conv2d(const Tensor& input, const Tensor& kernel, const ConvSpec& spec);

// x [C, ...] + bias [C] broadcast over trailing axes.
Tensor AddChannelBias(const Tensor& x, const Tensor& bias);

// W [m, n] * x [n] -> [m].
Tensor MatVec(const Tensor& w, const Tensor& x);
// a [m, n] * b [n, p] -> [m, p].
Tensor MatMul(const Tensor& a, const Tensor& b);
Tensor Transpose(const Tensor& a);

Tensor Softmax(const Tensor& x);
Tensor Sigmoid(const Tensor& x);
Tensor Swish(const Tensor& x);

Tensor Add(const Tensor& a, const Tensor& b);
Tensor Mul(const Tensor& a, const Tensor& b);
Tensor Scale(const Tensor& a, double factor);
Tensor Sum(const Tensor& a);
Tensor Mean(const Tensor& a);
// Sum of a list of same-shape tensors, reduced in list order.
Tensor AddN(const std::vector<Tensor>& terms);

Tensor Reshape(const Tensor& x, Shape shape);

// Columns [begin, end) of a rank-2 tensor.
Tensor SliceCols(const Tensor& x, std::size_t begin, std::size_t end);
// Concatenates rank-2 tensors with equal row counts along columns.
Tensor ConcatCols(const std::vector<Tensor>& parts);

// Mean over the last axis: [..., n] -> [...].
Tensor MeanLastAxis(const Tensor& x);

// Frame ranges of `chunks` consecutive temporal chunks over `frames` frames;
// the last chunk absorbs the remainder. Throws GeometryError on an empty
// chunk.
std::vector<std::pair<std::size_t, std::size_t>> ChunkBounds(
    std::size_t frames, std::size_t chunks);

// Instance normalization of x [F, T] per row within each temporal chunk:
// (x - mean) / sqrt(max(var, eps)), then gamma[f] * . + beta[f].
// gamma/beta may be undefined tensors to skip the affine step.
Tensor ChunkedInstanceNorm(const Tensor& x, std::size_t chunks,
                           const Tensor& gamma, const Tensor& beta,
                           double eps = 1e-5);

// -log softmax(logits)[label], via log-sum-exp.
Tensor CrossEntropy(const Tensor& logits, std::size_t label);

}  // namespace dynfilt

#endif  // DYNFILT_OPS_H_
