// Copyright 2026 The dynfilt Authors
// SPDX-License-Identifier: Apache-2.0

// Independent reference implementations used only by tests. None of these
// call into the code paths they check.

#ifndef DYNFILT_TESTS_ORACLES_H_
#define DYNFILT_TESTS_ORACLES_H_

#include <complex>
#include <cstddef>
#include <functional>
#include <vector>

#include "dynfilt/tensor.h"

namespace dynfilt::oracle {

// Zero-pads explicitly, then evaluates the textbook six-deep loop.
// pad_* are (before, after) pairs.
std::vector<double> NaiveConv2d(const std::vector<double>& input,
                                std::size_t cin, std::size_t h, std::size_t w,
                                const std::vector<double>& kernel,
                                std::size_t cout, std::size_t kh,
                                std::size_t kw, std::size_t dilation,
                                std::size_t stride_h, std::size_t stride_w,
                                std::size_t pad_top, std::size_t pad_bottom,
                                std::size_t pad_left, std::size_t pad_right,
                                std::size_t groups, std::size_t* out_h,
                                std::size_t* out_w);

// out[n] = p[n] * sum_k w[k] * x(neighbour_k(n)), gathered pixel by pixel.
std::vector<double> NaiveDynamicConv(const std::vector<double>& x,
                                     std::size_t rows, std::size_t cols,
                                     const std::vector<double>& pixel,
                                     const std::vector<double>& kernel,
                                     std::size_t k, std::size_t dilation);

std::vector<double> NaiveMatVec(const std::vector<double>& w, std::size_t m,
                                std::size_t n, const std::vector<double>& x);

// Softmax in long double.
std::vector<long double> ExtendedSoftmax(const std::vector<double>& x);

// O(N^2) DFT power spectrum of a zero-padded frame, bins 0..n/2.
std::vector<double> NaiveDftPower(const std::vector<double>& frame,
                                  std::size_t n);

struct ScoredTrial {
  double score;
  bool target;
};

// Evaluates FAR/FRR by direct counting at every candidate threshold (each
// distinct score plus +inf) and interpolates the FAR = FRR crossing.
double BruteForceEer(const std::vector<ScoredTrial>& trials);
double BruteForceMinDcf(const std::vector<ScoredTrial>& trials,
                        double p_target, double c_miss, double c_fa);

// Central differences of `loss` with respect to coordinate `index` of the
// leaf tensor `param`. The tensor is restored afterwards.
double CentralDifference(const std::function<double()>& loss, Tensor& param,
                         std::size_t index, double h);

// |a - b| / max(|a|, |b|, floor).
double RelativeError(double analytic, double numeric, double floor = 1e-6);

// Denominator floor for whole-network checks. Central differences on an O(10)
// loss carry roundoff near 1e-9, so coordinates whose true gradient is
// structurally zero are compared to 1e-8 absolute instead.
inline constexpr double kNetworkGradFloor = 1e-4;

}  // namespace dynfilt::oracle

#endif  // DYNFILT_TESTS_ORACLES_H_
