// Copyright 2026 The dynfilt Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>

#include "dynfilt/adam.h"
#include "dynfilt/errors.h"
#include "dynfilt/ops.h"
#include "dynfilt/random.h"
#include "dynfilt/tensor.h"
#include "oracles.h"

namespace dynfilt {
namespace {

Tensor RandomTensor(Shape shape, Rng& rng, bool requires_grad = false) {
  std::vector<double> v(NumElements(shape));
  rng.FillUniform(v, -1.0, 1.0);
  return Tensor::FromData(std::move(shape), std::move(v), requires_grad);
}

std::vector<double> ToVector(const Tensor& t) {
  return {t.data().begin(), t.data().end()};
}

TEST(TensorTest, ShapeMustMatchData) {
  EXPECT_THROW(Tensor::FromData({2, 3}, std::vector<double>(5)), DimensionError);
  const Tensor t = Tensor::Zeros({2, 3});
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.rank(), 2u);
}

TEST(TensorTest, NonFiniteValuesAreRejected) {
  EXPECT_THROW(Tensor::FromData({1}, {std::nan("")}), NumericError);
  const Tensor big = Tensor::FromData({1}, {1e308});
  EXPECT_THROW(Scale(big, 10.0), NumericError);
}

TEST(TensorTest, MutableDataOnlyOnLeaves) {
  Tensor a = Tensor::Full({2}, 1.0, true);
  Tensor b = Scale(a, 2.0);
  EXPECT_NO_THROW(a.mutable_data());
  EXPECT_THROW(b.mutable_data(), ContractError);
}

TEST(Conv2dTest, AllOnesValid) {
  const Tensor x = Tensor::Full({1, 3, 3}, 1.0);
  const Tensor k = Tensor::Full({1, 1, 2, 2}, 1.0);
  ConvSpec spec;
  spec.kernel_h = spec.kernel_w = 2;
  const Tensor y = Conv2d(x, k, spec);
  EXPECT_EQ(y.shape(), (Shape{1, 2, 2}));
  for (double v : y.data()) EXPECT_DOUBLE_EQ(v, 4.0);
}

TEST(Conv2dTest, DilatedWindowSums) {
  const Tensor x = Tensor::FromData({1, 1, 5}, {1, 2, 3, 4, 5});
  const Tensor k = Tensor::FromData({1, 1, 1, 2}, {1, 1});
  ConvSpec spec;
  spec.kernel_w = 2;
  spec.dilation = 2;
  const Tensor y = Conv2d(x, k, spec);
  EXPECT_EQ(ToVector(y), (std::vector<double>{4, 6, 8}));
}

TEST(Conv2dTest, SameBothOnFeatureSizedInputMatchesOracle) {
  Rng rng(11);
  const Tensor x = RandomTensor({1, 40, 98}, rng);
  const Tensor k = RandomTensor({1, 1, 3, 3}, rng);
  ConvSpec spec;
  spec.kernel_h = spec.kernel_w = 3;
  spec.dilation = 2;
  spec.pad_mode = PadMode::kSameBoth;
  const Tensor y = Conv2d(x, k, spec);
  ASSERT_EQ(y.shape(), (Shape{1, 40, 98}));
  std::size_t oh, ow;
  const auto ref = oracle::NaiveConv2d(ToVector(x), 1, 40, 98, ToVector(k), 1,
                                       3, 3, 2, 1, 1, 2, 2, 2, 2, 1, &oh, &ow);
  ASSERT_EQ(ref.size(), y.size());
  for (std::size_t i = 0; i < ref.size(); ++i) {
    EXPECT_NEAR(y.at(i), ref[i], 1e-12);
  }
}

TEST(Conv2dTest, GeometryAndDimensionErrors) {
  ConvSpec spec;
  spec.kernel_h = spec.kernel_w = 2;
  spec.dilation = 3;  // effective extent 4
  EXPECT_THROW(Conv2d(Tensor::Zeros({1, 3, 3}), Tensor::Zeros({1, 1, 2, 2}), spec),
               GeometryError);
  spec.dilation = 1;
  EXPECT_THROW(Conv2d(Tensor::Zeros({2, 3, 3}), Tensor::Zeros({1, 1, 2, 2}), spec),
               DimensionError);
  EXPECT_THROW(Conv2d(Tensor::Zeros({3, 3}), Tensor::Zeros({1, 1, 2, 2}), spec),
               DimensionError);
}

// Output extents follow floor((padded - effective) / stride) + 1 across the
// supported grid.
TEST(Conv2dTest, OutputSizeRuleOverGrid) {
  for (std::size_t k : {1u, 2u, 3u}) {
    for (std::size_t dil : {1u, 2u}) {
      for (std::size_t stride : {1u, 2u, 3u}) {
        for (PadMode mode : {PadMode::kValid, PadMode::kSameFreq, PadMode::kSameBoth}) {
          for (std::size_t h : {5u, 8u}) {
            for (std::size_t w : {6u, 11u}) {
              ConvSpec spec{k, k, dil, stride, stride, mode, 1};
              const std::size_t eff = (k - 1) * dil + 1;
              const std::size_t pad_h = mode == PadMode::kValid ? 0 : eff - 1;
              const std::size_t pad_w = mode == PadMode::kSameBoth ? eff - 1 : 0;
              if (eff > w + pad_w || eff > h + pad_h) {
                EXPECT_THROW(Conv2dOutputSize(h, w, spec), GeometryError);
                continue;
              }
              const auto [oh, ow] = Conv2dOutputSize(h, w, spec);
              EXPECT_EQ(oh, (h + pad_h - eff) / stride + 1);
              EXPECT_EQ(ow, (w + pad_w - eff) / stride + 1);
              const Tensor y = Conv2d(Tensor::Zeros({1, h, w}),
                                      Tensor::Zeros({1, 1, k, k}), spec);
              EXPECT_EQ(y.shape(), (Shape{1, oh, ow}));
            }
          }
        }
      }
    }
  }
}

TEST(Conv2dTest, RandomInstancesMatchOracle) {
  Rng rng(2024);
  for (int trial = 0; trial < 120; ++trial) {
    const std::size_t groups = 1 + rng.Below(2);
    const std::size_t cin = groups * (1 + rng.Below(2));
    const std::size_t cout = groups * (1 + rng.Below(2));
    const std::size_t kh = 1 + rng.Below(3), kw = 1 + rng.Below(3);
    const std::size_t dil = 1 + rng.Below(2);
    const std::size_t sh = 1 + rng.Below(2), sw = 1 + rng.Below(3);
    const auto mode = static_cast<PadMode>(rng.Below(3));
    const std::size_t h = 5 + rng.Below(6), w = 5 + rng.Below(9);
    ConvSpec spec{kh, kw, dil, sh, sw, mode, groups};
    const Tensor x = RandomTensor({cin, h, w}, rng);
    const Tensor k = RandomTensor({cout, cin / groups, kh, kw}, rng);
    const AxisPadding ph = mode == PadMode::kValid ? AxisPadding{} : SamePadding(kh, dil);
    const AxisPadding pw = mode == PadMode::kSameBoth ? SamePadding(kw, dil) : AxisPadding{};
    std::size_t oh, ow;
    const auto ref = oracle::NaiveConv2d(ToVector(x), cin, h, w, ToVector(k), cout,
                                         kh, kw, dil, sh, sw, ph.before, ph.after,
                                         pw.before, pw.after, groups, &oh, &ow);
    const Tensor y = Conv2d(x, k, spec);
    ASSERT_EQ(y.shape(), (Shape{cout, oh, ow}));
    for (std::size_t i = 0; i < ref.size(); ++i) {
      EXPECT_LE(oracle::RelativeError(y.at(i), ref[i], 1e-12), 1e-10);
    }
  }
}

TEST(MatVecTest, HandValues) {
  const Tensor id = Tensor::FromData({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  EXPECT_EQ(ToVector(MatVec(id, Tensor::FromData({3}, {1, 2, 3}))),
            (std::vector<double>{1, 2, 3}));
  const Tensor w = Tensor::FromData({2, 2}, {1, 2, 3, 4});
  EXPECT_EQ(ToVector(MatVec(w, Tensor::FromData({2}, {1, 1}))),
            (std::vector<double>{3, 7}));
  EXPECT_THROW(MatVec(w, Tensor::Zeros({3})), DimensionError);
}

TEST(MatVecTest, RandomInstancesMatchOracle) {
  Rng rng(5);
  {
    const Tensor w = RandomTensor({9, 40}, rng);
    const Tensor x = RandomTensor({40}, rng);
    const auto ref = oracle::NaiveMatVec(ToVector(w), 9, 40, ToVector(x));
    const Tensor y = MatVec(w, x);
    for (std::size_t i = 0; i < 9; ++i) EXPECT_NEAR(y.at(i), ref[i], 1e-12);
  }
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 1 + rng.Below(12), n = 1 + rng.Below(12);
    const Tensor w = RandomTensor({m, n}, rng);
    const Tensor x = RandomTensor({n}, rng);
    const auto ref = oracle::NaiveMatVec(ToVector(w), m, n, ToVector(x));
    const Tensor y = MatVec(w, x);
    for (std::size_t i = 0; i < m; ++i) {
      EXPECT_LE(oracle::RelativeError(y.at(i), ref[i], 1e-12), 1e-10);
    }
  }
}

TEST(SoftmaxTest, UniformAndSaturated) {
  const Tensor u = Softmax(Tensor::Zeros({4}));
  for (double v : u.data()) EXPECT_DOUBLE_EQ(v, 0.25);
  const Tensor s = Softmax(Tensor::FromData({2}, {1000, 0}));
  EXPECT_NEAR(s.at(0), 1.0, 1e-12);
  EXPECT_NEAR(s.at(1), 0.0, 1e-12);
}

TEST(SoftmaxTest, RandomInstancesMatchExtendedPrecision) {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = trial == 0 ? 98 : 1 + rng.Below(64);
    std::vector<double> v(n);
    rng.FillUniform(v, -20, 20);
    const Tensor y = Softmax(Tensor::FromData({n}, v));
    const auto ref = oracle::ExtendedSoftmax(v);
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_GT(y.at(i), 0.0);
      EXPECT_LE(oracle::RelativeError(y.at(i), static_cast<double>(ref[i]), 1e-300),
                1e-10);
      total += y.at(i);
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
    // Shift invariance.
    std::vector<double> shifted = v;
    for (double& s : shifted) s += 3.25;
    const Tensor ys = Softmax(Tensor::FromData({n}, shifted));
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(ys.at(i), y.at(i), 1e-12);
  }
}

TEST(SwishTest, KnownValues) {
  const Tensor y = Swish(Tensor::FromData({4}, {0.0, 1.0, 40.0, -40.0}));
  EXPECT_EQ(y.at(0), 0.0);
  EXPECT_NEAR(y.at(1), 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
  EXPECT_NEAR(y.at(1), 0.7310585786300049, 1e-15);
  EXPECT_NEAR(y.at(2), 40.0, 1e-12);
  EXPECT_NEAR(y.at(3), 0.0, 1e-12);
}

TEST(SwishTest, RandomInstancesMatchOracle) {
  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const double x = rng.Uniform(-30, 30);
    const double ref = x / (1.0 + std::exp(-x));
    EXPECT_LE(oracle::RelativeError(Swish(Tensor::Scalar(x)).item(), ref, 1e-300),
              1e-10);
  }
}

TEST(BackwardTest, LinearLossHasOuterProductGradient) {
  Rng rng(3);
  Tensor w = RandomTensor({4, 5}, rng, true);
  const Tensor x = RandomTensor({5}, rng);
  auto loss = [&] { return Sum(MatVec(w, x)); };
  Backward(loss());
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      const std::size_t idx = i * 5 + j;
      EXPECT_DOUBLE_EQ(w.grad()[idx], x.at(j));
      const double fd = oracle::CentralDifference([&] { return loss().item(); },
                                                  w, idx, 1e-5);
      EXPECT_LE(oracle::RelativeError(w.grad()[idx], fd), 1e-6);
    }
  }
}

TEST(BackwardTest, ConstantLossLeavesZeroGradients) {
  Tensor w = Tensor::Full({3}, 2.0, true);
  w.ZeroGrad();
  Backward(Sum(Tensor::Full({3}, 1.0)));
  for (double g : w.grad()) EXPECT_EQ(g, 0.0);
}

TEST(BackwardTest, RepeatedCallsDoNotAccumulate) {
  Tensor w = Tensor::Full({3}, 2.0, true);
  const Tensor loss = Sum(Mul(w, w));
  Backward(loss);
  Backward(loss);
  for (double g : w.grad()) EXPECT_DOUBLE_EQ(g, 4.0);
}

TEST(BackwardTest, NonScalarLossIsAContractError) {
  Tensor w = Tensor::Full({3}, 2.0, true);
  EXPECT_THROW(Backward(Scale(w, 2.0)), ContractError);
}

// Every differentiable op against central differences (float64, h = 1e-5).
TEST(BackwardTest, OpGradientsMatchFiniteDifferences) {
  Rng rng(99);
  Tensor x = RandomTensor({2, 6, 7}, rng, true);
  Tensor k = RandomTensor({4, 1, 2, 3}, rng, true);
  Tensor bias = RandomTensor({4}, rng, true);
  Tensor gamma = RandomTensor({4}, rng, true);
  Tensor beta = RandomTensor({4}, rng, true);
  Tensor fc = RandomTensor({3, 4}, rng, true);
  const Tensor r = RandomTensor({4, 7}, rng);
  ConvSpec spec{2, 3, 2, 1, 2, PadMode::kSameBoth, 2};
  auto forward = [&] {
    Tensor y = Swish(AddChannelBias(Conv2d(x, k, spec), bias));  // [4, 6, 4]
    Tensor m = Reshape(y, {4, y.size() / 4});
    m = ChunkedInstanceNorm(m, 2, gamma, beta);
    Tensor pooled = MeanLastAxis(m);  // [4]
    Tensor att = Softmax(MatVec(Transpose(m), pooled));
    Tensor ctx = MatVec(m, att);
    Tensor logits = MatVec(fc, Sigmoid(ctx));
    Tensor extra = Sum(Mul(SliceCols(MatMul(m, Transpose(m)), 0, 4),
                           Reshape(ConcatCols({SliceCols(r, 0, 2), SliceCols(r, 2, 4)}),
                                   {4, 4})));
    return AddN({CrossEntropy(logits, 1), Scale(extra, 0.01)});
  };
  const double h = 1e-5;
  for (Tensor* p : {&x, &k, &bias, &gamma, &beta, &fc}) {
    Backward(forward());
    const std::vector<double> analytic(p->grad().begin(), p->grad().end());
    for (std::size_t i = 0; i < p->size(); ++i) {
      const double fd = oracle::CentralDifference([&] { return forward().item(); },
                                                  *p, i, h);
      EXPECT_LE(oracle::RelativeError(analytic[i], fd, 1e-6), 1e-4)
          << "coordinate " << i << " of tensor " << ShapeToString(p->shape());
    }
  }
}

TEST(InstanceNormTest, FlooredVarianceGradient) {
  // A near-constant row sits below the variance floor.
  Tensor x = Tensor::FromData({1, 4}, {1.0, 1.0 + 1e-4, 1.0 - 2e-4, 1.0}, true);
  const Tensor r = Tensor::FromData({1, 4}, {0.3, -1.2, 0.5, 2.0});
  auto forward = [&] { return Sum(Mul(ChunkedInstanceNorm(x, 1, {}, {}), r)); };
  Backward(forward());
  for (std::size_t i = 0; i < 4; ++i) {
    const double fd = oracle::CentralDifference([&] { return forward().item(); },
                                                x, i, 1e-7);
    EXPECT_LE(oracle::RelativeError(x.grad()[i], fd, 1e-6), 1e-4);
  }
}

TEST(CrossEntropyTest, KnownValues) {
  EXPECT_NEAR(CrossEntropy(Tensor::FromData({2}, {10, -10}), 0).item(), 0.0, 1e-8);
  EXPECT_NEAR(CrossEntropy(Tensor::Zeros({4}), 2).item(), std::log(4.0), 1e-15);
  EXPECT_THROW(CrossEntropy(Tensor::Zeros({4}), 4), ContractError);
}

TEST(CrossEntropyTest, ShiftInvariantAndGradientChecked) {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor z = RandomTensor({5}, rng, true);
    const std::size_t label = rng.Below(5);
    std::vector<double> shifted(z.data().begin(), z.data().end());
    for (double& v : shifted) v += 7.5;
    EXPECT_NEAR(CrossEntropy(z, label).item(),
                CrossEntropy(Tensor::FromData({5}, shifted), label).item(), 1e-10);
    Backward(CrossEntropy(z, label));
    for (std::size_t i = 0; i < 5; ++i) {
      const double fd = oracle::CentralDifference(
          [&] { return CrossEntropy(z, label).item(); }, z, i, 1e-5);
      EXPECT_LE(oracle::RelativeError(z.grad()[i], fd), 1e-6);
    }
  }
}

TEST(ChunkBoundsTest, LastChunkAbsorbsRemainder) {
  const auto b = ChunkBounds(23, 2);
  ASSERT_EQ(b.size(), 2u);
  EXPECT_EQ(b[0], (std::pair<std::size_t, std::size_t>{0, 11}));
  EXPECT_EQ(b[1], (std::pair<std::size_t, std::size_t>{11, 23}));
  EXPECT_THROW(ChunkBounds(1, 2), GeometryError);
  EXPECT_THROW(ChunkBounds(5, 0), GeometryError);
}

TEST(AdamTest, ZeroGradientLeavesParamsUnchanged) {
  std::vector<Tensor> params{Tensor::Full({3}, 0.5, true)};
  params[0].ZeroGrad();
  AdamState state;
  AdamStep(params, state);
  for (double v : params[0].data()) EXPECT_EQ(v, 0.5);
}

TEST(AdamTest, FirstStepMovesByLearningRate) {
  std::vector<Tensor> params{Tensor::Full({1}, 1.0, true)};
  params[0].mutable_grad()[0] = 1.0;
  AdamState state;
  state.lr = 0.001;
  AdamStep(params, state);
  // m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps).
  EXPECT_NEAR(params[0].at(0), 1.0 - 0.001 / (1.0 + 1e-8), 1e-15);
  EXPECT_EQ(state.step, 1);
}

TEST(AdamTest, IdenticalParamsFollowIdenticalTrajectories) {
  std::vector<Tensor> params{Tensor::Full({2}, 0.3, true), Tensor::Full({2}, 0.3, true)};
  AdamState state;
  for (int step = 0; step < 50; ++step) {
    for (Tensor& p : params) {
      const double g = std::sin(step * 0.37);
      p.mutable_grad()[0] = g;
      p.mutable_grad()[1] = -g;
    }
    AdamStep(params, state);
  }
  for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(params[0].at(i), params[1].at(i));
}

}  // namespace
}  // namespace dynfilt
