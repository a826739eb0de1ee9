// Copyright 2026 The dynfilt Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "dynfilt/dynfilter.h"
#include "dynfilt/errors.h"
#include "dynfilt/ops.h"
#include "dynfilt/param_registry.h"
#include "dynfilt/random.h"
#include "oracles.h"

namespace dynfilt {
namespace {

Tensor RandomFeature(std::size_t f, std::size_t t, Rng& rng, double lo = -1,
                     double hi = 1) {
  std::vector<double> v(f * t);
  rng.FillUniform(v, lo, hi);
  return Tensor::FromData({f, t}, std::move(v));
}

std::vector<double> Values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

// Per-row normalization inside [lo, hi) with the variance floor, then affine.
void ReferenceNorm(std::vector<double>& x, std::size_t rows, std::size_t cols,
                   const std::vector<std::pair<std::size_t, std::size_t>>& bounds,
                   const std::vector<double>& gamma, const std::vector<double>& beta) {
  for (std::size_t r = 0; r < rows; ++r) {
    for (auto [lo, hi] : bounds) {
      double mean = 0;
      for (std::size_t c = lo; c < hi; ++c) mean += x[r * cols + c];
      mean /= static_cast<double>(hi - lo);
      double var = 0;
      for (std::size_t c = lo; c < hi; ++c) {
        var += (x[r * cols + c] - mean) * (x[r * cols + c] - mean);
      }
      var /= static_cast<double>(hi - lo);
      const double sd = std::sqrt(std::max(var, 1e-5));
      for (std::size_t c = lo; c < hi; ++c) {
        x[r * cols + c] = gamma[r] * (x[r * cols + c] - mean) / sd + beta[r];
      }
    }
  }
}

TEST(ChunkTest, ShapesAndRoundTrip) {
  Rng rng(1);
  const Tensor x = RandomFeature(40, 98, rng);
  const ChunkedFeature c = Chunk(x, 2);
  ASSERT_EQ(c.chunks.size(), 2u);
  for (const Tensor& part : c.chunks) EXPECT_EQ(part.shape(), (Shape{40, 49}));
  EXPECT_EQ(c.freq_bins(), 40u);
  EXPECT_EQ(c.frames(), 98u);
  EXPECT_EQ(Values(Unchunk(c)), Values(x));

  const ChunkedFeature one = Chunk(x, 1);
  ASSERT_EQ(one.chunks.size(), 1u);
  EXPECT_EQ(Values(one.chunks[0]), Values(x));

  const ChunkedFeature odd = Chunk(RandomFeature(40, 99, rng), 4);
  EXPECT_EQ(odd.chunks.back().dim(1), 27u);
  EXPECT_THROW(Chunk(RandomFeature(40, 3, rng), 4), GeometryError);
}

TEST(ChunkTest, RoundTripIsBitExact) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t t = 5 + rng.Below(120);
    const std::size_t c = 1 + rng.Below(5);
    const Tensor x = RandomFeature(40, t, rng);
    EXPECT_EQ(Values(Unchunk(Chunk(x, c))), Values(x));
  }
}

TEST(PlanTest, DefaultGeometryOnFeatureSizedInput) {
  const FrontEndPlan plan = PlanFrontEnd(FrontEndConfig{}, 98);
  EXPECT_EQ(plan.intra_frames, (std::vector<std::size_t>{24, 24}));
  EXPECT_EQ(plan.concat_frames, 48u);
  EXPECT_EQ(plan.inter_frames, 23u);
  EXPECT_EQ(plan.dap_input_frames, 23u);
  EXPECT_TRUE(plan.dap_padded);
  EXPECT_EQ(plan.dap_conv_frames, 3u);
  EXPECT_EQ(plan.pixels, 3920u);
  EXPECT_EQ(plan.taps, 9u);
}

TEST(PlanTest, FourChunksAndRawInputPooling) {
  FrontEndConfig cfg;
  cfg.chunks = 4;
  const FrontEndPlan plan = PlanFrontEnd(cfg, 98);
  EXPECT_EQ(plan.intra_frames, (std::vector<std::size_t>{11, 11, 11, 12}));
  EXPECT_EQ(plan.inter_frames, 22u);
  cfg.chunks = 2;
  cfg.dap_on_input = true;
  const FrontEndPlan raw = PlanFrontEnd(cfg, 98);
  EXPECT_FALSE(raw.dap_padded);
  EXPECT_EQ(raw.dap_conv_frames, 8u);
}

TEST(PlanTest, TooShortInputIsAGeometryError) {
  EXPECT_THROW(PlanFrontEnd(FrontEndConfig{}, 5), GeometryError);
  Rng rng(3);
  const FrontEndConfig cfg;
  const FrontEndParams p = InitFrontEndParams(cfg, rng);
  EXPECT_THROW(CsConv(Chunk(RandomFeature(40, 5, rng), 2), p, cfg), GeometryError);
}

TEST(CsConvTest, OutputShapeKeepsFrequencyExtent) {
  Rng rng(4);
  const FrontEndConfig cfg;
  const FrontEndParams p = InitFrontEndParams(cfg, rng);
  const Tensor y = CsConv(Chunk(RandomFeature(40, 98, rng), 2), p, cfg);
  EXPECT_EQ(y.shape(), (Shape{40, 23}));
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t t = 14 + rng.Below(200);
    FrontEndConfig c = cfg;
    c.chunks = 1 + rng.Below(3);
    const Tensor out = CsConv(Chunk(RandomFeature(40, t, rng), c.chunks), p, c);
    EXPECT_EQ(out.dim(0), 40u) << "T=" << t << " C=" << c.chunks;
    EXPECT_EQ(out.dim(1), PlanFrontEnd(c, t).inter_frames);
  }
}

TEST(CsConvTest, ZeroInputGivesZeroOutput) {
  Rng rng(5);
  const FrontEndConfig cfg;
  const FrontEndParams p = InitFrontEndParams(cfg, rng);
  const Tensor y = CsConv(Chunk(Tensor::Zeros({40, 98}), 2), p, cfg);
  for (double v : y.data()) EXPECT_EQ(v, 0.0);
}

// Rebuilds the two-stage block from the naive conv oracle and a hand-written
// normalization.
TEST(CsConvTest, MatchesComposedOracle) {
  Rng rng(6);
  const FrontEndConfig cfg;
  FrontEndParams p = InitFrontEndParams(cfg, rng);
  for (Tensor* t : {&p.intra_gamma, &p.intra_beta, &p.inter_gamma, &p.inter_beta}) {
    rng.FillUniform(t->mutable_data(), 0.5, 1.5);
  }
  for (std::size_t frames : {98u, 61u}) {
    const Tensor x = RandomFeature(40, frames, rng);
    const auto bounds = ChunkBounds(frames, 2);
    std::vector<std::vector<double>> intra;
    std::size_t concat = 0;
    for (auto [lo, hi] : bounds) {
      std::vector<double> chunk;
      for (std::size_t f = 0; f < 40; ++f) {
        for (std::size_t t = lo; t < hi; ++t) chunk.push_back(x.at(f * frames + t));
      }
      std::size_t oh, ow;
      auto y = oracle::NaiveConv2d(chunk, 1, 40, hi - lo, Values(p.intra_weight), 1, 2,
                                   2, 2, 1, 2, 1, 1, 0, 0, 1, &oh, &ow);
      ASSERT_EQ(oh, 40u);
      ReferenceNorm(y, 40, ow, {{0, ow}}, Values(p.intra_gamma), Values(p.intra_beta));
      intra.push_back(std::move(y));
      concat += ow;
    }
    std::vector<double> joined(40 * concat);
    std::size_t offset = 0;
    for (const auto& part : intra) {
      const std::size_t w = part.size() / 40;
      for (std::size_t f = 0; f < 40; ++f) {
        for (std::size_t t = 0; t < w; ++t) joined[f * concat + offset + t] = part[f * w + t];
      }
      offset += w;
    }
    std::size_t oh, ow;
    auto ref = oracle::NaiveConv2d(joined, 1, 40, concat, Values(p.inter_weight), 1, 2, 2,
                                   2, 1, 2, 1, 1, 0, 0, 1, &oh, &ow);
    ReferenceNorm(ref, 40, ow, ChunkBounds(ow, 2), Values(p.inter_gamma),
                  Values(p.inter_beta));
    const Tensor y = CsConv(Chunk(x, 2), p, cfg);
    ASSERT_EQ(y.shape(), (Shape{40, ow}));
    for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(y.at(i), ref[i], 1e-12);
  }
}

TEST(DapTest, ZeroQueryReducesToTemporalMean) {
  Rng rng(7);
  const FrontEndConfig cfg;
  for (std::size_t t : {3u, 23u, 98u}) {
    const Tensor x = RandomFeature(40, t, rng);
    const DapOutput out = Dap(x, Tensor::Zeros({40, 1, 1, 25}), cfg);
    for (double a : out.attention.data()) EXPECT_DOUBLE_EQ(a, 1.0 / t);
    for (std::size_t f = 0; f < 40; ++f) {
      double mean = 0;
      for (std::size_t i = 0; i < t; ++i) mean += x.at(f * t + i);
      EXPECT_NEAR(out.pooled.at(f), mean / t, 1e-12);
    }
  }
}

TEST(DapTest, ConstantColumnsPoolToThatColumn) {
  Rng rng(8);
  const FrontEndConfig cfg;
  std::vector<double> column(40);
  rng.FillUniform(column, -2, 2);
  std::vector<double> v;
  for (std::size_t f = 0; f < 40; ++f) v.insert(v.end(), 30, column[f]);
  const Tensor x = Tensor::FromData({40, 30}, v);
  std::vector<double> w(40 * 25);
  rng.FillUniform(w, -1, 1);
  const DapOutput out = Dap(x, Tensor::FromData({40, 1, 1, 25}, w), cfg);
  for (std::size_t f = 0; f < 40; ++f) EXPECT_NEAR(out.pooled.at(f), column[f], 1e-12);
}

TEST(DapTest, DominantFrameSaturatesAttention) {
  Rng rng(9);
  const FrontEndConfig cfg;
  const std::size_t t = 40, hot = 17;
  std::vector<double> v(40 * t);
  rng.FillUniform(v, 0.0, 0.1);
  for (std::size_t f = 0; f < 40; ++f) v[f * t + hot] = 100.0;
  const Tensor x = Tensor::FromData({40, t}, v);
  const Tensor w = Tensor::Full({40, 1, 1, 25}, 0.04);
  const DapOutput out = Dap(x, w, cfg);
  // Scores from the generated query, recomputed by hand.
  std::vector<double> scores(t, 0.0);
  for (std::size_t i = 0; i < t; ++i) {
    for (std::size_t f = 0; f < 40; ++f) scores[i] += v[f * t + i] * out.query.at(f);
  }
  for (std::size_t i = 0; i < t; ++i) {
    if (i != hot) ASSERT_GE(scores[hot] - scores[i], 50.0);
  }
  for (std::size_t f = 0; f < 40; ++f) EXPECT_NEAR(out.pooled.at(f), 100.0, 1e-12);
}

TEST(DapTest, AttentionIsADistribution) {
  Rng rng(10);
  for (bool depthwise : {true, false}) {
    FrontEndConfig cfg;
    cfg.dap_depthwise = depthwise;
    const FrontEndParams p = InitFrontEndParams(cfg, rng);
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t t = 1 + rng.Below(120);
      const DapOutput out = Dap(RandomFeature(40, t, rng, -5, 5), p.dap_weight, cfg);
      ASSERT_EQ(out.attention.size(), t);
      ASSERT_EQ(out.query.size(), 40u);
      double total = 0;
      for (double a : out.attention.data()) {
        EXPECT_GE(a, 0.0);
        total += a;
      }
      EXPECT_NEAR(total, 1.0, 1e-10);
    }
  }
}

TEST(DapTest, FrequencyMismatchIsADimensionError) {
  Rng rng(11);
  const FrontEndConfig cfg;
  EXPECT_THROW(Dap(RandomFeature(39, 30, rng), Tensor::Zeros({40, 1, 1, 25}), cfg),
               DimensionError);
}

TEST(IdfTest, ZeroInputGivesZeroKernel) {
  Rng rng(12);
  const FrontEndConfig cfg;
  const FrontEndParams p = InitFrontEndParams(cfg, rng);
  const Tensor k = IdfWeights(Tensor::Zeros({40, 98}), p, cfg);
  ASSERT_EQ(k.size(), 9u);
  for (double v : k.data()) EXPECT_EQ(v, 0.0);
}

TEST(IdfTest, LengthIsNineForAnyValidInput) {
  Rng rng(13);
  FrontEndConfig cfg;
  const FrontEndParams p = InitFrontEndParams(cfg, rng);
  for (std::size_t t : {14u, 50u, 98u, 198u, 301u}) {
    EXPECT_EQ(IdfWeights(RandomFeature(40, t, rng), p, cfg).size(), 9u);
  }
  cfg.fc_bias = true;
  const FrontEndParams pb = InitFrontEndParams(cfg, rng);
  EXPECT_EQ(IdfWeights(RandomFeature(40, 98, rng), pb, cfg).size(), 9u);
}

TEST(IdfTest, SensitiveToASingleFrame) {
  Rng rng(14);
  const FrontEndConfig cfg;
  const FrontEndParams p = InitFrontEndParams(cfg, rng);
  Tensor x = RandomFeature(40, 98, rng);
  std::vector<double> v = Values(x);
  const double h = 1e-5;
  std::vector<double> plus = v, minus = v;
  for (std::size_t f = 0; f < 40; ++f) {
    plus[f * 98 + 30] += h;
    minus[f * 98 + 30] -= h;
  }
  const Tensor kp = IdfWeights(Tensor::FromData({40, 98}, plus), p, cfg);
  const Tensor km = IdfWeights(Tensor::FromData({40, 98}, minus), p, cfg);
  double norm = 0;
  for (std::size_t i = 0; i < 9; ++i) {
    const double d = (kp.at(i) - km.at(i)) / (2 * h);
    norm += d * d;
  }
  EXPECT_GT(std::sqrt(norm), 0.0);
}

TEST(PdfTest, RangeZeroKernelAndLength) {
  Rng rng(15);
  const FrontEndConfig cfg;
  const FrontEndParams p = InitFrontEndParams(cfg, rng);
  const Tensor x = RandomFeature(40, 98, rng, -3, 3);
  const Tensor w = PdfWeights(x, p, cfg);
  ASSERT_EQ(w.size(), 3920u);
  for (double v : w.data()) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
  const FrontEndParams z = ZeroFrontEndParams(cfg);
  const Tensor half = PdfWeights(x, z, cfg);
  for (double v : half.data()) EXPECT_EQ(v, 0.5);
}

TEST(PdfTest, MatchesConvOracleThroughSigmoid) {
  Rng rng(16);
  const FrontEndConfig cfg;
  const FrontEndParams p = InitFrontEndParams(cfg, rng);
  const Tensor x = RandomFeature(40, 30, rng);
  std::size_t oh, ow;
  const auto raw = oracle::NaiveConv2d(Values(x), 1, 40, 30, Values(p.pdf_weight), 1, 3,
                                       3, 2, 1, 1, 2, 2, 2, 2, 1, &oh, &ow);
  const Tensor w = PdfWeights(x, p, cfg);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    EXPECT_NEAR(w.at(i), 1.0 / (1.0 + std::exp(-raw[i])), 1e-12);
  }
}

TEST(DynamicConvTest, IdentityKernelReproducesInput) {
  Rng rng(17);
  const FrontEndConfig cfg;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t t = 1 + rng.Below(100);
    const Tensor x = RandomFeature(40, t, rng, -10, 10);
    std::vector<double> onehot(9, 0.0);
    onehot[4] = 1.0;
    const Tensor y = DynamicConv(x, Tensor::Full({40 * t}, 1.0),
                                 Tensor::FromData({9}, onehot), cfg);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_LE(std::abs(y.at(i) - x.at(i)), 1e-12);
  }
}

TEST(DynamicConvTest, LinearInInputAtFixedWeights) {
  Rng rng(18);
  const FrontEndConfig cfg;
  const Tensor x = RandomFeature(40, 98, rng);
  const Tensor pix = RandomFeature(1, 3920, rng, 0, 1);
  const Tensor k = RandomFeature(1, 9, rng);
  const Tensor pw = Reshape(pix, {3920}), kw = Reshape(k, {9});
  const Tensor y = DynamicConv(x, pw, kw, cfg);
  const Tensor y3 = DynamicConv(Scale(x, -2.5), pw, kw, cfg);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y3.at(i), -2.5 * y.at(i), 1e-12);
}

TEST(DynamicConvTest, RandomInstancesMatchOracle) {
  Rng rng(19);
  for (int trial = 0; trial < 120; ++trial) {
    FrontEndConfig cfg;
    cfg.dyn_kernel = trial % 4 == 0 ? 1 + 2 * rng.Below(3) : 3;
    cfg.dyn_dilation = 1 + rng.Below(3);
    const std::size_t rows = 1 + rng.Below(12), cols = 1 + rng.Below(15);
    const std::size_t taps = cfg.dyn_kernel * cfg.dyn_kernel;
    std::vector<double> x(rows * cols), pix(rows * cols), ker(taps);
    rng.FillUniform(x, -1, 1);
    rng.FillUniform(pix, 0, 1);
    rng.FillUniform(ker, -1, 1);
    const auto ref =
        oracle::NaiveDynamicConv(x, rows, cols, pix, ker, cfg.dyn_kernel, cfg.dyn_dilation);
    const Tensor y = DynamicConv(Tensor::FromData({rows, cols}, x),
                                 Tensor::FromData({rows * cols}, pix),
                                 Tensor::FromData({taps}, ker), cfg);
    for (std::size_t i = 0; i < ref.size(); ++i) {
      EXPECT_LE(oracle::RelativeError(y.at(i), ref[i], 1e-12), 1e-10);
    }
  }
}

TEST(DynamicConvTest, LengthMismatchIsADimensionError) {
  const FrontEndConfig cfg;
  EXPECT_THROW(DynamicConv(Tensor::Zeros({40, 10}), Tensor::Zeros({399}), Tensor::Zeros({9}),
                           cfg),
               DimensionError);
  EXPECT_THROW(DynamicConv(Tensor::Zeros({40, 10}), Tensor::Zeros({400}), Tensor::Zeros({8}),
                           cfg),
               DimensionError);
}

TEST(DynamicConvTest, GradientsInAllThreeInputs) {
  Rng rng(20);
  const FrontEndConfig cfg;
  Tensor x = Tensor::FromData({6, 7}, Values(RandomFeature(6, 7, rng)), true);
  Tensor pix = Tensor::FromData({42}, Values(RandomFeature(1, 42, rng, 0, 1)), true);
  Tensor ker = Tensor::FromData({9}, Values(RandomFeature(1, 9, rng)), true);
  const Tensor r = RandomFeature(6, 7, rng);
  auto loss = [&] { return Sum(Mul(DynamicConv(x, pix, ker, cfg), r)); };
  Backward(loss());
  for (Tensor* t : {&x, &pix, &ker}) {
    for (std::size_t i = 0; i < t->size(); ++i) {
      const double fd =
          oracle::CentralDifference([&] { return loss().item(); }, *t, i, 1e-5);
      EXPECT_LE(oracle::RelativeError(t->grad()[i], fd), 1e-6);
    }
  }
}

TEST(DynamicKernelTest, CombinedMatrixIsExactlyRankOne) {
  Rng rng(21);
  const FrontEndConfig cfg;
  const FrontEndParams p = InitFrontEndParams(cfg, rng);
  for (int trial = 0; trial < 10; ++trial) {
    const FrontEndOutput out = RunFrontEnd(RandomFeature(40, 40 + rng.Below(80), rng), p, cfg);
    const DynamicKernel& dk = out.kernel;
    const auto w = dk.CombinedMatrix();
    const std::size_t n = dk.pixel_weights.size(), k = dk.kernel_weights.size();
    ASSERT_EQ(w.size(), n * k);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        ASSERT_EQ(w[i * k + j], dk.pixel_weights.at(i) * dk.kernel_weights.at(j));
      }
    }
    // Every 2x2 minor vanishes.
    for (std::size_t i = 1; i < n; i += 97) {
      for (std::size_t j = 1; j < k; ++j) {
        const double minor = w[0] * w[i * k + j] - w[j] * w[i * k];
        EXPECT_LE(std::abs(minor), 1e-15);
      }
    }
  }
}

TEST(FrontEndTest, ShapePreservedAndDeterministic) {
  const FrontEndConfig cfg;
  Rng a(22), b(22);
  const FrontEndParams pa = InitFrontEndParams(cfg, a);
  const FrontEndParams pb = InitFrontEndParams(cfg, b);
  Rng data(23);
  const Tensor x = RandomFeature(40, 98, data);
  const Tensor ya = FrontEnd(x, pa, cfg);
  const Tensor yb = FrontEnd(x, pb, cfg);
  EXPECT_EQ(ya.shape(), (Shape{40, 98}));
  EXPECT_EQ(Values(ya), Values(yb));
}

TEST(FrontEndTest, DifferentUtterancesGiveDifferentKernels) {
  Rng rng(24);
  const FrontEndConfig cfg;
  const FrontEndParams p = InitFrontEndParams(cfg, rng);
  for (int trial = 0; trial < 10; ++trial) {
    const DynamicKernel a = RunFrontEnd(RandomFeature(40, 98, rng), p, cfg).kernel;
    const DynamicKernel b = RunFrontEnd(RandomFeature(40, 98, rng), p, cfg).kernel;
    EXPECT_NE(Values(a.kernel_weights), Values(b.kernel_weights));
    EXPECT_NE(Values(a.pixel_weights), Values(b.pixel_weights));
  }
}

TEST(FrontEndTest, WrongFrequencyExtentRejected) {
  Rng rng(25);
  const FrontEndConfig cfg;
  const FrontEndParams p = InitFrontEndParams(cfg, rng);
  EXPECT_THROW(FrontEnd(RandomFeature(39, 98, rng), p, cfg), DimensionError);
}

// Every parameter tensor against central differences; small tensors in full,
// large ones on a seeded sample of coordinates.
TEST(FrontEndTest, ParameterGradientsMatchFiniteDifferences) {
  for (bool bias : {false, true}) {
    FrontEndConfig cfg;
    cfg.fc_bias = bias;
    Rng rng(26);
    FrontEndParams p = InitFrontEndParams(cfg, rng);
    for (Tensor* t : {&p.intra_gamma, &p.intra_beta, &p.inter_gamma, &p.inter_beta}) {
      rng.FillUniform(t->mutable_data(), 0.5, 1.5);
    }
    if (bias) rng.FillUniform(p.fc_bias.mutable_data(), -0.5, 0.5);
    const Tensor x = RandomFeature(40, 98, rng);
    const Tensor r = RandomFeature(40, 98, rng);
    auto loss = [&] { return Sum(Mul(FrontEnd(x, p, cfg), r)); };
    Backward(loss());
    for (NamedTensor& nt : p.Named()) {
      Tensor& t = nt.tensor;
      const std::vector<double> analytic(t.grad().begin(), t.grad().end());
      std::vector<std::size_t> coords;
      if (t.size() <= 40) {
        for (std::size_t i = 0; i < t.size(); ++i) coords.push_back(i);
      } else {
        for (int s = 0; s < 40; ++s) coords.push_back(rng.Below(t.size()));
      }
      double worst = 0;
      for (std::size_t i : coords) {
        const double fd = oracle::CentralDifference([&] { return loss().item(); }, t, i, 1e-5);
        worst = std::max(worst, oracle::RelativeError(analytic[i], fd,
                                                          oracle::kNetworkGradFloor));
      }
      EXPECT_LE(worst, 1e-4) << nt.name;
    }
  }
}

TEST(ParamsTest, NamesUniqueAndCountInBudget) {
  Rng rng(27);
  const FrontEndConfig cfg;
  const FrontEndParams p = InitFrontEndParams(cfg, rng);
  ParamRegistry reg;
  reg.Append(p.Named());
  std::set<std::string> names;
  for (const auto& e : reg.entries()) names.insert(e.name);
  EXPECT_EQ(names.size(), reg.size());
  EXPECT_EQ(reg.ParameterCount(), 1537u);
  EXPECT_TRUE(reg.Contains("frontend.dap.weight"));
  EXPECT_EQ(reg.Get("frontend.idf_fc.weight").shape(), (Shape{9, 40}));
  EXPECT_THROW(reg.Add("frontend.pdf.weight", Tensor::Zeros({1})), ContractError);

  FrontEndConfig shared = cfg;
  shared.dap_depthwise = false;
  ParamRegistry small;
  small.Append(InitFrontEndParams(shared, rng).Named());
  EXPECT_EQ(small.ParameterCount(), 1537u - 975u);
}

TEST(ParamsTest, InitIsUniformWithinFanInBound) {
  Rng rng(28);
  const FrontEndParams p = InitFrontEndParams(FrontEndConfig{}, rng);
  for (double v : p.fc_weight.data()) EXPECT_LE(std::abs(v), std::sqrt(1.0 / 40));
  for (double v : p.dap_weight.data()) EXPECT_LE(std::abs(v), std::sqrt(1.0 / 25));
  for (double v : p.intra_gamma.data()) EXPECT_EQ(v, 1.0);
  for (double v : p.inter_beta.data()) EXPECT_EQ(v, 0.0);
}

TEST(CheckpointTest, SaveRestoreRoundTrip) {
  Rng rng(29);
  const FrontEndConfig cfg;
  ParamRegistry saved;
  saved.Append(InitFrontEndParams(cfg, rng).Named());
  const auto path = std::filesystem::temp_directory_path() / "dynfilt_ckpt_test.bin";
  SaveCheckpoint(path, saved);

  ParamRegistry loaded;
  loaded.Append(ZeroFrontEndParams(cfg).Named());
  RestoreCheckpoint(path, loaded);
  for (std::size_t i = 0; i < saved.size(); ++i) {
    const Tensor& a = saved.entries()[i].tensor;
    const Tensor& b = loaded.entries()[i].tensor;
    for (std::size_t j = 0; j < a.size(); ++j) {
      EXPECT_EQ(b.at(j), static_cast<double>(static_cast<float>(a.at(j))));
    }
  }

  FrontEndConfig biased = cfg;
  biased.fc_bias = true;
  ParamRegistry mismatch;
  mismatch.Append(ZeroFrontEndParams(biased).Named());
  EXPECT_THROW(RestoreCheckpoint(path, mismatch), IngestionError);

  std::string bytes = EncodeCheckpoint(saved.entries());
  EXPECT_THROW(DecodeCheckpoint(bytes.substr(0, bytes.size() - 3)), IngestionError);
}

}  // namespace
}  // namespace dynfilt
