// Copyright 2026 The dynfilt Authors
// SPDX-License-Identifier: Apache-2.0

#include "dynfilt/ops.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "dynfilt/errors.h"

namespace dynfilt {

namespace {

void RequireRank(const Tensor& t, std::size_t rank, const char* op) {
  if (!t.defined() || t.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " +
                         std::to_string(rank) + ", got shape " +
                         ShapeToString(t.shape()));
  }
}

void RequireSameShape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         ShapeToString(a.shape()) + " vs " +
                         ShapeToString(b.shape()));
  }
}

double StableSigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct ConvGeometry {
  std::size_t cin, h, w, cout, cin_per_group, cout_per_group;
  std::size_t out_h, out_w;
  AxisPadding pad_h, pad_w;
};

ConvGeometry ResolveConv(const Tensor& input, const Tensor& kernel,
                         const ConvSpec& spec) {
  RequireRank(input, 3, "conv2d input");
  RequireRank(kernel, 4, "conv2d kernel");
  if (spec.kernel_h == 0 || spec.kernel_w == 0 || spec.dilation == 0 ||
      spec.stride_h == 0 || spec.stride_w == 0 || spec.groups == 0) {
    throw GeometryError("conv2d: kernel, dilation, stride and groups must be "
                        "positive");
  }
  ConvGeometry g{};
  g.cin = input.dim(0);
  g.h = input.dim(1);
  g.w = input.dim(2);
  g.cout = kernel.dim(0);
  if (kernel.dim(2) != spec.kernel_h || kernel.dim(3) != spec.kernel_w) {
    throw DimensionError("conv2d: kernel shape " +
                         ShapeToString(kernel.shape()) +
                         " disagrees with spec " +
                         std::to_string(spec.kernel_h) + "x" +
                         std::to_string(spec.kernel_w));
  }
  if (g.cin % spec.groups != 0 || g.cout % spec.groups != 0 ||
      kernel.dim(1) != g.cin / spec.groups) {
    throw DimensionError("conv2d: input " + ShapeToString(input.shape()) +
                         " and kernel " + ShapeToString(kernel.shape()) +
                         " are incompatible with groups=" +
                         std::to_string(spec.groups));
  }
  g.cin_per_group = g.cin / spec.groups;
  g.cout_per_group = g.cout / spec.groups;
  if (spec.pad_mode != PadMode::kValid) {
    g.pad_h = SamePadding(spec.kernel_h, spec.dilation);
  }
  if (spec.pad_mode == PadMode::kSameBoth) {
    g.pad_w = SamePadding(spec.kernel_w, spec.dilation);
  }
  g.out_h = ConvOutputExtent(g.h, spec.kernel_h, spec.dilation, spec.stride_h,
                             g.pad_h);
  g.out_w = ConvOutputExtent(g.w, spec.kernel_w, spec.dilation, spec.stride_w,
                             g.pad_w);
  return g;
}

// Range of output indices o in [0, out) whose input index
// o * stride + offset - pad_before lands inside [0, in).
std::pair<std::size_t, std::size_t> ValidOutputRange(std::size_t out,
                                                     std::size_t in,
                                                     std::size_t stride,
                                                     std::size_t offset,
                                                     std::size_t pad_before) {
  // Smallest o with o*stride + offset >= pad_before.
  std::size_t lo = 0;
  if (offset < pad_before) {
    lo = (pad_before - offset + stride - 1) / stride;
  }
  // Largest o with o*stride + offset - pad_before <= in - 1.
  const std::size_t limit = in - 1 + pad_before;
  if (offset > limit) return {0, 0};
  std::size_t hi = (limit - offset) / stride + 1;
  hi = std::min(hi, out);
  if (lo >= hi) return {0, 0};
  return {lo, hi};
}

// Visits every (output row, kernel tap) pair with the range of output
// columns that read a real (unpadded) input pixel.
template <typename Fn>
void ForEachConvTap(const ConvGeometry& g, const ConvSpec& spec, Fn&& fn) {
  for (std::size_t co = 0; co < g.cout; ++co) {
    const std::size_t group = co / g.cout_per_group;
    for (std::size_t cl = 0; cl < g.cin_per_group; ++cl) {
      const std::size_t ci = group * g.cin_per_group + cl;
      for (std::size_t ki = 0; ki < spec.kernel_h; ++ki) {
        const auto [oh_lo, oh_hi] = ValidOutputRange(
            g.out_h, g.h, spec.stride_h, ki * spec.dilation, g.pad_h.before);
        for (std::size_t kj = 0; kj < spec.kernel_w; ++kj) {
          const auto [ow_lo, ow_hi] = ValidOutputRange(
              g.out_w, g.w, spec.stride_w, kj * spec.dilation, g.pad_w.before);
          if (ow_lo >= ow_hi) continue;
          const std::size_t k_index =
              ((co * g.cin_per_group + cl) * spec.kernel_h + ki) *
                  spec.kernel_w +
              kj;
          for (std::size_t oh = oh_lo; oh < oh_hi; ++oh) {
            const std::size_t ih =
                oh * spec.stride_h + ki * spec.dilation - g.pad_h.before;
            const std::size_t out_row = (co * g.out_h + oh) * g.out_w;
            // Input column for output column ow is ow * stride + col_base.
            const std::size_t in_row = (ci * g.h + ih) * g.w;
            const std::ptrdiff_t col_base =
                static_cast<std::ptrdiff_t>(kj * spec.dilation) -
                static_cast<std::ptrdiff_t>(g.pad_w.before);
            fn(k_index, out_row, in_row, col_base, ow_lo, ow_hi);
          }
        }
      }
    }
  }
}

}  // namespace

std::size_t EffectiveExtent(std::size_t kernel, std::size_t dilation) {
  return (kernel - 1) * dilation + 1;
}

AxisPadding SamePadding(std::size_t kernel, std::size_t dilation) {
  const std::size_t total = EffectiveExtent(kernel, dilation) - 1;
  return {total / 2, total - total / 2};
}

std::size_t ConvOutputExtent(std::size_t input, std::size_t kernel,
                             std::size_t dilation, std::size_t stride,
                             AxisPadding pad) {
  const std::size_t padded = input + pad.before + pad.after;
  const std::size_t effective = EffectiveExtent(kernel, dilation);
  if (input == 0 || effective > padded) {
    throw GeometryError("effective kernel extent " +
                        std::to_string(effective) +
                        " exceeds padded input extent " +
                        std::to_string(padded));
  }
  return (padded - effective) / stride + 1;
}

std::pair<std::size_t, std::size_t> Conv2dOutputSize(std::size_t height,
                                                     std::size_t width,
                                                     const ConvSpec& spec) {
  AxisPadding ph, pw;
  if (spec.pad_mode != PadMode::kValid) {
    ph = SamePadding(spec.kernel_h, spec.dilation);
  }
  if (spec.pad_mode == PadMode::kSameBoth) {
    pw = SamePadding(spec.kernel_w, spec.dilation);
  }
  return {ConvOutputExtent(height, spec.kernel_h, spec.dilation, spec.stride_h,
                           ph),
          ConvOutputExtent(width, spec.kernel_w, spec.dilation, spec.stride_w,
                           pw)};
}

Tensor Conv2d(const Tensor& input, const Tensor& kernel,
              const ConvSpec& spec) {
  const ConvGeometry g = ResolveConv(input, kernel, spec);
  const std::size_t sw = spec.stride_w;
  std::vector<double> out(g.cout * g.out_h * g.out_w, 0.0);
  {
    const double* x = input.data().data();
    const double* k = kernel.data().data();
    double* y = out.data();
    ForEachConvTap(g, spec,
                   [&](std::size_t ki, std::size_t orow, std::size_t irow,
                       std::ptrdiff_t base, std::size_t lo, std::size_t hi) {
                     const double kv = k[ki];
                     const double* xr = x + irow;
                     double* yr = y + orow;
                     for (std::size_t ow = lo; ow < hi; ++ow) {
                       yr[ow] += kv * xr[static_cast<std::ptrdiff_t>(ow * sw) + base];
                     }
                   });
  }
  return Tensor::MakeResult(
      {g.cout, g.out_h, g.out_w}, std::move(out), {input, kernel},
      [input, kernel, spec, g](std::span<const double> gy,
                               std::span<std::span<double>> gin) {
        const double* x = input.data().data();
        const double* k = kernel.data().data();
        double* gx = gin[0].empty() ? nullptr : gin[0].data();
        double* gk = gin[1].empty() ? nullptr : gin[1].data();
        const std::size_t sw = spec.stride_w;
        ForEachConvTap(g, spec,
                       [&](std::size_t ki, std::size_t orow, std::size_t irow,
                           std::ptrdiff_t base, std::size_t lo,
                           std::size_t hi) {
                         const double* gr = gy.data() + orow;
                         if (gx) {
                           const double kv = k[ki];
                           double* gxr = gx + irow;
                           for (std::size_t ow = lo; ow < hi; ++ow) {
                             gxr[static_cast<std::ptrdiff_t>(ow * sw) + base] +=
                                 kv * gr[ow];
                           }
                         }
                         if (gk) {
                           const double* xr = x + irow;
                           double acc = 0.0;
                           for (std::size_t ow = lo; ow < hi; ++ow) {
                             acc += gr[ow] *
                                    xr[static_cast<std::ptrdiff_t>(ow * sw) + base];
                           }
                           gk[ki] += acc;
                         }
                       });
      });
}

Tensor AddChannelBias(const Tensor& x, const Tensor& bias) {
  RequireRank(bias, 1, "add_channel_bias bias");
  if (x.rank() < 1 || x.dim(0) != bias.dim(0)) {
    throw DimensionError("add_channel_bias: " + ShapeToString(x.shape()) +
                         " vs bias " + ShapeToString(bias.shape()));
  }
  const std::size_t channels = bias.dim(0);
  const std::size_t inner = x.size() / channels;
  std::vector<double> out(x.data().begin(), x.data().end());
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < inner; ++i) out[c * inner + i] += bias.at(c);
  }
  return Tensor::MakeResult(
      x.shape(), std::move(out), {x, bias},
      [channels, inner](std::span<const double> gy,
                        std::span<std::span<double>> gin) {
        if (!gin[0].empty()) {
          for (std::size_t i = 0; i < gy.size(); ++i) gin[0][i] += gy[i];
        }
        if (!gin[1].empty()) {
          for (std::size_t c = 0; c < channels; ++c) {
            double acc = 0.0;
            for (std::size_t i = 0; i < inner; ++i) acc += gy[c * inner + i];
            gin[1][c] += acc;
          }
        }
      });
}

Tensor MatVec(const Tensor& w, const Tensor& x) {
  RequireRank(w, 2, "matvec matrix");
  RequireRank(x, 1, "matvec vector");
  const std::size_t m = w.dim(0), n = w.dim(1);
  if (x.dim(0) != n) {
    throw DimensionError("matvec: " + ShapeToString(w.shape()) + " x " +
                         ShapeToString(x.shape()));
  }
  std::vector<double> out(m, 0.0);
  const double* wd = w.data().data();
  const double* xd = x.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += wd[i * n + j] * xd[j];
    out[i] = acc;
  }
  return Tensor::MakeResult(
      {m}, std::move(out), {w, x},
      [w, x, m, n](std::span<const double> gy,
                   std::span<std::span<double>> gin) {
        const double* wd = w.data().data();
        const double* xd = x.data().data();
        if (!gin[0].empty()) {
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) gin[0][i * n + j] += gy[i] * xd[j];
          }
        }
        if (!gin[1].empty()) {
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) gin[1][j] += gy[i] * wd[i * n + j];
          }
        }
      });
}

Tensor MatMul(const Tensor& a, const Tensor& b) {
  RequireRank(a, 2, "matmul lhs");
  RequireRank(b, 2, "matmul rhs");
  const std::size_t m = a.dim(0), n = a.dim(1), p = b.dim(1);
  if (b.dim(0) != n) {
    throw DimensionError("matmul: " + ShapeToString(a.shape()) + " x " +
                         ShapeToString(b.shape()));
  }
  std::vector<double> out(m * p, 0.0);
  const double* ad = a.data().data();
  const double* bd = b.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      const double av = ad[i * n + k];
      for (std::size_t j = 0; j < p; ++j) out[i * p + j] += av * bd[k * p + j];
    }
  }
  return Tensor::MakeResult(
      {m, p}, std::move(out), {a, b},
      [a, b, m, n, p](std::span<const double> gy,
                      std::span<std::span<double>> gin) {
        const double* ad = a.data().data();
        const double* bd = b.data().data();
        if (!gin[0].empty()) {
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t k = 0; k < n; ++k) {
              double acc = 0.0;
              for (std::size_t j = 0; j < p; ++j) acc += gy[i * p + j] * bd[k * p + j];
              gin[0][i * n + k] += acc;
            }
          }
        }
        if (!gin[1].empty()) {
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t k = 0; k < n; ++k) {
              const double av = ad[i * n + k];
              for (std::size_t j = 0; j < p; ++j) gin[1][k * p + j] += av * gy[i * p + j];
            }
          }
        }
      });
}

Tensor Transpose(const Tensor& a) {
  RequireRank(a, 2, "transpose");
  const std::size_t m = a.dim(0), n = a.dim(1);
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = a.at(i * n + j);
  }
  return Tensor::MakeResult(
      {n, m}, std::move(out), {a},
      [m, n](std::span<const double> gy, std::span<std::span<double>> gin) {
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < n; ++j) gin[0][i * n + j] += gy[j * m + i];
        }
      });
}

Tensor Softmax(const Tensor& x) {
  RequireRank(x, 1, "softmax");
  if (x.size() == 0) throw DimensionError("softmax of an empty vector");
  const auto xd = x.data();
  const double mx = *std::max_element(xd.begin(), xd.end());
  std::vector<double> out(xd.size());
  double total = 0.0;
  for (std::size_t i = 0; i < xd.size(); ++i) {
    out[i] = std::exp(xd[i] - mx);
    total += out[i];
  }
  for (double& v : out) v /= total;
  std::vector<double> probs = out;
  return Tensor::MakeResult(
      x.shape(), std::move(out), {x},
      [probs = std::move(probs)](std::span<const double> gy,
                                 std::span<std::span<double>> gin) {
        double dot = 0.0;
        for (std::size_t i = 0; i < probs.size(); ++i) dot += gy[i] * probs[i];
        for (std::size_t i = 0; i < probs.size(); ++i) {
          gin[0][i] += probs[i] * (gy[i] - dot);
        }
      });
}

Tensor Sigmoid(const Tensor& x) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = StableSigmoid(x.at(i));
  std::vector<double> s = out;
  return Tensor::MakeResult(
      x.shape(), std::move(out), {x},
      [s = std::move(s)](std::span<const double> gy,
                         std::span<std::span<double>> gin) {
        for (std::size_t i = 0; i < s.size(); ++i) {
          gin[0][i] += gy[i] * s[i] * (1.0 - s[i]);
        }
      });
}

Tensor Swish(const Tensor& x) {
  std::vector<double> out(x.size());
  std::vector<double> s(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    s[i] = StableSigmoid(x.at(i));
    out[i] = x.at(i) * s[i];
  }
  return Tensor::MakeResult(
      x.shape(), std::move(out), {x},
      [x, s = std::move(s)](std::span<const double> gy,
                            std::span<std::span<double>> gin) {
        for (std::size_t i = 0; i < s.size(); ++i) {
          const double d = s[i] + x.at(i) * s[i] * (1.0 - s[i]);
          gin[0][i] += gy[i] * d;
        }
      });
}

Tensor Add(const Tensor& a, const Tensor& b) {
  RequireSameShape(a, b, "add");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) + b.at(i);
  return Tensor::MakeResult(
      a.shape(), std::move(out), {a, b},
      [](std::span<const double> gy, std::span<std::span<double>> gin) {
        for (auto g : gin) {
          if (g.empty()) continue;
          for (std::size_t i = 0; i < gy.size(); ++i) g[i] += gy[i];
        }
      });
}

Tensor Mul(const Tensor& a, const Tensor& b) {
  RequireSameShape(a, b, "mul");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) * b.at(i);
  return Tensor::MakeResult(
      a.shape(), std::move(out), {a, b},
      [a, b](std::span<const double> gy, std::span<std::span<double>> gin) {
        if (!gin[0].empty()) {
          for (std::size_t i = 0; i < gy.size(); ++i) gin[0][i] += gy[i] * b.at(i);
        }
        if (!gin[1].empty()) {
          for (std::size_t i = 0; i < gy.size(); ++i) gin[1][i] += gy[i] * a.at(i);
        }
      });
}

Tensor Scale(const Tensor& a, double factor) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) * factor;
  return Tensor::MakeResult(
      a.shape(), std::move(out), {a},
      [factor](std::span<const double> gy, std::span<std::span<double>> gin) {
        for (std::size_t i = 0; i < gy.size(); ++i) gin[0][i] += gy[i] * factor;
      });
}

Tensor Sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.data()) total += v;
  return Tensor::MakeResult(
      {1}, {total}, {a},
      [](std::span<const double> gy, std::span<std::span<double>> gin) {
        for (double& g : gin[0]) g += gy[0];
      });
}

Tensor Mean(const Tensor& a) {
  if (a.size() == 0) throw DimensionError("mean of an empty tensor");
  return Scale(Sum(a), 1.0 / static_cast<double>(a.size()));
}

Tensor AddN(const std::vector<Tensor>& terms) {
  if (terms.empty()) throw DimensionError("add_n of an empty list");
  for (const Tensor& t : terms) RequireSameShape(terms.front(), t, "add_n");
  std::vector<double> out(terms.front().size(), 0.0);
  for (const Tensor& t : terms) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += t.at(i);
  }
  return Tensor::MakeResult(
      terms.front().shape(), std::move(out), terms,
      [](std::span<const double> gy, std::span<std::span<double>> gin) {
        for (auto g : gin) {
          if (g.empty()) continue;
          for (std::size_t i = 0; i < gy.size(); ++i) g[i] += gy[i];
        }
      });
}

Tensor Reshape(const Tensor& x, Shape shape) {
  if (NumElements(shape) != x.size()) {
    throw DimensionError("reshape " + ShapeToString(x.shape()) + " -> " +
                         ShapeToString(shape));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  return Tensor::MakeResult(
      std::move(shape), std::move(out), {x},
      [](std::span<const double> gy, std::span<std::span<double>> gin) {
        for (std::size_t i = 0; i < gy.size(); ++i) gin[0][i] += gy[i];
      });
}

Tensor SliceCols(const Tensor& x, std::size_t begin, std::size_t end) {
  RequireRank(x, 2, "slice_cols");
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  if (begin >= end || end > cols) {
    throw DimensionError("slice_cols [" + std::to_string(begin) + ", " +
                         std::to_string(end) + ") of " +
                         ShapeToString(x.shape()));
  }
  const std::size_t width = end - begin;
  std::vector<double> out(rows * width);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      out[r * width + c] = x.at(r * cols + begin + c);
    }
  }
  return Tensor::MakeResult(
      {rows, width}, std::move(out), {x},
      [rows, cols, begin, width](std::span<const double> gy,
                                 std::span<std::span<double>> gin) {
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t c = 0; c < width; ++c) {
            gin[0][r * cols + begin + c] += gy[r * width + c];
          }
        }
      });
}

Tensor ConcatCols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols of an empty list");
  const std::size_t rows = parts.front().dim(0);
  std::vector<std::size_t> offsets;
  std::size_t cols = 0;
  for (const Tensor& p : parts) {
    RequireRank(p, 2, "concat_cols");
    if (p.dim(0) != rows) {
      throw DimensionError("concat_cols: row count mismatch");
    }
    offsets.push_back(cols);
    cols += p.dim(1);
  }
  std::vector<double> out(rows * cols);
  std::vector<std::size_t> widths;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const std::size_t w = parts[k].dim(1);
    widths.push_back(w);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < w; ++c) {
        out[r * cols + offsets[k] + c] = parts[k].at(r * w + c);
      }
    }
  }
  return Tensor::MakeResult(
      {rows, cols}, std::move(out), parts,
      [rows, cols, offsets, widths](std::span<const double> gy,
                                    std::span<std::span<double>> gin) {
        for (std::size_t k = 0; k < gin.size(); ++k) {
          if (gin[k].empty()) continue;
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < widths[k]; ++c) {
              gin[k][r * widths[k] + c] += gy[r * cols + offsets[k] + c];
            }
          }
        }
      });
}

Tensor MeanLastAxis(const Tensor& x) {
  if (x.rank() < 1) throw DimensionError("mean_last_axis of a scalar");
  const std::size_t n = x.shape().back();
  const std::size_t outer = x.size() / n;
  Shape shape(x.shape().begin(), x.shape().end() - 1);
  if (shape.empty()) shape = {1};
  std::vector<double> out(outer, 0.0);
  for (std::size_t o = 0; o < outer; ++o) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x.at(o * n + i);
    out[o] = acc / static_cast<double>(n);
  }
  return Tensor::MakeResult(
      std::move(shape), std::move(out), {x},
      [n, outer](std::span<const double> gy,
                 std::span<std::span<double>> gin) {
        const double inv = 1.0 / static_cast<double>(n);
        for (std::size_t o = 0; o < outer; ++o) {
          for (std::size_t i = 0; i < n; ++i) gin[0][o * n + i] += gy[o] * inv;
        }
      });
}

std::vector<std::pair<std::size_t, std::size_t>> ChunkBounds(
    std::size_t frames, std::size_t chunks) {
  if (chunks == 0 || frames < chunks) {
    throw GeometryError("cannot split " + std::to_string(frames) +
                        " frames into " + std::to_string(chunks) +
                        " non-empty chunks");
  }
  const std::size_t base = frames / chunks;
  std::vector<std::pair<std::size_t, std::size_t>> bounds;
  for (std::size_t c = 0; c < chunks; ++c) {
    const std::size_t begin = c * base;
    const std::size_t end = (c + 1 == chunks) ? frames : begin + base;
    bounds.emplace_back(begin, end);
  }
  return bounds;
}

Tensor ChunkedInstanceNorm(const Tensor& x, std::size_t chunks,
                           const Tensor& gamma, const Tensor& beta,
                           double eps) {
  RequireRank(x, 2, "instance_norm");
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  const bool affine = gamma.defined();
  if (affine != beta.defined()) {
    throw ContractError("instance_norm: gamma and beta must both be given");
  }
  if (affine && (gamma.shape() != Shape{rows} || beta.shape() != Shape{rows})) {
    throw DimensionError("instance_norm: affine terms must have shape (" +
                         std::to_string(rows) + ")");
  }
  const auto bounds = ChunkBounds(cols, chunks);
  std::vector<double> normalized(rows * cols);
  std::vector<double> inv_std(rows * bounds.size());
  std::vector<char> floored(rows * bounds.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < bounds.size(); ++c) {
      const auto [b, e] = bounds[c];
      const double n = static_cast<double>(e - b);
      double mean = 0.0;
      for (std::size_t t = b; t < e; ++t) mean += x.at(r * cols + t);
      mean /= n;
      double var = 0.0;
      for (std::size_t t = b; t < e; ++t) {
        const double d = x.at(r * cols + t) - mean;
        var += d * d;
      }
      var /= n;
      const bool is_floored = var < eps;
      const double inv = 1.0 / std::sqrt(is_floored ? eps : var);
      inv_std[r * bounds.size() + c] = inv;
      floored[r * bounds.size() + c] = is_floored;
      for (std::size_t t = b; t < e; ++t) {
        normalized[r * cols + t] = (x.at(r * cols + t) - mean) * inv;
      }
    }
  }
  std::vector<double> out = normalized;
  if (affine) {
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t t = 0; t < cols; ++t) {
        out[r * cols + t] = gamma.at(r) * out[r * cols + t] + beta.at(r);
      }
    }
  }
  std::vector<Tensor> inputs{x};
  if (affine) {
    inputs.push_back(gamma);
    inputs.push_back(beta);
  }
  return Tensor::MakeResult(
      {rows, cols}, std::move(out), std::move(inputs),
      [rows, cols, bounds, affine, gamma, y = std::move(normalized),
       inv_std = std::move(inv_std), floored = std::move(floored)](
          std::span<const double> gy, std::span<std::span<double>> gin) {
        const std::size_t nc = bounds.size();
        std::vector<double> gyhat(gy.begin(), gy.end());
        if (affine) {
          for (std::size_t r = 0; r < rows; ++r) {
            double dg = 0.0, db = 0.0;
            for (std::size_t t = 0; t < cols; ++t) {
              const std::size_t i = r * cols + t;
              dg += gy[i] * y[i];
              db += gy[i];
              gyhat[i] = gy[i] * gamma.at(r);
            }
            if (!gin[1].empty()) gin[1][r] += dg;
            if (!gin[2].empty()) gin[2][r] += db;
          }
        }
        if (gin[0].empty()) return;
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t c = 0; c < nc; ++c) {
            const auto [b, e] = bounds[c];
            const double n = static_cast<double>(e - b);
            double mean_g = 0.0, mean_gy = 0.0;
            for (std::size_t t = b; t < e; ++t) {
              mean_g += gyhat[r * cols + t];
              mean_gy += gyhat[r * cols + t] * y[r * cols + t];
            }
            mean_g /= n;
            mean_gy /= n;
            // With a floored variance the scale is a constant.
            if (floored[r * nc + c]) mean_gy = 0.0;
            const double inv = inv_std[r * nc + c];
            for (std::size_t t = b; t < e; ++t) {
              const std::size_t i = r * cols + t;
              gin[0][i] += inv * (gyhat[i] - mean_g - y[i] * mean_gy);
            }
          }
        }
      });
}

Tensor CrossEntropy(const Tensor& logits, std::size_t label) {
  RequireRank(logits, 1, "cross_entropy");
  const std::size_t n = logits.dim(0);
  if (label >= n) {
    throw ContractError("cross_entropy: label " + std::to_string(label) +
                        " out of range for " + std::to_string(n) + " classes");
  }
  const auto z = logits.data();
  const double mx = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (double v : z) total += std::exp(v - mx);
  const double lse = mx + std::log(total);
  std::vector<double> probs(n);
  for (std::size_t i = 0; i < n; ++i) probs[i] = std::exp(z[i] - lse);
  return Tensor::MakeResult(
      {1}, {lse - z[label]}, {logits},
      [probs = std::move(probs), label](std::span<const double> gy,
                                        std::span<std::span<double>> gin) {
        for (std::size_t i = 0; i < probs.size(); ++i) {
          gin[0][i] += gy[0] * (probs[i] - (i == label ? 1.0 : 0.0));
        }
      });
}

}  // namespace dynfilt
