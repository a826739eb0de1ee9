// Copyright 2026 The dynfilt Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef DYNFILT_TENSOR_H_
#define DYNFILT_TENSOR_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace dynfilt {

using Shape = std::vector<std::size_t>;

std::size_t NumElements(const Shape& shape);
std::string ShapeToString(const Shape& shape);

// Backward closure of a recorded op. `grad_in[i]` is the gradient buffer of
// the i-th input, or an empty span when that input does not need a gradient.
using BackwardFn = std::function<void(std::span<const double> grad_out,
                                      std::span<std::span<double>> grad_in)>;

namespace detail {
struct Node;
}  // namespace detail

// Dense row-major float64 array with an optional gradient buffer.
//
// Tensor is a cheap handle: copies share storage. Values produced by ops are
// never modified afterwards; only leaf tensors (parameters) may be written
// through mutable_data(), and only between passes.
//
// Every op that has at least one input with requires_grad() records a
// backward closure. Backward() replays the recorded closures in reverse
// creation order.
class Tensor {
 public:
  Tensor();

  static Tensor Zeros(Shape shape, bool requires_grad = false);
  static Tensor Full(Shape shape, double value, bool requires_grad = false);
  static Tensor FromData(Shape shape, std::vector<double> values,
                         bool requires_grad = false);
  static Tensor Scalar(double value);

  // Result of a differentiable op. Throws NumericError if `values` contains a
  // non-finite number.
  static Tensor MakeResult(Shape shape, std::vector<double> values,
                           std::vector<Tensor> inputs, BackwardFn backward);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const;

  std::span<const double> data() const;
  // Leaf tensors only.
  std::span<double> mutable_data();
  double item() const;
  double at(std::size_t flat_index) const { return data()[flat_index]; }

  bool requires_grad() const;
  bool is_leaf() const;
  // Empty span until a backward pass has reached this tensor.
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void ZeroGrad();

  // A new leaf holding a copy of the values, detached from any graph.
  Tensor Detach(bool requires_grad = false) const;

  // Shares storage, used for identity comparisons in tests and registries.
  bool SameAs(const Tensor& other) const { return node_ == other.node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node);
  friend void Backward(const Tensor& loss);

  std::shared_ptr<detail::Node> node_;
};

// Populates the gradient of every requires_grad tensor reachable from `loss`.
// Gradients are zeroed before accumulation so repeated calls do not sum.
// Throws ContractError when `loss` has more than one element.
void Backward(const Tensor& loss);

}  // namespace dynfilt

#endif  // DYNFILT_TENSOR_H_
