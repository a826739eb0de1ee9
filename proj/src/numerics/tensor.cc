// Copyright 2026 The dynfilt Authors
// SPDX-License-Identifier: Apache-2.0

#include "dynfilt/tensor.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <unordered_set>
#include <utility>

#include "dynfilt/errors.h"

namespace dynfilt {

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;
  bool requires_grad = false;
  bool leaf = true;
  std::vector<std::shared_ptr<Node>> inputs;
  BackwardFn backward;
  std::uint64_t seq = 0;
};

}  // namespace detail

namespace {

std::atomic<std::uint64_t> g_next_seq{1};

std::shared_ptr<detail::Node> NewNode(Shape shape, std::vector<double> values,
                                      bool requires_grad) {
  if (NumElements(shape) != values.size()) {
    throw DimensionError("tensor shape " + ShapeToString(shape) + " holds " +
                         std::to_string(NumElements(shape)) +
                         " elements but got " + std::to_string(values.size()));
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->values = std::move(values);
  node->requires_grad = requires_grad;
  node->seq = g_next_seq.fetch_add(1, std::memory_order_relaxed);
  return node;
}

void CheckFinite(std::span<const double> values, const char* what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      std::ostringstream os;
      os << "non-finite value " << values[i] << " at index " << i << " in "
         << what;
      throw NumericError(os.str());
    }
  }
}

}  // namespace

std::size_t NumElements(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string ShapeToString(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ')';
  return os.str();
}

Tensor::Tensor() = default;

Tensor::Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

Tensor Tensor::Zeros(Shape shape, bool requires_grad) {
  return Full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::Full(Shape shape, double value, bool requires_grad) {
  std::vector<double> values(NumElements(shape), value);
  return Tensor(NewNode(std::move(shape), std::move(values), requires_grad));
}

Tensor Tensor::FromData(Shape shape, std::vector<double> values,
                        bool requires_grad) {
  CheckFinite(values, "tensor initializer");
  return Tensor(NewNode(std::move(shape), std::move(values), requires_grad));
}

Tensor Tensor::Scalar(double value) { return FromData({1}, {value}); }

Tensor Tensor::MakeResult(Shape shape, std::vector<double> values,
                          std::vector<Tensor> inputs, BackwardFn backward) {
  CheckFinite(values, "forward pass");
  bool needs_grad = false;
  for (const Tensor& t : inputs) needs_grad |= t.requires_grad();
  auto node = NewNode(std::move(shape), std::move(values), needs_grad);
  node->leaf = false;
  if (needs_grad) {
    node->inputs.reserve(inputs.size());
    for (Tensor& t : inputs) node->inputs.push_back(std::move(t.node_));
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

const Shape& Tensor::shape() const {
  static const Shape kEmpty;
  return node_ ? node_->shape : kEmpty;
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= rank()) {
    throw DimensionError("axis " + std::to_string(axis) +
                         " out of range for shape " + ShapeToString(shape()));
  }
  return node_->shape[axis];
}

std::size_t Tensor::size() const { return node_ ? node_->values.size() : 0; }

std::span<const double> Tensor::data() const {
  if (!node_) return {};
  return node_->values;
}

std::span<double> Tensor::mutable_data() {
  if (!node_->leaf) {
    throw ContractError("mutable_data() on a non-leaf tensor");
  }
  return node_->values;
}

double Tensor::item() const {
  if (size() != 1) {
    throw ContractError("item() on tensor of shape " + ShapeToString(shape()));
  }
  return node_->values[0];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

bool Tensor::is_leaf() const { return !node_ || node_->leaf; }

std::span<const double> Tensor::grad() const {
  if (!node_) return {};
  return node_->grad;
}

std::span<double> Tensor::mutable_grad() {
  if (node_->grad.size() != node_->values.size()) {
    node_->grad.assign(node_->values.size(), 0.0);
  }
  return node_->grad;
}

void Tensor::ZeroGrad() {
  if (node_) node_->grad.assign(node_->values.size(), 0.0);
}

Tensor Tensor::Detach(bool requires_grad) const {
  return Tensor(NewNode(shape(), node_->values, requires_grad));
}

void Backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ContractError("backward() needs a scalar loss, got shape " +
                        ShapeToString(loss.shape()));
  }
  using detail::Node;
  std::vector<Node*> order;
  std::unordered_set<const Node*> seen;
  std::vector<Node*> stack{loss.node_.get()};
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    if (!n->requires_grad || !seen.insert(n).second) continue;
    order.push_back(n);
    for (const auto& in : n->inputs) stack.push_back(in.get());
  }
  // An op's inputs are always created before the op itself.
  std::sort(order.begin(), order.end(),
            [](const Node* a, const Node* b) { return a->seq > b->seq; });
  for (Node* n : order) n->grad.assign(n->values.size(), 0.0);
  if (order.empty()) return;
  loss.node_->grad[0] = 1.0;

  std::vector<std::span<double>> grad_in;
  for (Node* n : order) {
    if (!n->backward) continue;
    grad_in.clear();
    for (const auto& in : n->inputs) {
      grad_in.push_back(in->requires_grad ? std::span<double>(in->grad)
                                          : std::span<double>());
    }
    n->backward(n->grad, grad_in);
  }
  for (Node* n : order) {
    if (n->leaf) CheckFinite(n->grad, "backward pass");
  }
}

}  // namespace dynfilt
