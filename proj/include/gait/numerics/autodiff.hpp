#pragma once

// Tape-based reverse-mode differentiation over Tensor values.
//
// Every differentiable op computes its forward value eagerly and, when any
// input requires a gradient, records a closure that maps the output gradient
// to input gradients. Graph::backward replays the tape in reverse creation
// order, which is a valid topological order because nodes are only ever
// created from existing nodes.

#include <functional>
#include <memory>
#include <vector>

#include "gait/numerics/params.hpp"
#include "gait/numerics/tensor.hpp"

namespace gait {

template <typename Real>
class Graph;

template <typename Real>
struct Node {
  Tensor<Real> value;
  Tensor<Real> grad;
  bool requires_grad = false;
  bool is_leaf = false;
  std::function<void(const Tensor<Real>&)> backward;

  /// Gradient buffer, zero-initialized on first use.
  Tensor<Real>& grad_buffer() {
    if (grad.empty()) grad = Tensor<Real>(value.shape());
    return grad;
  }
};

template <typename Real>
class Var {
 public:
  Var() = default;
  Var(std::shared_ptr<Node<Real>> node, Graph<Real>* graph) : node_(std::move(node)), graph_(graph) {}

  const Tensor<Real>& value() const { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool defined() const { return static_cast<bool>(node_); }

  /// Accumulated gradient after Graph::backward (empty if none flowed here).
  const Tensor<Real>& grad() const { return node_->grad; }

  Graph<Real>& graph() const { return *graph_; }
  const std::shared_ptr<Node<Real>>& node() const { return node_; }

 private:
  std::shared_ptr<Node<Real>> node_;
  Graph<Real>* graph_ = nullptr;
};

template <typename Real>
class Graph {
 public:
  explicit Graph(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool grad_enabled() const { return grad_enabled_; }

  Var<Real> constant(Tensor<Real> value) {
    auto node = std::make_shared<Node<Real>>();
    node->value = std::move(value);
    return Var<Real>(std::move(node), this);
  }

  /// Differentiable input; its gradient is kept after backward().
  Var<Real> leaf(Tensor<Real> value) {
    auto node = std::make_shared<Node<Real>>();
    node->value = std::move(value);
    node->is_leaf = true;
    node->requires_grad = grad_enabled_;
    if (node->requires_grad) tape_.push_back(node);
    return Var<Real>(std::move(node), this);
  }

  /// Parameter leaf. The value is copied into the graph; gradients are added
  /// into `param.grad` during backward().
  Var<Real> param(Parameter<Real>& param) {
    auto node = std::make_shared<Node<Real>>();
    node->value = param.value;
    node->is_leaf = true;
    node->requires_grad = grad_enabled_ && param.trainable;
    if (node->requires_grad) {
      Parameter<Real>* target = &param;
      node->backward = [target](const Tensor<Real>& g) {
        Real* dst = target->grad.data();
        const Real* src = g.data();
        for (std::size_t i = 0; i < g.size(); ++i) dst[i] += src[i];
      };
      tape_.push_back(node);
    }
    return Var<Real>(std::move(node), this);
  }

  /// Records an op output. `backward` receives the output gradient and must
  /// add into the grad_buffer() of every parent that requires a gradient.
  Var<Real> record(Tensor<Real> value, std::initializer_list<Var<Real>> parents,
                   std::function<void(const Tensor<Real>&)> backward) {
    auto node = std::make_shared<Node<Real>>();
    node->value = std::move(value);
    bool needs = false;
    for (const auto& p : parents) needs = needs || p.requires_grad();
    node->requires_grad = grad_enabled_ && needs;
    if (node->requires_grad) {
      node->backward = std::move(backward);
      tape_.push_back(node);
    }
    return Var<Real>(std::move(node), this);
  }

  /// Seeds d(root)/d(root) = 1 for a single-element root and propagates.
  /// Intermediate gradients are released once consumed.
  void backward(const Var<Real>& root) {
    if (root.value().size() != 1) throw ShapeError("backward() requires a scalar root");
    if (!root.requires_grad()) return;
    root.node()->grad_buffer()[0] += Real(1);
    for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) {
      Node<Real>& node = **it;
      if (node.grad.empty()) continue;
      if (node.backward) node.backward(node.grad);
      if (!node.is_leaf) node.grad = Tensor<Real>();
    }
  }

  std::size_t tape_size() const { return tape_.size(); }

 private:
  bool grad_enabled_;
  std::vector<std::shared_ptr<Node<Real>>> tape_;
};

/// Adds `g` into the gradient of `parent` when it participates.
template <typename Real>
void accumulate(const Var<Real>& parent, const Tensor<Real>& g) {
  if (!parent.requires_grad()) return;
  Tensor<Real>& dst = parent.node()->grad_buffer();
  Real* d = dst.data();
  const Real* s = g.data();
  for (std::size_t i = 0; i < g.size(); ++i) d[i] += s[i];
}

}  // namespace gait
