#pragma once

#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "progsr/core/tensor.hpp"

namespace progsr::nn {

inline bool& grad_enabled_flag() {
  thread_local bool enabled = true;
  return enabled;
}

/// Disables graph recording for its lifetime (inference, frozen generators).
class NoGradGuard {
 public:
  NoGradGuard() : prev_(grad_enabled_flag()) { grad_enabled_flag() = false; }
  ~NoGradGuard() { grad_enabled_flag() = prev_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  Tensor<T>& grad_buffer() {
    if (grad.empty() && !value.empty()) grad = Tensor<T>(value.shape());
    return grad;
  }
};

/// Handle to a value in the computation graph. Copies share the node.
template <typename T>
class Var {
 public:
  Var() = default;
  explicit Var(Tensor<T> value, bool requires_grad = false) : node_(std::make_shared<Node<T>>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
  }
  explicit Var(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  bool defined() const noexcept { return static_cast<bool>(node_); }
  const Tensor<T>& value() const { return node_->value; }
  Tensor<T>& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  const Tensor<T>& grad() const { return node_->grad; }
  Tensor<T>& grad_buffer() { return node_->grad_buffer(); }
  void zero_grad() {
    if (!node_->grad.empty()) node_->grad.fill(T{0});
  }
  const std::shared_ptr<Node<T>>& node() const noexcept { return node_; }

  T item() const {
    if (node_->value.size() != 1) throw ShapeError("item() on a non-scalar value");
    return node_->value[0];
  }

 private:
  std::shared_ptr<Node<T>> node_;
};

/// Creates an op result; parents are kept only when a gradient can flow.
template <typename T>
Var<T> make_result(Tensor<T> value, std::vector<Var<T>> inputs,
                   std::function<void(Node<T>&)> backward) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  bool needs = false;
  if (grad_enabled_flag()) {
    for (const auto& in : inputs) needs = needs || in.requires_grad();
  }
  if (needs) {
    node->requires_grad = true;
    node->parents.reserve(inputs.size());
    for (auto& in : inputs) node->parents.push_back(in.node());
    node->backward = std::move(backward);
  }
  return Var<T>(std::move(node));
}

/// Reverse-mode sweep from a scalar root. Leaf gradients accumulate.
template <typename T>
void backward(const Var<T>& root) {
  if (root.value().size() != 1) throw ShapeError("backward() needs a scalar root");
  if (!root.requires_grad()) return;
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<std::pair<Node<T>*, std::size_t>> stack{{root.node().get(), 0}};
  seen.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  root.node()->grad_buffer()[0] += T{1};
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* node = *it;
    if (node->backward && !node->grad.empty()) node->backward(*node);
    if (node->backward) {
      // Interior gradients are not needed after propagation.
      node->grad = Tensor<T>();
    }
  }
}

}  // namespace progsr::nn
