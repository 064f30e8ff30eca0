#include "chunkloc/ad/tensor.hpp"

#include <algorithm>
#include <unordered_set>

#include "chunkloc/util/error.hpp"

namespace chunkloc::ad {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (const auto d : shape) {
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) {
      out += ",";
    }
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

std::span<double> Node::grad_buffer() {
  if (grad.size() != value.size()) {
    grad.assign(value.size(), 0.0);
  }
  return grad;
}

namespace {

NodePtr leaf(Shape shape, std::vector<double> values, bool requires_grad) {
  if (numel(shape) != values.size()) {
    throw ShapeError("tensor data length " + std::to_string(values.size()) + " does not match shape " +
                     shape_str(shape));
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return node;
}

}  // namespace

Tensor Tensor::constant(Shape shape, std::vector<double> values) {
  return Tensor(leaf(std::move(shape), std::move(values), false));
}

Tensor Tensor::constant(std::vector<double> values) {
  Shape shape{values.size()};
  return constant(std::move(shape), std::move(values));
}

Tensor Tensor::scalar(double value) { return constant(Shape{}, {value}); }

Tensor Tensor::zeros(Shape shape) {
  const auto n = numel(shape);
  return constant(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::parameter(Shape shape, std::vector<double> values) {
  return Tensor(leaf(std::move(shape), std::move(values), true));
}

double Tensor::item() const {
  if (size() != 1) {
    throw ShapeError("item() on tensor of shape " + shape_str(shape()));
  }
  return node_->value[0];
}

std::span<const double> Tensor::grad() const {
  if (node_->grad.size() != node_->value.size()) {
    node_->grad.assign(node_->value.size(), 0.0);
  }
  return node_->grad;
}

void Tensor::zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), 0.0); }

void Tensor::backward(double seed) const {
  if (size() != 1) {
    throw ShapeError("backward() needs a scalar, got shape " + shape_str(shape()));
  }
  if (!node_->requires_grad) {
    return;
  }
  // Iterative post-order DFS gives a topological order (inputs first).
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) {
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  node_->grad_buffer()[0] += seed;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward && !node->grad.empty()) {
      node->backward(*node);
    }
  }
}

Tensor Tensor::make(Shape shape, std::vector<double> value, std::vector<Tensor> inputs,
                    std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  for (const auto& in : inputs) {
    if (in.requires_grad()) {
      node->requires_grad = true;
    }
  }
  if (node->requires_grad) {
    node->inputs.reserve(inputs.size());
    for (auto& in : inputs) {
      node->inputs.push_back(std::move(in.node_));
    }
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

}  // namespace chunkloc::ad
