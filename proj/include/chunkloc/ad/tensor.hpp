#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace chunkloc::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct Node;
using NodePtr = std::shared_ptr<Node>;

// One value in the computation graph. `backward` reads this node's grad and
// accumulates into the grads of `inputs`.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated on first use
  bool requires_grad = false;
  std::vector<NodePtr> inputs;
  std::function<void(Node&)> backward;

  std::span<double> grad_buffer();
};

// Shared handle to a graph node. Parameters are leaves that persist across
// steps; every op creates a fresh node referencing its inputs, so a graph lives
// exactly as long as its loss handle.
class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(Shape shape, std::vector<double> values);
  static Tensor constant(std::vector<double> values);
  static Tensor scalar(double value);
  static Tensor zeros(Shape shape);
  static Tensor parameter(Shape shape, std::vector<double> values);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t size() const { return node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }

  std::span<const double> value() const { return node_->value; }
  std::span<double> mutable_value() { return node_->value; }
  double operator[](std::size_t i) const { return node_->value[i]; }
  double item() const;

  // Zeros when no gradient has been accumulated.
  std::span<const double> grad() const;
  std::span<double> mutable_grad() { return node_->grad_buffer(); }
  void zero_grad();

  // Reverse-mode sweep from this scalar, seeding d(this)/d(this) = seed.
  void backward(double seed = 1.0) const;

  // Graph construction for op implementations.
  static Tensor make(Shape shape, std::vector<double> value, std::vector<Tensor> inputs,
                     std::function<void(Node&)> backward);
  Node& node() const { return *node_; }

 private:
  explicit Tensor(NodePtr node) : node_(std::move(node)) {}
  NodePtr node_;
};

}  // namespace chunkloc::ad
