#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "lanca/matrix.hpp"

namespace lanca::ad {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_to_string(const Shape& shape);

struct Node;
using NodePtr = std::shared_ptr<Node>;

// One recorded operation (or a leaf). `backward` reads this node's grad and
// accumulates into the grads of `parents`; it is empty for leaves.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  std::vector<NodePtr> parents;
  std::function<void(Node&)> backward;
  bool requires_grad = false;
  const char* op = "leaf";

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

// Handle to a node. Copies share the node; values are immutable once the node
// has consumers, except for parameters updated by an optimizer between steps.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(NodePtr node) : node_(std::move(node)) {}

  static Tensor constant(Shape shape, std::vector<double> values);
  static Tensor constant(const Matrix& m);
  static Tensor scalar(double v);
  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double v);
  // Leaf that accumulates gradients.
  static Tensor parameter(Shape shape, std::vector<double> values);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t size() const { return node_->value.size(); }
  std::size_t dim() const { return node_->shape.size(); }
  // 2-D convenience accessors; a 1-D tensor is treated as a single row.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> values() const { return node_->value; }
  std::span<double> mutable_values() { return node_->value; }
  std::span<const double> grad() const { return node_->grad; }
  bool has_grad() const { return node_->grad.size() == node_->value.size(); }
  void zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }
  bool requires_grad() const { return node_->requires_grad; }

  double item() const;
  double at(std::size_t i) const { return node_->value[i]; }
  double at(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }

  Matrix to_matrix() const;

  const NodePtr& node() const { return node_; }

 private:
  NodePtr node_;
};

// Topologically ordered view of every node reachable from a root that takes
// part in differentiation. Each node appears once, after all of its inputs.
class Tape {
 public:
  static Tape record(const Tensor& root);

  std::span<Node* const> nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }

  // Seeds d(root)/d(root) = 1 and runs every backward rule in reverse order.
  // Leaf gradients accumulate; interior gradients are reset first.
  void backward();

 private:
  std::vector<Node*> nodes_;
  NodePtr root_;
};

// Reverse-mode pass from a scalar loss. Throws if `loss` is not scalar.
void backward(const Tensor& loss);

// Result node helper used by operation implementations.
NodePtr make_result(Shape shape, std::vector<double> value, std::vector<NodePtr> parents,
                    const char* op);

}  // namespace lanca::ad
