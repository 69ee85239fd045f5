#include "lanca/autodiff/tensor.hpp"

#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace lanca::ad {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

namespace {

NodePtr make_leaf(Shape shape, std::vector<double> values, bool requires_grad) {
  if (shape_size(shape) != values.size()) {
    throw std::invalid_argument("Tensor: " + std::to_string(values.size()) +
                                " values do not fill shape " + shape_to_string(shape));
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return node;
}

}  // namespace

Tensor Tensor::constant(Shape shape, std::vector<double> values) {
  return Tensor(make_leaf(std::move(shape), std::move(values), false));
}

Tensor Tensor::constant(const Matrix& m) { return constant({m.rows(), m.cols()}, m.data()); }

Tensor Tensor::scalar(double v) { return constant({1}, {v}); }

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(Shape shape, double v) {
  const std::size_t n = shape_size(shape);
  return constant(std::move(shape), std::vector<double>(n, v));
}

Tensor Tensor::parameter(Shape shape, std::vector<double> values) {
  return Tensor(make_leaf(std::move(shape), std::move(values), true));
}

std::size_t Tensor::rows() const {
  const auto& s = node_->shape;
  if (s.size() == 2) return s[0];
  if (s.size() <= 1) return 1;
  throw std::logic_error("Tensor::rows: tensor of shape " + shape_to_string(s) + " is not 2-D");
}

std::size_t Tensor::cols() const {
  const auto& s = node_->shape;
  if (s.size() == 2) return s[1];
  if (s.size() == 1) return s[0];
  if (s.empty()) return 1;
  throw std::logic_error("Tensor::cols: tensor of shape " + shape_to_string(s) + " is not 2-D");
}

double Tensor::item() const {
  if (size() != 1) {
    throw std::logic_error("Tensor::item: tensor of shape " + shape_to_string(shape()) +
                           " is not a scalar");
  }
  return node_->value[0];
}

Matrix Tensor::to_matrix() const { return Matrix(rows(), cols(), node_->value); }

Tape Tape::record(const Tensor& root) {
  Tape tape;
  tape.root_ = root.node();
  if (!root.node() || !root.requires_grad()) return tape;

  // Iterative post-order DFS: a node is emitted after all of its parents.
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  visited.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
      continue;
    }
    tape.nodes_.push_back(node);
    stack.pop_back();
  }
  return tape;
}

void Tape::backward() {
  if (nodes_.empty()) return;
  for (Node* node : nodes_) {
    if (node->backward) node->grad.assign(node->value.size(), 0.0);
    else node->ensure_grad();
  }
  Node* root = nodes_.back();
  for (double& g : root->grad) g += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if ((*it)->backward) (*it)->backward(**it);
  }
}

void backward(const Tensor& loss) {
  if (loss.size() != 1) {
    throw std::invalid_argument("backward: loss must be scalar, got shape " +
                                shape_to_string(loss.shape()));
  }
  Tape::record(loss).backward();
}

NodePtr make_result(Shape shape, std::vector<double> value, std::vector<NodePtr> parents,
                    const char* op) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->op = op;
  for (const auto& p : parents) node->requires_grad = node->requires_grad || p->requires_grad;
  if (node->requires_grad) node->parents = std::move(parents);
  return node;
}

}  // namespace lanca::ad
