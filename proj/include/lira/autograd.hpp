#pragma once
// Reverse-mode differentiation over Tensor values.
//
// A Var is a shared handle to a graph node. Ops create new nodes that keep
// their parents alive only when some parent requires a gradient, so inference
// graphs are freed as soon as intermediate handles go out of scope. The graph
// built during one forward pass is the tape; it is discarded with the handles.

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "lira/tensor.hpp"

namespace lira::nn {

struct Node {
  Tensor value;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this->grad and accumulates into the parents' grad buffers.
  std::function<void(Node&)> backward;

  std::span<double> grad_buffer();
};

class Var {
 public:
  Var() = default;

  static Var constant(Tensor value);
  static Var leaf(Tensor value, bool requires_grad);

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  std::size_t dim(std::size_t axis) const { return node_->value.dim(axis); }
  bool requires_grad() const { return node_ && node_->requires_grad; }

  bool has_grad() const { return node_ && !node_->grad.empty(); }
  // Zero-filled when no gradient reached this node.
  std::vector<double> grad() const;

  // Seeds d(self)/d(self) = 1; self must hold a single element.
  void backward() const;

  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& shared() const { return node_; }

 private:
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  std::shared_ptr<Node> node_;

  friend Var make_result(Tensor value, std::vector<Var> parents,
                         std::function<void(Node&)> backward);
};

// Builds an op output. The backward closure is dropped when no parent needs a
// gradient. Closures should capture raw Node pointers of parents; parents are
// kept alive by the result node.
Var make_result(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward);

}  // namespace lira::nn
