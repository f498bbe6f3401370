#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ammfm {

/// Dimension list of a tensor. Every dimension is at least 1 and the rank is
/// at least 1; scalars are shape {1}.
class Shape {
 public:
  Shape() : dims_{1} {}
  Shape(std::initializer_list<std::size_t> dims);
  explicit Shape(std::vector<std::size_t> dims);

  [[nodiscard]] std::size_t rank() const noexcept { return dims_.size(); }
  [[nodiscard]] std::size_t operator[](std::size_t axis) const { return dims_.at(axis); }
  [[nodiscard]] std::size_t numel() const noexcept;
  [[nodiscard]] const std::vector<std::size_t>& dims() const noexcept { return dims_; }
  /// "4x4x8"
  [[nodiscard]] std::string str() const;

  friend bool operator==(const Shape&, const Shape&) = default;

 private:
  std::vector<std::size_t> dims_;
};

namespace detail {

/// One vertex of the computation graph. Leaves have no inputs and no
/// backward rule; interior nodes keep their inputs alive until the result is
/// released.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // sized like value iff requires_grad
  bool requires_grad = false;
  std::string_view op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads this node's grad and accumulates into the inputs' grads.
  std::function<void(Node&)> backward;
};

}  // namespace detail

/// Dense row-major array of 64-bit reals with an optional gradient buffer.
///
/// Tensor is a shared handle: copies alias the same storage. Values are
/// treated as immutable once a tensor feeds a graph; only the optimizer
/// writes to leaf parameters through mutable_values().
class Tensor {
 public:
  Tensor();
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  /// Leaf that participates in differentiation.
  static Tensor parameter(Shape shape, std::vector<double> values);

  [[nodiscard]] const Shape& shape() const noexcept { return node_->shape; }
  [[nodiscard]] std::size_t numel() const noexcept { return node_->value.size(); }
  [[nodiscard]] std::span<const double> values() const noexcept { return node_->value; }
  [[nodiscard]] double operator[](std::size_t i) const { return node_->value.at(i); }
  [[nodiscard]] double item() const;
  [[nodiscard]] bool requires_grad() const noexcept { return node_->requires_grad; }
  [[nodiscard]] bool is_leaf() const noexcept { return node_->inputs.empty(); }
  [[nodiscard]] std::string_view op() const noexcept { return node_->op; }

  /// Gradient buffer; empty when the tensor does not require grad.
  [[nodiscard]] std::span<const double> grad() const noexcept { return node_->grad; }
  std::span<double> mutable_grad() noexcept { return node_->grad; }
  /// Write access for optimizers and initializers. Only valid on leaves.
  std::span<double> mutable_values();
  void zero_grad() noexcept;

  /// Populates d(this)/d(leaf) in every reachable requires_grad leaf.
  /// Gradients accumulate; call zero_grad() on leaves between steps.
  void backward() const;

  /// Copy of the values as a fresh leaf with the same requires_grad flag.
  [[nodiscard]] Tensor clone() const;
  /// Copy of the values as a constant leaf.
  [[nodiscard]] Tensor detach() const;

  /// Same storage? Used by tests to check aliasing.
  [[nodiscard]] bool same_node(const Tensor& other) const noexcept { return node_ == other.node_; }

  [[nodiscard]] const std::shared_ptr<detail::Node>& node() const noexcept { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

/// While alive, results on this thread are built without graph edges.
class NoGradGuard {
 public:
  NoGradGuard() noexcept;
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

  /// Whether gradient tracking is currently on for this thread.
  static bool enabled() noexcept;

 private:
  bool previous_;
};

/// Builds an interior node. `backward` receives the finished node and must
/// add its contribution into each input that requires grad.
Tensor make_result(std::string_view op, Shape shape, std::vector<double> values,
                   std::vector<Tensor> inputs, std::function<void(detail::Node&)> backward);

}  // namespace ammfm
