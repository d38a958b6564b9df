#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace gld::ad {

using Matrix = Eigen::MatrixXd;

/// Trainable tensor with an accumulated gradient of matching shape.
struct Parameter {
  Matrix value;
  // Gradient buffers are written during backward passes over const models.
  mutable Matrix grad;

  Parameter() = default;
  explicit Parameter(Matrix v) : value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())) {}

  void zero_grad() const { grad.setZero(value.rows(), value.cols()); }
};

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }
  std::size_t id() const { return id_; }
  Tape* tape() const { return tape_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode tape. Nodes are recorded in creation order, which is a
/// valid topological order, and replayed backwards by backward().
class Tape {
 public:
  /// Propagates output gradient into inputs through Tape::accumulate.
  using Backward = std::function<void(Tape&, const Matrix& out_grad)>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  /// Leaf bound to a parameter; backward() adds its gradient into p.grad.
  Var param(const Parameter& p);

  /// Records an op node. `backward` is dropped when no input needs a gradient.
  Var push(Matrix value, std::vector<Var> inputs, Backward backward);

  bool requires_grad(const Var& v) const { return nodes_[v.id_].requires_grad; }
  /// Adds `g` into the gradient of `v` (no-op for nodes without gradient).
  void accumulate(const Var& v, const Matrix& g);

  /// Seeds d(root)/d(root) = 1 and propagates. root must be 1x1.
  void backward(const Var& root);

  std::size_t size() const { return nodes_.size(); }
  bool grad_enabled() const { return grad_enabled_; }

 private:
  friend class Var;

  struct Node {
    Matrix value;
    Matrix grad;
    Backward backward;
    const Parameter* param = nullptr;
    bool requires_grad = false;
  };

  std::deque<Node> nodes_;
  bool grad_enabled_;
};

Var matmul(const Var& a, const Var& b);
/// aᵀ b
Var matmul_tn(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
/// Adds a column vector to every column of a.
Var add_bias(const Var& a, const Var& bias);
Var scale(const Var& a, double s);
Var relu(const Var& a);
/// Softmax of a column vector scaled by 1/tau.
Var softmax(const Var& a, double tau);
Var hcat(std::span<const Var> parts);
Var vcat(std::span<const Var> parts);
/// Summed binary cross-entropy of sigmoid(logits) (1 x B) against labels,
/// with probabilities clipped to [eps, 1 - eps].
Var bce_with_logits_sum(const Var& logits, std::span<const int> labels, double eps);

}  // namespace gld::ad
