//
// confdiff - Copyright 2026 The confdiff Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

// Reverse-mode differentiation over rank-2 dense tensors. Every op appends a
// node to a Tape; Tape::backward walks the nodes in reverse order.

namespace confdiff::diff {

/// Rank-2 tensor (rows x cols) of 64-bit reals. Vectors are 1 x m or n x 1.
using Tensor = Eigen::MatrixXd;

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
struct Var {
  Tape *tape = nullptr;
  int id = -1;

  const Tensor &value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

struct Parameter {
  Tensor value;
  Tensor first_moment;
  Tensor second_moment;
};

/// Named trainable tensors plus adaptive-moment optimizer state.
class ParameterStore {
 public:
  /// Throws InvalidInput if the name is already taken.
  void add(const std::string &name, Tensor value);
  bool contains(const std::string &name) const;
  const Tensor &value(const std::string &name) const;
  Tensor &value(const std::string &name);
  const Parameter &at(const std::string &name) const;
  Parameter &at(const std::string &name);

  const std::map<std::string, Parameter> &entries() const { return params_; }
  std::int64_t step() const { return step_; }
  void set_step(std::int64_t step) { step_ = step; }
  std::size_t scalar_count() const;

 private:
  std::map<std::string, Parameter> params_;
  std::int64_t step_ = 0;
};

using Gradients = std::map<std::string, Tensor>;

class Tape {
 public:
  using Backward = std::function<void(Tape &, const Tensor &out_grad)>;

  /// With gradients disabled every leaf is a constant and no closures are kept.
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  Var constant(Tensor value);
  /// Leaf that receives a gradient.
  Var variable(Tensor value);
  /// Leaf bound to a stored parameter; repeated calls return the same node.
  Var parameter(const ParameterStore &store, const std::string &name);

  const Tensor &value(Var v) const { return nodes_[v.id].value; }
  /// Gradient accumulated by backward(); zeros if the node was never reached.
  Tensor grad(Var v) const;
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }

  /// Throws ShapeError unless root is 1 x 1.
  void backward(Var root);

  Gradients parameter_gradients() const;
  std::size_t size() const { return nodes_.size(); }

  /// Used by op implementations. `backward` is dropped when no parent needs a
  /// gradient.
  Var record(Tensor value, std::initializer_list<Var> parents, Backward backward);
  Var record(Tensor value, std::span<const Var> parents, Backward backward);
  void accumulate(int id, const Tensor &g);
  bool needs_grad(int id) const { return nodes_[id].requires_grad; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    Backward backward;
  };

  std::vector<Node> nodes_;
  std::map<std::string, int> parameter_nodes_;
  bool grad_enabled_ = true;
};

// Ops. Shape mismatches throw ShapeError naming the op.

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
/// Elementwise product.
Var mul(Var a, Var b);
Var scale(Var a, double factor);
/// a (n x m) plus the 1 x m row broadcast over every row.
Var add_row(Var a, Var row);
/// a (n x m) times the n x 1 column broadcast over every column.
Var mul_col(Var a, Var col);
/// x * sigmoid(x)
Var silu(Var a);
/// out.row(k) = a.row(index[k])
Var gather_rows(Var a, std::span<const int> index);
/// out.row(index[k]) += a.row(k), out has `out_rows` rows; accumulation in ascending k.
Var scatter_add_rows(Var a, std::span<const int> index, Eigen::Index out_rows);
Var concat_cols(std::span<const Var> parts);
/// Per-row squared Euclidean norm, n x 1.
Var row_sqnorm(Var a);
/// Sum of all entries, 1 x 1.
Var sum(Var a);

/// x W + b
inline Var linear(Var x, Var weight, Var bias) { return add_row(matmul(x, weight), bias); }

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected adaptive-moment update. Parameters without an entry in
/// `gradients` see a zero gradient. Throws TrainingError naming the parameter
/// on a non-finite gradient, before anything is modified.
void adam_step(ParameterStore &params, const Gradients &gradients,
               const AdamOptions &options);

struct ForwardBackwardResult {
  double loss = 0.0;
  Gradients gradients;
};

/// Builds a scalar loss on a fresh tape, back-propagates, and returns the
/// parameter gradients.
ForwardBackwardResult forward_backward(const std::function<Var(Tape &)> &build);

}  // namespace confdiff::diff
