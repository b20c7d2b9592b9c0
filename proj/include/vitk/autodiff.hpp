#pragma once

// Reverse-mode automatic differentiation over dense double matrices.
//
// A Tape records nodes in creation order; backward() walks them in reverse.
// Every op is a free function taking and returning Var handles.  Shapes are
// always 2-D (column vectors are n x 1).

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace vitk::ad {

using Matrix = Eigen::MatrixXd;

/// Trainable tensor.  `grad` is accumulated by Tape::backward.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  bool decay = true;        // subject to decoupled weight decay
  double lr_scale = 1.0;    // per-parameter learning-rate multiplier

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

class Tape;

struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, const Matrix& grad_out)>;

  /// With record = false no backward closures are stored (inference).
  explicit Tape(bool record = true) : record_(record) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  /// Leaf bound to a parameter; its value is read in place, not copied.
  Var parameter(Parameter& p);

  /// Seeds d(loss)/d(loss) = 1 for a 1x1 node and propagates; parameter
  /// gradients are added to Parameter::grad.
  void backward(Var loss);

  const Matrix& value(Var v) const;
  /// Gradient of the last backward() with respect to v (zero if unreached).
  Matrix grad(Var v) const;

  bool needs_grad(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].needs_grad; }
  bool recording() const { return record_; }
  std::size_t size() const { return nodes_.size(); }

  /// Appends a computed node.  `backward` is kept only when some input needs
  /// a gradient.
  Var push(Matrix value, std::initializer_list<Var> inputs, Backward backward);
  Var push(Matrix value, std::span<const Var> inputs, Backward backward);

  /// Gradient accumulator of an input (allocated on first use).
  Matrix& accum(Var v);

 private:
  struct Node {
    Matrix value;
    const Matrix* external = nullptr;
    Parameter* param = nullptr;
    Matrix grad;
    bool needs_grad = false;
    Backward backward;
  };

  bool record_;
  std::vector<Node> nodes_;
};

// Linear algebra
Var matmul(Var a, Var b);
Var matmul_bt(Var a, Var b);  // a * b^T
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var a, double s);
Var add_row_broadcast(Var a, Var row);  // a + 1 * row, row is 1 x cols
Var linear(Var x, Var weight, Var bias);  // x W^T + b, W is [out, in]

// Elementwise
Var gelu(Var a);

// Row-wise normalisations
Var layer_norm_rows(Var x, Var gain, Var bias, double eps = 1e-5);
Var softmax_rows(Var x);

// Structure
Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
Var slice_rows(Var a, Eigen::Index start, Eigen::Index count);
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
/// out.flat[i] = a.flat[index[i]] (column-major flat indices).
Var gather(Var a, std::vector<int> index, Eigen::Index rows, Eigen::Index cols);

// Reductions
Var sum_squares(Var a);
/// Mean of (pred - target)^2 over entries of column `col` whose region flag is set.
Var masked_column_mse(Var pred, const Matrix& target, int col, std::span<const std::uint8_t> region);
/// Huber variant of masked_column_mse (quadratic below delta).
Var masked_column_huber(Var pred, const Matrix& target, int col, std::span<const std::uint8_t> region,
                        double delta);
/// sum_i coeffs[i] * terms[i] over 1x1 nodes.
Var weighted_sum(std::span<const Var> terms, std::span<const double> coeffs);

/// 3x3 zero-padded convolution.  x is (B*h*w) x c_in, B images stacked by
/// rows, each with pixel rows i*w + j;
/// weight is [c_out, 9 * c_in] with column (ky * 3 + kx) * c_in + c.
Var conv3x3(Var x, Var weight, Var bias, int h, int w);

/// Block-diagonal Koopman propagation: column k of the result is
/// exp(taus[k] A) x_k, where x has one column per tau or a single column that
/// is broadcast.  A is built from softplus(raw_gamma) and omega (both m x 1).
Var block_expm_apply(Var x, Var raw_gamma, Var omega, std::span<const double> taus);

/// Dense stable propagation with A = -L L^T + (W - W^T)/2, L = tril(lower).
Var dense_expm_apply(Var x, Var lower, Var skew_source, std::span<const double> taus);

}  // namespace vitk::ad
