#include "vitk/autodiff.hpp"

#include <cmath>
#include <map>

#include "vitk/activations.hpp"
#include "vitk/errors.hpp"
#include "vitk/expm.hpp"

namespace vitk::ad {
namespace {

void require(bool ok, const char* what) {
  if (!ok) throw PreconditionError(std::string("autodiff: ") + what);
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw PreconditionError(std::string("autodiff: shape mismatch in ") + op + " (" + std::to_string(a.rows()) +
                            "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                            std::to_string(b.cols()) + ")");
  }
}

}  // namespace

const Matrix& Var::value() const { return tape->value(*this); }

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size() - 1)};
}

Var Tape::parameter(Parameter& p) {
  Node n;
  n.external = &p.value;
  n.param = &p;
  n.needs_grad = record_;
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size() - 1)};
}

const Matrix& Tape::value(Var v) const {
  const Node& n = nodes_[static_cast<std::size_t>(v.id)];
  return n.external != nullptr ? *n.external : n.value;
}

Matrix Tape::grad(Var v) const {
  const Node& n = nodes_[static_cast<std::size_t>(v.id)];
  if (n.grad.size() == 0) return Matrix::Zero(value(v).rows(), value(v).cols());
  return n.grad;
}

Matrix& Tape::accum(Var v) {
  Node& n = nodes_[static_cast<std::size_t>(v.id)];
  if (n.grad.size() == 0) {
    const Matrix& val = n.external != nullptr ? *n.external : n.value;
    n.grad = Matrix::Zero(val.rows(), val.cols());
  }
  return n.grad;
}

Var Tape::push(Matrix value, std::span<const Var> inputs, Backward backward) {
  Node n;
  n.value = std::move(value);
  if (record_) {
    for (const Var& in : inputs) {
      if (nodes_[static_cast<std::size_t>(in.id)].needs_grad) {
        n.needs_grad = true;
        break;
      }
    }
  }
  if (n.needs_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size() - 1)};
}

Var Tape::push(Matrix value, std::initializer_list<Var> inputs, Backward backward) {
  return push(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(backward));
}

void Tape::backward(Var loss) {
  require(record_, "backward on a non-recording tape");
  require(value(loss).size() == 1, "backward needs a scalar loss");
  for (auto& n : nodes_) n.grad.resize(0, 0);
  nodes_[static_cast<std::size_t>(loss.id)].grad = Matrix::Ones(1, 1);
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.grad.size() == 0) continue;
    if (n.backward) n.backward(*this, n.grad);
    if (n.param != nullptr) {
      Parameter& p = *n.param;
      if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols()) p.zero_grad();
      p.grad += n.grad;
    }
  }
}

// ---------------------------------------------------------------------------
// Linear algebra

Var matmul(Var a, Var b) {
  require(a.cols() == b.rows(), "matmul inner dimensions differ");
  return a.tape->push(a.value() * b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.needs_grad(a)) t.accum(a).noalias() += g * t.value(b).transpose();
    if (t.needs_grad(b)) t.accum(b).noalias() += t.value(a).transpose() * g;
  });
}

Var matmul_bt(Var a, Var b) {
  require(a.cols() == b.cols(), "matmul_bt inner dimensions differ");
  return a.tape->push(a.value() * b.value().transpose(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.needs_grad(a)) t.accum(a).noalias() += g * t.value(b);
    if (t.needs_grad(b)) t.accum(b).noalias() += g.transpose() * t.value(a);
  });
}

Var transpose(Var a) {
  return a.tape->push(a.value().transpose(), {a},
                      [a](Tape& t, const Matrix& g) { t.accum(a) += g.transpose(); });
}

Var add(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "add");
  return a.tape->push(a.value() + b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.needs_grad(a)) t.accum(a) += g;
    if (t.needs_grad(b)) t.accum(b) += g;
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "sub");
  return a.tape->push(a.value() - b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.needs_grad(a)) t.accum(a) += g;
    if (t.needs_grad(b)) t.accum(b) -= g;
  });
}

Var scale(Var a, double s) {
  return a.tape->push(s * a.value(), {a}, [a, s](Tape& t, const Matrix& g) { t.accum(a) += s * g; });
}

Var add_row_broadcast(Var a, Var row) {
  require(row.rows() == 1 && row.cols() == a.cols(), "add_row_broadcast expects a 1 x cols row");
  Matrix out = a.value();
  out.rowwise() += row.value().row(0);
  return a.tape->push(std::move(out), {a, row}, [a, row](Tape& t, const Matrix& g) {
    if (t.needs_grad(a)) t.accum(a) += g;
    if (t.needs_grad(row)) t.accum(row) += g.colwise().sum();
  });
}

Var linear(Var x, Var weight, Var bias) { return add_row_broadcast(matmul_bt(x, weight), bias); }

// ---------------------------------------------------------------------------
// Elementwise

Var gelu(Var a) {
  return a.tape->push(a.value().unaryExpr([](double v) { return vitk::gelu(v); }), {a},
                      [a](Tape& t, const Matrix& g) {
                        t.accum(a) += g.cwiseProduct(t.value(a).unaryExpr([](double v) { return gelu_grad(v); }));
                      });
}

// ---------------------------------------------------------------------------
// Normalisation

Var layer_norm_rows(Var x, Var gain, Var bias, double eps) {
  const Matrix& xv = x.value();
  const auto n = xv.cols();
  require(gain.rows() == 1 && gain.cols() == n && bias.rows() == 1 && bias.cols() == n,
          "layer_norm gain/bias must be 1 x cols");
  const Eigen::VectorXd mean = xv.rowwise().mean();
  Matrix centered = xv.colwise() - mean;
  const Eigen::VectorXd inv_std =
      ((centered.array().square().rowwise().sum() / static_cast<double>(n)) + eps).rsqrt().matrix();
  Matrix xhat = inv_std.asDiagonal() * centered;
  Matrix out = xhat * gain.value().row(0).asDiagonal();
  out.rowwise() += bias.value().row(0);
  return x.tape->push(std::move(out), {x, gain, bias},
                      [x, gain, bias, xhat = std::move(xhat), inv_std, n](Tape& t, const Matrix& g) {
                        if (t.needs_grad(gain)) t.accum(gain) += g.cwiseProduct(xhat).colwise().sum();
                        if (t.needs_grad(bias)) t.accum(bias) += g.colwise().sum();
                        if (t.needs_grad(x)) {
                          const Matrix dxhat = g * t.value(gain).row(0).asDiagonal();
                          const Eigen::VectorXd sum_d = dxhat.rowwise().sum();
                          const Eigen::VectorXd sum_dx = dxhat.cwiseProduct(xhat).rowwise().sum();
                          Matrix dx = static_cast<double>(n) * dxhat;
                          dx.colwise() -= sum_d;
                          dx -= sum_dx.asDiagonal() * xhat;
                          t.accum(x) += (inv_std / static_cast<double>(n)).asDiagonal() * dx;
                        }
                      });
}

Var softmax_rows(Var x) {
  Matrix out = x.value();
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const double m = out.row(r).maxCoeff();
    out.row(r) = (out.row(r).array() - m).exp();
    out.row(r) /= out.row(r).sum();
  }
  Matrix y = out;
  return x.tape->push(std::move(out), {x}, [x, y = std::move(y)](Tape& t, const Matrix& g) {
    const Eigen::VectorXd dot = g.cwiseProduct(y).rowwise().sum();
    Matrix centered = g;
    centered.colwise() -= dot;
    t.accum(x) += y.cwiseProduct(centered);
  });
}

// ---------------------------------------------------------------------------
// Structure

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  require(start >= 0 && count >= 0 && start + count <= a.cols(), "slice_cols out of range");
  return a.tape->push(a.value().middleCols(start, count), {a}, [a, start, count](Tape& t, const Matrix& g) {
    t.accum(a).middleCols(start, count) += g;
  });
}

Var slice_rows(Var a, Eigen::Index start, Eigen::Index count) {
  require(start >= 0 && count >= 0 && start + count <= a.rows(), "slice_rows out of range");
  return a.tape->push(a.value().middleRows(start, count), {a}, [a, start, count](Tape& t, const Matrix& g) {
    t.accum(a).middleRows(start, count) += g;
  });
}

Var concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), "concat_cols of nothing");
  const auto rows = parts[0].rows();
  Eigen::Index cols = 0;
  for (const Var& p : parts) {
    require(p.rows() == rows, "concat_cols row counts differ");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  Eigen::Index offset = 0;
  for (const Var& p : parts) {
    out.middleCols(offset, p.cols()) = p.value();
    offset += p.cols();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return parts[0].tape->push(std::move(out), parts, [inputs](Tape& t, const Matrix& g) {
    Eigen::Index off = 0;
    for (const Var& p : inputs) {
      const auto c = t.value(p).cols();
      if (t.needs_grad(p)) t.accum(p) += g.middleCols(off, c);
      off += c;
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  require(!parts.empty(), "concat_rows of nothing");
  const auto cols = parts[0].cols();
  Eigen::Index rows = 0;
  for (const Var& p : parts) {
    require(p.cols() == cols, "concat_rows column counts differ");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  Eigen::Index offset = 0;
  for (const Var& p : parts) {
    out.middleRows(offset, p.rows()) = p.value();
    offset += p.rows();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return parts[0].tape->push(std::move(out), parts, [inputs](Tape& t, const Matrix& g) {
    Eigen::Index off = 0;
    for (const Var& p : inputs) {
      const auto r = t.value(p).rows();
      if (t.needs_grad(p)) t.accum(p) += g.middleRows(off, r);
      off += r;
    }
  });
}

Var gather(Var a, std::vector<int> index, Eigen::Index rows, Eigen::Index cols) {
  require(static_cast<Eigen::Index>(index.size()) == rows * cols, "gather index size must equal rows * cols");
  const Matrix& av = a.value();
  Matrix out(rows, cols);
  for (std::size_t i = 0; i < index.size(); ++i) {
    require(index[i] >= 0 && index[i] < av.size(), "gather index out of range");
    out.data()[i] = av.data()[index[i]];
  }
  return a.tape->push(std::move(out), {a}, [a, index = std::move(index)](Tape& t, const Matrix& g) {
    Matrix& ga = t.accum(a);
    for (std::size_t i = 0; i < index.size(); ++i) ga.data()[index[i]] += g.data()[i];
  });
}

// ---------------------------------------------------------------------------
// Reductions

Var sum_squares(Var a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().squaredNorm();
  return a.tape->push(std::move(out), {a},
                      [a](Tape& t, const Matrix& g) { t.accum(a) += (2.0 * g(0, 0)) * t.value(a); });
}

Var masked_column_mse(Var pred, const Matrix& target, int col, std::span<const std::uint8_t> region) {
  const Matrix& p = pred.value();
  require_same_shape(p, target, "masked_column_mse");
  require(static_cast<Eigen::Index>(region.size()) == p.rows(), "region size must match rows");
  Eigen::VectorXd diff = Eigen::VectorXd::Zero(p.rows());
  std::size_t count = 0;
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    if (region[static_cast<std::size_t>(r)] == 0) continue;
    diff[r] = p(r, col) - target(r, col);
    ++count;
  }
  require(count > 0, "masked_column_mse over an empty region");
  const double inv = 1.0 / static_cast<double>(count);
  Matrix out(1, 1);
  out(0, 0) = diff.squaredNorm() * inv;
  return pred.tape->push(std::move(out), {pred}, [pred, col, inv, diff = std::move(diff)](Tape& t, const Matrix& g) {
    t.accum(pred).col(col) += (2.0 * inv * g(0, 0)) * diff;
  });
}

Var masked_column_huber(Var pred, const Matrix& target, int col, std::span<const std::uint8_t> region,
                        double delta) {
  const Matrix& p = pred.value();
  require_same_shape(p, target, "masked_column_huber");
  require(static_cast<Eigen::Index>(region.size()) == p.rows(), "region size must match rows");
  require(delta > 0.0, "huber delta must be positive");
  Eigen::VectorXd dloss = Eigen::VectorXd::Zero(p.rows());
  double total = 0.0;
  std::size_t count = 0;
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    if (region[static_cast<std::size_t>(r)] == 0) continue;
    const double e = p(r, col) - target(r, col);
    if (std::abs(e) <= delta) {
      total += 0.5 * e * e;
      dloss[r] = e;
    } else {
      total += delta * (std::abs(e) - 0.5 * delta);
      dloss[r] = delta * (e > 0 ? 1.0 : -1.0);
    }
    ++count;
  }
  require(count > 0, "masked_column_huber over an empty region");
  const double inv = 1.0 / static_cast<double>(count);
  Matrix out(1, 1);
  out(0, 0) = total * inv;
  return pred.tape->push(std::move(out), {pred}, [pred, col, inv, dloss = std::move(dloss)](Tape& t, const Matrix& g) {
    t.accum(pred).col(col) += (inv * g(0, 0)) * dloss;
  });
}

Var weighted_sum(std::span<const Var> terms, std::span<const double> coeffs) {
  require(!terms.empty() && terms.size() == coeffs.size(), "weighted_sum needs one coefficient per term");
  Matrix out = Matrix::Zero(1, 1);
  for (std::size_t i = 0; i < terms.size(); ++i) {
    require(terms[i].value().size() == 1, "weighted_sum terms must be scalars");
    out(0, 0) += coeffs[i] * terms[i].scalar();
  }
  std::vector<Var> inputs(terms.begin(), terms.end());
  std::vector<double> c(coeffs.begin(), coeffs.end());
  return terms[0].tape->push(std::move(out), terms, [inputs, c](Tape& t, const Matrix& g) {
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (t.needs_grad(inputs[i])) t.accum(inputs[i])(0, 0) += c[i] * g(0, 0);
    }
  });
}

// ---------------------------------------------------------------------------
// Convolution

namespace {

// Images are stacked along rows: image b occupies rows [b*h*w, (b+1)*h*w).
Matrix im2col3x3(const Matrix& x, int h, int w) {
  const auto c_in = x.cols();
  const Eigen::Index hw = static_cast<Eigen::Index>(h) * w;
  Matrix cols = Matrix::Zero(x.rows(), 9 * c_in);
  for (Eigen::Index base = 0; base < x.rows(); base += hw) {
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const Eigen::Index block = (ky * 3 + kx) * c_in;
        for (int i = 0; i < h; ++i) {
          const int si = i + ky - 1;
          if (si < 0 || si >= h) continue;
          for (int j = 0; j < w; ++j) {
            const int sj = j + kx - 1;
            if (sj < 0 || sj >= w) continue;
            cols.row(base + i * w + j).segment(block, c_in) = x.row(base + si * w + sj);
          }
        }
      }
    }
  }
  return cols;
}

void col2im3x3_add(const Matrix& cols, int h, int w, Matrix& x_grad) {
  const auto c_in = x_grad.cols();
  const Eigen::Index hw = static_cast<Eigen::Index>(h) * w;
  for (Eigen::Index base = 0; base < x_grad.rows(); base += hw) {
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const Eigen::Index block = (ky * 3 + kx) * c_in;
        for (int i = 0; i < h; ++i) {
          const int si = i + ky - 1;
          if (si < 0 || si >= h) continue;
          for (int j = 0; j < w; ++j) {
            const int sj = j + kx - 1;
            if (sj < 0 || sj >= w) continue;
            x_grad.row(base + si * w + sj) += cols.row(base + i * w + j).segment(block, c_in);
          }
        }
      }
    }
  }
}

}  // namespace

Var conv3x3(Var x, Var weight, Var bias, int h, int w) {
  require(h > 0 && w > 0 && x.rows() % (static_cast<Eigen::Index>(h) * w) == 0,
          "conv3x3 input rows must be a multiple of h * w");
  require(weight.cols() == 9 * x.cols(), "conv3x3 weight must be [c_out, 9 * c_in]");
  require(bias.rows() == 1 && bias.cols() == weight.rows(), "conv3x3 bias must be 1 x c_out");
  Matrix cols = im2col3x3(x.value(), h, w);
  Matrix out = cols * weight.value().transpose();
  out.rowwise() += bias.value().row(0);
  return x.tape->push(std::move(out), {x, weight, bias},
                      [x, weight, bias, h, w, cols = std::move(cols)](Tape& t, const Matrix& g) {
                        if (t.needs_grad(weight)) t.accum(weight).noalias() += g.transpose() * cols;
                        if (t.needs_grad(bias)) t.accum(bias) += g.colwise().sum();
                        if (t.needs_grad(x)) {
                          const Matrix dcols = g * t.value(weight);
                          col2im3x3_add(dcols, h, w, t.accum(x));
                        }
                      });
}

// ---------------------------------------------------------------------------
// Koopman propagation

Var block_expm_apply(Var x, Var raw_gamma, Var omega, std::span<const double> taus) {
  const Matrix& xv = x.value();
  const auto modes = raw_gamma.rows();
  require(raw_gamma.cols() == 1 && omega.rows() == modes && omega.cols() == 1, "block generator params must be m x 1");
  require(xv.rows() == 2 * modes, "latent dimension must equal 2 * modes");
  const auto k_count = static_cast<Eigen::Index>(taus.size());
  require(k_count > 0, "block_expm_apply needs at least one time");
  require(xv.cols() == 1 || xv.cols() == k_count, "x must have one column or one per time");
  for (double tau : taus) require(tau >= 0.0, "evolution time must be non-negative");

  const bool broadcast = xv.cols() == 1 && k_count > 1;
  std::vector<double> tau_vec(taus.begin(), taus.end());
  Matrix out(xv.rows(), k_count);
  for (Eigen::Index k = 0; k < k_count; ++k) {
    const Eigen::Index xc = broadcast ? 0 : k;
    const double tau = tau_vec[static_cast<std::size_t>(k)];
    for (Eigen::Index i = 0; i < modes; ++i) {
      const double gamma = softplus(raw_gamma.value()(i, 0));
      const double decay = std::exp(-gamma * tau);
      const double c = std::cos(omega.value()(i, 0) * tau);
      const double s = std::sin(omega.value()(i, 0) * tau);
      const double a = xv(2 * i, xc);
      const double b = xv(2 * i + 1, xc);
      out(2 * i, k) = decay * (c * a - s * b);
      out(2 * i + 1, k) = decay * (s * a + c * b);
    }
  }
  Matrix y = out;
  return x.tape->push(
      std::move(out), {x, raw_gamma, omega},
      [x, raw_gamma, omega, broadcast, tau_vec = std::move(tau_vec), y = std::move(y)](Tape& t, const Matrix& g) {
        const Matrix& xv = t.value(x);
        const auto modes = t.value(raw_gamma).rows();
        const bool gx = t.needs_grad(x), gg = t.needs_grad(raw_gamma), go = t.needs_grad(omega);
        Matrix* dx = gx ? &t.accum(x) : nullptr;
        Matrix* dg = gg ? &t.accum(raw_gamma) : nullptr;
        Matrix* dw = go ? &t.accum(omega) : nullptr;
        for (Eigen::Index k = 0; k < y.cols(); ++k) {
          const Eigen::Index xc = broadcast ? 0 : k;
          const double tau = tau_vec[static_cast<std::size_t>(k)];
          for (Eigen::Index i = 0; i < modes; ++i) {
            const double raw = t.value(raw_gamma)(i, 0);
            const double gamma = softplus(raw);
            const double decay = std::exp(-gamma * tau);
            const double c = std::cos(t.value(omega)(i, 0) * tau);
            const double s = std::sin(t.value(omega)(i, 0) * tau);
            const double g1 = g(2 * i, k), g2 = g(2 * i + 1, k);
            const double y1 = y(2 * i, k), y2 = y(2 * i + 1, k);
            if (dx != nullptr) {
              (*dx)(2 * i, xc) += decay * (c * g1 + s * g2);
              (*dx)(2 * i + 1, xc) += decay * (-s * g1 + c * g2);
            }
            if (dg != nullptr) (*dg)(i, 0) += -tau * (g1 * y1 + g2 * y2) * sigmoid(raw);
            if (dw != nullptr) (*dw)(i, 0) += tau * (-g1 * y2 + g2 * y1);
          }
          (void)xv;
        }
      });
}

Var dense_expm_apply(Var x, Var lower, Var skew_source, std::span<const double> taus) {
  const Matrix& xv = x.value();
  const auto d = lower.rows();
  require(lower.cols() == d && skew_source.rows() == d && skew_source.cols() == d, "dense factors must be d x d");
  require(xv.rows() == d, "latent dimension must equal generator dimension");
  const auto k_count = static_cast<Eigen::Index>(taus.size());
  require(k_count > 0, "dense_expm_apply needs at least one time");
  require(xv.cols() == 1 || xv.cols() == k_count, "x must have one column or one per time");
  for (double tau : taus) require(tau >= 0.0, "evolution time must be non-negative");

  const Matrix l = lower.value().triangularView<Eigen::Lower>();
  const Matrix a = -l * l.transpose() + 0.5 * (skew_source.value() - skew_source.value().transpose());
  const bool broadcast = xv.cols() == 1 && k_count > 1;

  std::map<double, Matrix> transitions;
  for (double tau : taus) {
    if (!transitions.contains(tau)) transitions.emplace(tau, expm(tau * a));
  }
  Matrix out(d, k_count);
  for (Eigen::Index k = 0; k < k_count; ++k) {
    out.col(k) = transitions.at(taus[static_cast<std::size_t>(k)]) * xv.col(broadcast ? 0 : k);
  }
  std::vector<double> tau_vec(taus.begin(), taus.end());
  return x.tape->push(
      std::move(out), {x, lower, skew_source},
      [x, lower, skew_source, broadcast, a, l, tau_vec = std::move(tau_vec),
       transitions = std::move(transitions)](Tape& t, const Matrix& g) {
        const Matrix& xv = t.value(x);
        const auto d = a.rows();
        std::map<double, Matrix> cotangent;  // d(loss)/d(exp(tau A)) grouped by tau
        for (std::size_t k = 0; k < tau_vec.size(); ++k) {
          const auto kk = static_cast<Eigen::Index>(k);
          const Eigen::Index xc = broadcast ? 0 : kk;
          const double tau = tau_vec[k];
          if (t.needs_grad(x)) t.accum(x).col(xc) += transitions.at(tau).transpose() * g.col(kk);
          auto [it, inserted] = cotangent.try_emplace(tau, Matrix::Zero(d, d));
          it->second.noalias() += g.col(kk) * xv.col(xc).transpose();
        }
        if (!t.needs_grad(lower) && !t.needs_grad(skew_source)) return;
        Matrix grad_a = Matrix::Zero(d, d);
        for (const auto& [tau, ce] : cotangent) {
          if (tau == 0.0) continue;
          grad_a += tau * expm_frechet(tau * a.transpose(), ce);
        }
        if (t.needs_grad(lower)) {
          Matrix gl = -(grad_a + grad_a.transpose()) * l;
          t.accum(lower) += Matrix(gl.triangularView<Eigen::Lower>());
        }
        if (t.needs_grad(skew_source)) t.accum(skew_source) += 0.5 * (grad_a - grad_a.transpose());
      });
}

}  // namespace vitk::ad
