#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "capforge/error.hpp"
#include "capforge/matrix.hpp"
#include "capforge/nn.hpp"
#include "capforge/optimizer.hpp"

namespace capforge {

// Handle into a Tape.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
};

// Reverse-mode tape over whole matrices. Every operation records a closure
// with its hand-derived backward rule; node creation order is a topological
// order, so backward() just walks the nodes in reverse. One tape per
// forward/backward pass.
class Tape {
 public:
  Var constant(Matrix m) { return push(std::move(m), nullptr); }

  // Leaf for a trainable parameter. Cached so each parameter appears once
  // per tape; backward() accumulates the node gradient into the parameter.
  Var param(Parameter& p) {
    auto it = param_vars_.find(&p);
    if (it != param_vars_.end()) return it->second;
    Var v = push(p.value, nullptr);
    param_vars_.emplace(&p, v);
    return v;
  }

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  Matrix& grad(Var v) { return nodes_[v.id].grad; }
  std::size_t size() const { return nodes_.size(); }

  // y = x.W + b, b broadcast over rows. b must be 1 x d_out.
  Var linear(Var x, Var w, Var b) {
    const Matrix& xm = value(x);
    const Matrix& wm = value(w);
    const Matrix& bm = value(b);
    if (xm.cols() != wm.rows() || bm.rows() != 1 || bm.cols() != wm.cols()) {
      throw DimensionError("linear: input " + xm.shape_str() + ", weight " +
                           wm.shape_str() + ", bias " + bm.shape_str());
    }
    Matrix y = matmul(xm, wm);
    for (std::size_t i = 0; i < y.rows(); ++i)
      for (std::size_t j = 0; j < y.cols(); ++j) y(i, j) += bm(0, j);
    return push(std::move(y), [x, w, b](Tape& t, std::size_t self) {
      const Matrix& gy = t.nodes_[self].grad;
      const Matrix& xv = t.value(x);
      const Matrix& wv = t.value(w);
      matmul_a_bt_accum(gy, wv, t.grad(x));   // gx += gy.W^T
      matmul_at_b_accum(xv, gy, t.grad(w));   // gW += x^T.gy
      Matrix& gb = t.grad(b);
      for (std::size_t i = 0; i < gy.rows(); ++i)
        for (std::size_t j = 0; j < gy.cols(); ++j) gb(0, j) += gy(i, j);
    });
  }

  Var relu(Var x) {
    Matrix y = value(x);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::max(0.0, y[i]);
    return push(std::move(y), [x](Tape& t, std::size_t self) {
      const Matrix& gy = t.nodes_[self].grad;
      const Matrix& xv = t.value(x);
      Matrix& gx = t.grad(x);
      for (std::size_t i = 0; i < gy.size(); ++i)
        if (xv[i] > 0.0) gx[i] += gy[i];
    });
  }

  Var add(Var a, Var b) {
    const Matrix& am = value(a);
    const Matrix& bm = value(b);
    if (!am.same_shape(bm)) {
      throw DimensionError("add: " + am.shape_str() + " vs " + bm.shape_str());
    }
    Matrix y = am;
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += bm[i];
    return push(std::move(y), [a, b](Tape& t, std::size_t self) {
      const Matrix& gy = t.nodes_[self].grad;
      Matrix& ga = t.grad(a);
      Matrix& gb = t.grad(b);
      for (std::size_t i = 0; i < gy.size(); ++i) {
        ga[i] += gy[i];
        gb[i] += gy[i];
      }
    });
  }

  // Row-wise max-subtracted softmax.
  // gx_i = y_i * (gy_i - sum_j gy_ij * y_ij)
  Var softmax_rows(Var x) {
    const Matrix& xm = value(x);
    Matrix y(xm.rows(), xm.cols());
    for (std::size_t i = 0; i < xm.rows(); ++i) {
      double mx = xm(i, 0);
      for (std::size_t j = 0; j < xm.cols(); ++j) {
        if (!std::isfinite(xm(i, j))) {
          throw NumericError("softmax_rows: non-finite logit");
        }
        mx = std::max(mx, xm(i, j));
      }
      double sum = 0.0;
      for (std::size_t j = 0; j < xm.cols(); ++j) {
        y(i, j) = std::exp(xm(i, j) - mx);
        sum += y(i, j);
      }
      for (std::size_t j = 0; j < xm.cols(); ++j) y(i, j) /= sum;
    }
    return push(std::move(y), [x](Tape& t, std::size_t self) {
      const Matrix& gy = t.nodes_[self].grad;
      const Matrix& yv = t.nodes_[self].value;
      Matrix& gx = t.grad(x);
      for (std::size_t i = 0; i < gy.rows(); ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < gy.cols(); ++j) dot += gy(i, j) * yv(i, j);
        for (std::size_t j = 0; j < gy.cols(); ++j)
          gx(i, j) += yv(i, j) * (gy(i, j) - dot);
      }
    });
  }

  // Select rows by index; rows may repeat.
  Var gather_rows(Var x, std::vector<std::size_t> rows) {
    const Matrix& xm = value(x);
    Matrix y(rows.size(), xm.cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < xm.cols(); ++j) y(i, j) = xm(rows[i], j);
    return push(std::move(y),
                [x, rows = std::move(rows)](Tape& t, std::size_t self) {
                  const Matrix& gy = t.nodes_[self].grad;
                  Matrix& gx = t.grad(x);
                  for (std::size_t i = 0; i < rows.size(); ++i)
                    for (std::size_t j = 0; j < gy.cols(); ++j)
                      gx(rows[i], j) += gy(i, j);
                });
  }

  // y has out_rows rows; y[rows[i]] += x[i]. Inverse of gather_rows.
  Var scatter_rows(Var x, std::vector<std::size_t> rows, std::size_t out_rows) {
    const Matrix& xm = value(x);
    if (rows.size() != xm.rows()) {
      throw InternalError("scatter_rows: index map size " +
                          std::to_string(rows.size()) + " vs input rows " +
                          std::to_string(xm.rows()));
    }
    Matrix y(out_rows, xm.cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < xm.cols(); ++j) y(rows[i], j) += xm(i, j);
    return push(std::move(y),
                [x, rows = std::move(rows)](Tape& t, std::size_t self) {
                  const Matrix& gy = t.nodes_[self].grad;
                  Matrix& gx = t.grad(x);
                  for (std::size_t i = 0; i < rows.size(); ++i)
                    for (std::size_t j = 0; j < gx.cols(); ++j)
                      gx(i, j) += gy(rows[i], j);
                });
  }

  // y[i][j] = x[i][idx[i][j]]; idx is one index list per row.
  Var gather_cols_per_row(Var x, std::vector<std::vector<std::size_t>> idx) {
    const Matrix& xm = value(x);
    if (idx.size() != xm.rows()) {
      throw InternalError("gather_cols_per_row: index rows " +
                          std::to_string(idx.size()) + " vs input rows " +
                          std::to_string(xm.rows()));
    }
    const std::size_t k = idx.empty() ? 0 : idx[0].size();
    Matrix y(xm.rows(), k);
    for (std::size_t i = 0; i < xm.rows(); ++i) {
      if (idx[i].size() != k) {
        throw InternalError("gather_cols_per_row: ragged index map");
      }
      for (std::size_t j = 0; j < k; ++j) y(i, j) = xm(i, idx[i][j]);
    }
    return push(std::move(y),
                [x, idx = std::move(idx)](Tape& t, std::size_t self) {
                  const Matrix& gy = t.nodes_[self].grad;
                  Matrix& gx = t.grad(x);
                  for (std::size_t i = 0; i < gy.rows(); ++i)
                    for (std::size_t j = 0; j < gy.cols(); ++j)
                      gx(i, idx[i][j]) += gy(i, j);
                });
  }

  // y = x / rowsum(x).
  // gx_ij = (gy_ij - sum_k gy_ik y_ik) / s_i
  Var normalize_rows(Var x) {
    const Matrix& xm = value(x);
    Matrix y(xm.rows(), xm.cols());
    std::vector<double> sums(xm.rows());
    for (std::size_t i = 0; i < xm.rows(); ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < xm.cols(); ++j) s += xm(i, j);
      sums[i] = s;
      for (std::size_t j = 0; j < xm.cols(); ++j) y(i, j) = xm(i, j) / s;
    }
    return push(std::move(y),
                [x, sums = std::move(sums)](Tape& t, std::size_t self) {
                  const Matrix& gy = t.nodes_[self].grad;
                  const Matrix& yv = t.nodes_[self].value;
                  Matrix& gx = t.grad(x);
                  for (std::size_t i = 0; i < gy.rows(); ++i) {
                    double dot = 0.0;
                    for (std::size_t j = 0; j < gy.cols(); ++j)
                      dot += gy(i, j) * yv(i, j);
                    for (std::size_t j = 0; j < gy.cols(); ++j)
                      gx(i, j) += (gy(i, j) - dot) / sums[i];
                  }
                });
  }

  // Pick single elements into a column vector: y[i][0] = x[at[i].first][at[i].second].
  Var gather_elems(Var x, std::vector<std::pair<std::size_t, std::size_t>> at) {
    const Matrix& xm = value(x);
    Matrix y(at.size(), 1);
    for (std::size_t i = 0; i < at.size(); ++i) y(i, 0) = xm(at[i].first, at[i].second);
    return push(std::move(y),
                [x, at = std::move(at)](Tape& t, std::size_t self) {
                  const Matrix& gy = t.nodes_[self].grad;
                  Matrix& gx = t.grad(x);
                  for (std::size_t i = 0; i < at.size(); ++i)
                    gx(at[i].first, at[i].second) += gy(i, 0);
                });
  }

  // y[i][j] = x[i][j] * s[i][0], s is a column vector.
  Var scale_rows(Var x, Var s) {
    const Matrix& xm = value(x);
    const Matrix& sm = value(s);
    if (sm.rows() != xm.rows() || sm.cols() != 1) {
      throw DimensionError("scale_rows: scale " + sm.shape_str() + " for input " +
                           xm.shape_str());
    }
    Matrix y = xm;
    for (std::size_t i = 0; i < y.rows(); ++i)
      for (std::size_t j = 0; j < y.cols(); ++j) y(i, j) *= sm(i, 0);
    return push(std::move(y), [x, s](Tape& t, std::size_t self) {
      const Matrix& gy = t.nodes_[self].grad;
      const Matrix& xv = t.value(x);
      const Matrix& sv = t.value(s);
      Matrix& gx = t.grad(x);
      Matrix& gs = t.grad(s);
      for (std::size_t i = 0; i < gy.rows(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < gy.cols(); ++j) {
          gx(i, j) += gy(i, j) * sv(i, 0);
          acc += gy(i, j) * xv(i, j);
        }
        gs(i, 0) += acc;
      }
    });
  }

  // S x w  ->  (S*N) x p: sample s contributes N consecutive rows, row
  // s*N + r holding window elements [r*p, (r+1)*p).
  Var patchify_rows(Var x, std::size_t p) {
    const Matrix& xm = value(x);
    const std::size_t w = xm.cols();
    check_patch(w, p);
    const std::size_t n = w / p;
    Matrix y(xm.rows() * n, p);
    for (std::size_t s = 0; s < xm.rows(); ++s)
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < p; ++j) y(s * n + r, j) = xm(s, r * p + j);
    return push(std::move(y), [x, p, n](Tape& t, std::size_t self) {
      const Matrix& gy = t.nodes_[self].grad;
      Matrix& gx = t.grad(x);
      for (std::size_t s = 0; s < gx.rows(); ++s)
        for (std::size_t r = 0; r < n; ++r)
          for (std::size_t j = 0; j < p; ++j) gx(s, r * p + j) += gy(s * n + r, j);
    });
  }

  // Inverse of patchify_rows; `samples` is the original row count.
  Var unpatchify_rows(Var x, std::size_t samples) {
    const Matrix& xm = value(x);
    if (samples == 0 || xm.rows() % samples != 0) {
      throw InternalError("unpatchify_rows: rows " + std::to_string(xm.rows()) +
                          " not divisible by samples " + std::to_string(samples));
    }
    const std::size_t n = xm.rows() / samples;
    const std::size_t p = xm.cols();
    Matrix y(samples, n * p);
    for (std::size_t s = 0; s < samples; ++s)
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < p; ++j) y(s, r * p + j) = xm(s * n + r, j);
    return push(std::move(y), [x, samples, n, p](Tape& t, std::size_t self) {
      const Matrix& gy = t.nodes_[self].grad;
      Matrix& gx = t.grad(x);
      for (std::size_t s = 0; s < samples; ++s)
        for (std::size_t r = 0; r < n; ++r)
          for (std::size_t j = 0; j < p; ++j) gx(s * n + r, j) += gy(s, r * p + j);
    });
  }

  // S x w  ->  (S*p) x N: the per-sample patch grid transposed, so row
  // s*p + i holds within-patch position i across all N patches.
  Var patchify_cols(Var x, std::size_t p) {
    const Matrix& xm = value(x);
    const std::size_t w = xm.cols();
    check_patch(w, p);
    const std::size_t n = w / p;
    Matrix y(xm.rows() * p, n);
    for (std::size_t s = 0; s < xm.rows(); ++s)
      for (std::size_t i = 0; i < p; ++i)
        for (std::size_t r = 0; r < n; ++r) y(s * p + i, r) = xm(s, r * p + i);
    return push(std::move(y), [x, p, n](Tape& t, std::size_t self) {
      const Matrix& gy = t.nodes_[self].grad;
      Matrix& gx = t.grad(x);
      for (std::size_t s = 0; s < gx.rows(); ++s)
        for (std::size_t i = 0; i < p; ++i)
          for (std::size_t r = 0; r < n; ++r) gx(s, r * p + i) += gy(s * p + i, r);
    });
  }

  // Inverse of patchify_cols.
  Var unpatchify_cols(Var x, std::size_t samples) {
    const Matrix& xm = value(x);
    if (samples == 0 || xm.rows() % samples != 0) {
      throw InternalError("unpatchify_cols: rows " + std::to_string(xm.rows()) +
                          " not divisible by samples " + std::to_string(samples));
    }
    const std::size_t p = xm.rows() / samples;
    const std::size_t n = xm.cols();
    Matrix y(samples, n * p);
    for (std::size_t s = 0; s < samples; ++s)
      for (std::size_t i = 0; i < p; ++i)
        for (std::size_t r = 0; r < n; ++r) y(s, r * p + i) = xm(s * p + i, r);
    return push(std::move(y), [x, samples, p, n](Tape& t, std::size_t self) {
      const Matrix& gy = t.nodes_[self].grad;
      Matrix& gx = t.grad(x);
      for (std::size_t s = 0; s < samples; ++s)
        for (std::size_t i = 0; i < p; ++i)
          for (std::size_t r = 0; r < n; ++r) gx(s * p + i, r) += gy(s, r * p + i);
    });
  }

  // Per-row constant affine map y_i = x_i * scale[i] + shift[i]; the
  // coefficients are data, not parameters, so only x receives gradient.
  Var affine_rows_const(Var x, std::vector<double> scale, std::vector<double> shift) {
    const Matrix& xm = value(x);
    if (scale.size() != xm.rows() || shift.size() != xm.rows()) {
      throw DimensionError("affine_rows_const: coefficient length vs " +
                           xm.shape_str());
    }
    Matrix y = xm;
    for (std::size_t i = 0; i < y.rows(); ++i)
      for (std::size_t j = 0; j < y.cols(); ++j) y(i, j) = y(i, j) * scale[i] + shift[i];
    return push(std::move(y),
                [x, scale = std::move(scale)](Tape& t, std::size_t self) {
                  const Matrix& gy = t.nodes_[self].grad;
                  Matrix& gx = t.grad(x);
                  for (std::size_t i = 0; i < gy.rows(); ++i)
                    for (std::size_t j = 0; j < gy.cols(); ++j)
                      gx(i, j) += gy(i, j) * scale[i];
                });
  }

  // Mean absolute error against a constant target, as a 1x1 node.
  // d/dpred = sign(pred - target) / count; sign(0) taken as 0.
  Var mae_loss(Var pred, const Matrix& target) {
    const Matrix& pm = value(pred);
    if (!pm.same_shape(target)) {
      throw DimensionError("mae_loss: prediction " + pm.shape_str() +
                           " vs target " + target.shape_str());
    }
    if (pm.size() == 0) {
      throw DimensionError("mae_loss: empty prediction");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < pm.size(); ++i) s += std::abs(pm[i] - target[i]);
    Matrix y(1, 1);
    y(0, 0) = s / static_cast<double>(pm.size());
    return push(std::move(y), [pred, target](Tape& t, std::size_t self) {
      const double g = t.nodes_[self].grad(0, 0);
      const Matrix& pv = t.value(pred);
      Matrix& gp = t.grad(pred);
      const double inv = 1.0 / static_cast<double>(pv.size());
      for (std::size_t i = 0; i < pv.size(); ++i) {
        const double d = pv[i] - target[i];
        if (d > 0.0)
          gp[i] += g * inv;
        else if (d < 0.0)
          gp[i] -= g * inv;
      }
    });
  }

  // Seeds d(root)/d(root) = 1 and propagates to all leaves. Parameter
  // gradients are accumulated into their Parameter objects.
  void backward(Var root) {
    Matrix& g = nodes_[root.id].grad;
    if (g.rows() != 1 || g.cols() != 1) {
      throw DimensionError("backward: root must be 1x1, got " +
                           nodes_[root.id].value.shape_str());
    }
    g(0, 0) = 1.0;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
      if (nodes_[i].backward) nodes_[i].backward(*this, i);
    }
    for (auto& [p, v] : param_vars_) {
      const Matrix& pg = nodes_[v.id].grad;
      for (std::size_t i = 0; i < pg.size(); ++i) p->gradient[i] += pg[i];
      p->touched = true;
    }
  }

 private:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  struct Node {
    Matrix value;
    Matrix grad;
    BackwardFn backward;
  };

  static void check_patch(std::size_t w, std::size_t p) {
    if (p == 0 || w % p != 0) {
      throw ConfigError("patch size " + std::to_string(p) +
                        " does not divide sequence length " + std::to_string(w));
    }
  }

  Var push(Matrix value, BackwardFn fn) {
    Node n;
    n.grad = Matrix(value.rows(), value.cols());
    n.value = std::move(value);
    n.backward = std::move(fn);
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
  }

  std::vector<Node> nodes_;
  std::unordered_map<Parameter*, Var> param_vars_;
};

}  // namespace capforge
