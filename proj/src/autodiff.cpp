#include "enzygen/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "enzygen/errors.hpp"

namespace enzygen {

const Tensor& Var::value() const { return tape->value(id); }

double Var::item() const {
  const Tensor& v = value();
  if (v.size() != 1) throw ContractError("item() on non-scalar of shape " + shape_string(v.shape()));
  return v[0];
}

Var Tape::constant(Tensor value) {
  Node node;
  node.own = std::move(value);
  nodes_.push_back(std::move(node));
  return {this, nodes_.size() - 1};
}

Var Tape::leaf(Tensor& tensor) {
  Node node;
  node.external = &tensor;
  if (tensor.requires_grad()) {
    node.leaf = &tensor;
    node.needs_grad = true;
  }
  nodes_.push_back(std::move(node));
  return {this, nodes_.size() - 1};
}

Var Tape::record(const char* op, Tensor value, std::vector<std::size_t> inputs, BackwardFn backward) {
  if (!value.all_finite()) throw NumericError(std::string(op) + " produced a non-finite value");
  Node node;
  node.own = std::move(value);
  node.needs_grad = std::any_of(inputs.begin(), inputs.end(), [&](std::size_t i) { return nodes_[i].needs_grad; });
  if (node.needs_grad) node.backward = std::move(backward);
  node.inputs = std::move(inputs);
  nodes_.push_back(std::move(node));
  return {this, nodes_.size() - 1};
}

const Tensor& Tape::value(std::size_t id) const {
  const Node& n = nodes_.at(id);
  return n.external ? *n.external : n.own;
}

std::vector<double>& Tape::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad.assign(value(id).size(), 0.0);
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw ContractError("loss belongs to a different tape");
  if (value(loss.id).size() != 1) {
    throw ContractError("backward() needs a scalar loss, got shape " + shape_string(value(loss.id).shape()));
  }
  for (auto& n : nodes_) n.grad.clear();
  grad_buffer(loss.id)[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.empty() || !n.needs_grad) continue;
    if (n.backward) n.backward(*this, i);
    if (n.leaf) {
      auto& g = n.leaf->grad();
      for (std::size_t k = 0; k < g.size(); ++k) g[k] += n.grad[k];
    }
  }
}

namespace {

Tape& same_tape(Var a, Var b) {
  if (a.tape == nullptr || a.tape != b.tape) throw ContractError("operands live on different tapes");
  return *a.tape;
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

Shape matrix_shape(std::size_t r, std::size_t c) { return {r, c}; }

// Elementwise unary op with a derivative computed from (x, y).
template <typename F, typename D>
Var unary(const char* op, Var a, F f, D dfdx) {
  Tape& t = *a.tape;
  const Tensor& x = t.value(a);
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  const std::size_t ia = a.id;
  return t.record(op, std::move(y), {ia}, [ia, dfdx](Tape& tp, std::size_t self) {
    if (!tp.needs_grad(ia)) return;
    const auto& g = tp.grad(self);
    const auto& xv = tp.value(ia);
    const auto& yv = tp.value(self);
    auto& ga = tp.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * dfdx(xv[i], yv[i]);
  });
}

double sigmoid_scalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Tensor& A = t.value(a);
  const Tensor& B = t.value(b);
  const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
  if (B.rows() != k) {
    throw DimensionError("matmul: inner dimensions differ, " + shape_string(A.shape()) + " · " +
                         shape_string(B.shape()));
  }
  Tensor C(matrix_shape(m, n));
  const double* pa = A.data().data();
  const double* pb = B.data().data();
  double* pc = C.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[i * k + p];
      if (av == 0.0) continue;
      const double* brow = pb + p * n;
      double* crow = pc + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  const std::size_t ia = a.id, ib = b.id;
  return t.record("matmul", std::move(C), {ia, ib}, [ia, ib, m, k, n](Tape& tp, std::size_t self) {
    const double* g = tp.grad(self).data();
    if (tp.needs_grad(ia)) {
      const double* pb = tp.value(ib).data().data();
      double* ga = tp.grad_buffer(ia).data();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          const double* grow = g + i * n;
          const double* brow = pb + p * n;
          for (std::size_t j = 0; j < n; ++j) s += grow[j] * brow[j];
          ga[i * k + p] += s;
        }
      }
    }
    if (tp.needs_grad(ib)) {
      const double* pa = tp.value(ia).data().data();
      double* gb = tp.grad_buffer(ib).data();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double av = pa[i * k + p];
          if (av == 0.0) continue;
          const double* grow = g + i * n;
          double* gbrow = gb + p * n;
          for (std::size_t j = 0; j < n; ++j) gbrow[j] += av * grow[j];
        }
      }
    }
  });
}

Var matmul_nt(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Tensor& A = t.value(a);
  const Tensor& B = t.value(b);
  const std::size_t m = A.rows(), k = A.cols(), n = B.rows();
  if (B.cols() != k) {
    throw DimensionError("matmul_nt: inner dimensions differ, " + shape_string(A.shape()) + " · " +
                         shape_string(B.shape()) + "ᵀ");
  }
  Tensor C(matrix_shape(m, n));
  const double* pa = A.data().data();
  const double* pb = B.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += pa[i * k + p] * pb[j * k + p];
      C[i * n + j] = s;
    }
  }
  const std::size_t ia = a.id, ib = b.id;
  return t.record("matmul_nt", std::move(C), {ia, ib}, [ia, ib, m, k, n](Tape& tp, std::size_t self) {
    const double* g = tp.grad(self).data();
    if (tp.needs_grad(ia)) {
      const double* pb = tp.value(ib).data().data();
      double* ga = tp.grad_buffer(ia).data();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const double gv = g[i * n + j];
          if (gv == 0.0) continue;
          for (std::size_t p = 0; p < k; ++p) ga[i * k + p] += gv * pb[j * k + p];
        }
    }
    if (tp.needs_grad(ib)) {
      const double* pa = tp.value(ia).data().data();
      double* gb = tp.grad_buffer(ib).data();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const double gv = g[i * n + j];
          if (gv == 0.0) continue;
          for (std::size_t p = 0; p < k; ++p) gb[j * k + p] += gv * pa[i * k + p];
        }
    }
  });
}

Var transpose(Var a) {
  Tape& t = *a.tape;
  const Tensor& A = t.value(a);
  const std::size_t m = A.rows(), n = A.cols();
  Tensor B(matrix_shape(n, m));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) B[j * m + i] = A[i * n + j];
  const std::size_t ia = a.id;
  return t.record("transpose", std::move(B), {ia}, [ia, m, n](Tape& tp, std::size_t self) {
    if (!tp.needs_grad(ia)) return;
    const auto& g = tp.grad(self);
    auto& ga = tp.grad_buffer(ia);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += g[j * m + i];
  });
}

namespace {

template <typename F, typename DA, typename DB>
Var binary(const char* op, Var a, Var b, F f, DA dfda, DB dfdb) {
  Tape& t = same_tape(a, b);
  const Tensor& A = t.value(a);
  const Tensor& B = t.value(b);
  require_same_shape(op, A, B);
  Tensor C(A.shape());
  for (std::size_t i = 0; i < A.size(); ++i) C[i] = f(A[i], B[i]);
  const std::size_t ia = a.id, ib = b.id;
  return t.record(op, std::move(C), {ia, ib}, [ia, ib, dfda, dfdb](Tape& tp, std::size_t self) {
    const auto& g = tp.grad(self);
    const auto& av = tp.value(ia);
    const auto& bv = tp.value(ib);
    if (tp.needs_grad(ia)) {
      auto& ga = tp.grad_buffer(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * dfda(av[i], bv[i]);
    }
    if (tp.needs_grad(ib)) {
      auto& gb = tp.grad_buffer(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * dfdb(av[i], bv[i]);
    }
  });
}

}  // namespace

Var add(Var a, Var b) {
  return binary("add", a, b, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
                [](double, double) { return 1.0; });
}

Var sub(Var a, Var b) {
  return binary("sub", a, b, [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
                [](double, double) { return -1.0; });
}

Var mul(Var a, Var b) {
  return binary("mul", a, b, [](double x, double y) { return x * y; }, [](double, double y) { return y; },
                [](double x, double) { return x; });
}

Var div(Var a, Var b) {
  return binary(
      "div", a, b, [](double x, double y) { return x / y; }, [](double, double y) { return 1.0 / y; },
      [](double x, double y) { return -x / (y * y); });
}

Var scale(Var a, double factor) {
  return unary("scale", a, [factor](double x) { return factor * x; }, [factor](double, double) { return factor; });
}

Var add_scalar(Var a, double offset) {
  return unary("add_scalar", a, [offset](double x) { return x + offset; }, [](double, double) { return 1.0; });
}

Var add_row(Var a, Var row) {
  Tape& t = same_tape(a, row);
  const Tensor& A = t.value(a);
  const Tensor& R = t.value(row);
  const std::size_t m = A.rows(), n = A.cols();
  if (R.size() != n) {
    throw DimensionError("add_row: row " + shape_string(R.shape()) + " does not broadcast over " +
                         shape_string(A.shape()));
  }
  Tensor C(A.shape());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) C[i * n + j] = A[i * n + j] + R[j];
  const std::size_t ia = a.id, ir = row.id;
  return t.record("add_row", std::move(C), {ia, ir}, [ia, ir, m, n](Tape& tp, std::size_t self) {
    const auto& g = tp.grad(self);
    if (tp.needs_grad(ia)) {
      auto& ga = tp.grad_buffer(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (tp.needs_grad(ir)) {
      auto& gr = tp.grad_buffer(ir);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gr[j] += g[i * n + j];
    }
  });
}

Var mul_row(Var a, Var row) {
  Tape& t = same_tape(a, row);
  const Tensor& A = t.value(a);
  const Tensor& R = t.value(row);
  const std::size_t m = A.rows(), n = A.cols();
  if (R.size() != n) {
    throw DimensionError("mul_row: row " + shape_string(R.shape()) + " does not broadcast over " +
                         shape_string(A.shape()));
  }
  Tensor C(A.shape());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) C[i * n + j] = A[i * n + j] * R[j];
  const std::size_t ia = a.id, ir = row.id;
  return t.record("mul_row", std::move(C), {ia, ir}, [ia, ir, m, n](Tape& tp, std::size_t self) {
    const auto& g = tp.grad(self);
    const auto& av = tp.value(ia);
    const auto& rv = tp.value(ir);
    if (tp.needs_grad(ia)) {
      auto& ga = tp.grad_buffer(ia);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += g[i * n + j] * rv[j];
    }
    if (tp.needs_grad(ir)) {
      auto& gr = tp.grad_buffer(ir);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gr[j] += g[i * n + j] * av[i * n + j];
    }
  });
}

Var mul_col(Var a, Var col) {
  Tape& t = same_tape(a, col);
  const Tensor& A = t.value(a);
  const Tensor& Cv = t.value(col);
  const std::size_t m = A.rows(), n = A.cols();
  if (Cv.size() != m) {
    throw DimensionError("mul_col: column " + shape_string(Cv.shape()) + " does not broadcast over " +
                         shape_string(A.shape()));
  }
  Tensor C(A.shape());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) C[i * n + j] = A[i * n + j] * Cv[i];
  const std::size_t ia = a.id, ic = col.id;
  return t.record("mul_col", std::move(C), {ia, ic}, [ia, ic, m, n](Tape& tp, std::size_t self) {
    const auto& g = tp.grad(self);
    const auto& av = tp.value(ia);
    const auto& cv = tp.value(ic);
    if (tp.needs_grad(ia)) {
      auto& ga = tp.grad_buffer(ia);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += g[i * n + j] * cv[i];
    }
    if (tp.needs_grad(ic)) {
      auto& gc = tp.grad_buffer(ic);
      for (std::size_t i = 0; i < m; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += g[i * n + j] * av[i * n + j];
        gc[i] += s;
      }
    }
  });
}

Var exp(Var a) {
  return unary("exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var ln(Var a) {
  const Tensor& x = a.value();
  for (double v : x.data()) {
    if (!(v > 0.0)) throw DomainError("ln: input must be positive, got " + std::to_string(v));
  }
  return unary("ln", a, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Var silu(Var a) {
  return unary(
      "silu", a, [](double x) { return x * sigmoid_scalar(x); },
      [](double x, double) {
        const double s = sigmoid_scalar(x);
        return s * (1.0 + x * (1.0 - s));
      });
}

Var relu(Var a) {
  return unary("relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
               [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(Var a) {
  return unary("sigmoid", a, sigmoid_scalar, [](double, double y) { return y * (1.0 - y); });
}

Var square(Var a) {
  return unary("square", a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var softmax(Var a, std::size_t axis) {
  Tape& t = *a.tape;
  const Tensor& X = t.value(a);
  if (X.size() == 0) throw DimensionError("softmax: empty axis in shape " + shape_string(X.shape()));
  if (X.rank() > 2 || axis > 1) throw DimensionError("softmax: unsupported axis for shape " + shape_string(X.shape()));
  std::size_t m = X.rows(), n = X.cols();
  // Work in (outer, inner) terms: `count` groups of `len` elements spaced `stride` apart.
  std::size_t count = m, len = n, stride = 1, step = n;
  if (X.rank() == 2 && axis == 0) {
    count = n;
    len = m;
    stride = n;
    step = 1;
  }
  Tensor Y(X.shape());
  for (std::size_t g = 0; g < count; ++g) {
    const std::size_t base = g * step;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < len; ++j) mx = std::max(mx, X[base + j * stride]);
    double s = 0.0;
    for (std::size_t j = 0; j < len; ++j) {
      const double e = std::exp(X[base + j * stride] - mx);
      Y[base + j * stride] = e;
      s += e;
    }
    for (std::size_t j = 0; j < len; ++j) Y[base + j * stride] /= s;
  }
  const std::size_t ia = a.id;
  return t.record("softmax", std::move(Y), {ia}, [ia, count, len, stride, step](Tape& tp, std::size_t self) {
    if (!tp.needs_grad(ia)) return;
    const auto& g = tp.grad(self);
    const auto& y = tp.value(self);
    auto& ga = tp.grad_buffer(ia);
    for (std::size_t c = 0; c < count; ++c) {
      const std::size_t base = c * step;
      double dot = 0.0;
      for (std::size_t j = 0; j < len; ++j) dot += g[base + j * stride] * y[base + j * stride];
      for (std::size_t j = 0; j < len; ++j) {
        const std::size_t k = base + j * stride;
        ga[k] += y[k] * (g[k] - dot);
      }
    }
  });
}

Var log_softmax_rows(Var a) {
  Tape& t = *a.tape;
  const Tensor& X = t.value(a);
  if (X.size() == 0) throw DimensionError("log_softmax_rows: empty input");
  const std::size_t m = X.rows(), n = X.cols();
  Tensor Y(X.shape());
  for (std::size_t i = 0; i < m; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, X[i * n + j]);
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += std::exp(X[i * n + j] - mx);
    const double lse = mx + std::log(s);
    for (std::size_t j = 0; j < n; ++j) Y[i * n + j] = X[i * n + j] - lse;
  }
  const std::size_t ia = a.id;
  return t.record("log_softmax_rows", std::move(Y), {ia}, [ia, m, n](Tape& tp, std::size_t self) {
    if (!tp.needs_grad(ia)) return;
    const auto& g = tp.grad(self);
    const auto& y = tp.value(self);
    auto& ga = tp.grad_buffer(ia);
    for (std::size_t i = 0; i < m; ++i) {
      double gs = 0.0;
      for (std::size_t j = 0; j < n; ++j) gs += g[i * n + j];
      for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += g[i * n + j] - std::exp(y[i * n + j]) * gs;
    }
  });
}

Var layer_norm(Var a, double eps) {
  Tape& t = *a.tape;
  const Tensor& X = t.value(a);
  const std::size_t m = X.rows(), n = X.cols();
  if (n == 0) throw DimensionError("layer_norm: empty rows");
  Tensor Y(X.shape());
  std::vector<double> rstd(m);
  for (std::size_t i = 0; i < m; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += X[i * n + j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = X[i * n + j] - mean;
      var += d * d;
    }
    var /= static_cast<double>(n);
    rstd[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) Y[i * n + j] = (X[i * n + j] - mean) * rstd[i];
  }
  const std::size_t ia = a.id;
  return t.record("layer_norm", std::move(Y), {ia}, [ia, m, n, rstd = std::move(rstd)](Tape& tp, std::size_t self) {
    if (!tp.needs_grad(ia)) return;
    const auto& g = tp.grad(self);
    const auto& y = tp.value(self);
    auto& ga = tp.grad_buffer(ia);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < m; ++i) {
      double gsum = 0.0, gysum = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        gsum += g[i * n + j];
        gysum += g[i * n + j] * y[i * n + j];
      }
      for (std::size_t j = 0; j < n; ++j) {
        ga[i * n + j] += rstd[i] * (g[i * n + j] - inv_n * gsum - y[i * n + j] * inv_n * gysum);
      }
    }
  });
}

Var layer_norm(Var a, Var gamma, Var beta, double eps) {
  return add_row(mul_row(layer_norm(a, eps), gamma), beta);
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  Tape& t = *parts.front().tape;
  const std::size_t m = t.value(parts.front()).rows();
  std::vector<std::size_t> widths, ids;
  std::size_t total = 0;
  for (const Var& p : parts) {
    if (p.tape != &t) throw ContractError("concat_cols: operands live on different tapes");
    const Tensor& v = t.value(p);
    if (v.rows() != m) {
      throw DimensionError("concat_cols: row count mismatch " + shape_string(t.value(parts.front()).shape()) +
                           " vs " + shape_string(v.shape()));
    }
    widths.push_back(v.cols());
    ids.push_back(p.id);
    total += v.cols();
  }
  Tensor C(matrix_shape(m, total));
  std::size_t off = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& v = t.value(ids[k]);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < widths[k]; ++j) C[i * total + off + j] = v[i * widths[k] + j];
    off += widths[k];
  }
  auto inputs = ids;
  return t.record("concat_cols", std::move(C), std::move(inputs),
                  [ids, widths, m, total](Tape& tp, std::size_t self) {
                    const auto& g = tp.grad(self);
                    std::size_t o = 0;
                    for (std::size_t k = 0; k < ids.size(); ++k) {
                      if (tp.needs_grad(ids[k])) {
                        auto& gk = tp.grad_buffer(ids[k]);
                        for (std::size_t i = 0; i < m; ++i)
                          for (std::size_t j = 0; j < widths[k]; ++j) gk[i * widths[k] + j] += g[i * total + o + j];
                      }
                      o += widths[k];
                    }
                  });
}

Var slice_cols(Var a, std::size_t start, std::size_t count) {
  Tape& t = *a.tape;
  const Tensor& A = t.value(a);
  const std::size_t m = A.rows(), n = A.cols();
  if (start + count > n) {
    throw DimensionError("slice_cols: columns [" + std::to_string(start) + ", " + std::to_string(start + count) +
                         ") outside " + shape_string(A.shape()));
  }
  Tensor C(matrix_shape(m, count));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < count; ++j) C[i * count + j] = A[i * n + start + j];
  const std::size_t ia = a.id;
  return t.record("slice_cols", std::move(C), {ia}, [ia, m, n, start, count](Tape& tp, std::size_t self) {
    if (!tp.needs_grad(ia)) return;
    const auto& g = tp.grad(self);
    auto& ga = tp.grad_buffer(ia);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < count; ++j) ga[i * n + start + j] += g[i * count + j];
  });
}

Var reshape(Var a, Shape shape) {
  Tape& t = *a.tape;
  const Tensor& A = t.value(a);
  if (shape_size(shape) != A.size()) {
    throw DimensionError("reshape: cannot view " + shape_string(A.shape()) + " as " + shape_string(shape));
  }
  Tensor C(std::move(shape), A.values());
  const std::size_t ia = a.id;
  return t.record("reshape", std::move(C), {ia}, [ia](Tape& tp, std::size_t self) {
    if (!tp.needs_grad(ia)) return;
    const auto& g = tp.grad(self);
    auto& ga = tp.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Var sum_pool(Var a) {
  Tape& t = *a.tape;
  const Tensor& A = t.value(a);
  const std::size_t m = A.rows(), n = A.cols();
  Tensor C(matrix_shape(1, n));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) C[j] += A[i * n + j];
  const std::size_t ia = a.id;
  return t.record("sum_pool", std::move(C), {ia}, [ia, m, n](Tape& tp, std::size_t self) {
    if (!tp.needs_grad(ia)) return;
    const auto& g = tp.grad(self);
    auto& ga = tp.grad_buffer(ia);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += g[j];
  });
}

Var sum(Var a) {
  Tape& t = *a.tape;
  const Tensor& A = t.value(a);
  double s = 0.0;
  for (double v : A.data()) s += v;
  const std::size_t ia = a.id;
  return t.record("sum", Tensor::scalar(s), {ia}, [ia](Tape& tp, std::size_t self) {
    if (!tp.needs_grad(ia)) return;
    const double g = tp.grad(self)[0];
    auto& ga = tp.grad_buffer(ia);
    for (double& v : ga) v += g;
  });
}

Var l2_norm(Var a) {
  Tape& t = *a.tape;
  const Tensor& A = t.value(a);
  const std::size_t m = A.rows(), n = A.cols();
  Tensor C(matrix_shape(m, 1));
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += A[i * n + j] * A[i * n + j];
    C[i] = std::sqrt(s);
  }
  const std::size_t ia = a.id;
  return t.record("l2_norm", std::move(C), {ia}, [ia, m, n](Tape& tp, std::size_t self) {
    if (!tp.needs_grad(ia)) return;
    const auto& g = tp.grad(self);
    const auto& norms = tp.value(self);
    const auto& av = tp.value(ia);
    auto& ga = tp.grad_buffer(ia);
    for (std::size_t i = 0; i < m; ++i) {
      if (norms[i] == 0.0) continue;
      const double f = g[i] / norms[i];
      for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += f * av[i * n + j];
    }
  });
}

Var gather_rows(Var a, const std::vector<std::size_t>& idx) {
  Tape& t = *a.tape;
  const Tensor& A = t.value(a);
  const std::size_t m = A.rows(), n = A.cols();
  Tensor C(matrix_shape(idx.size(), n));
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] >= m) throw IndexError("gather_rows: row " + std::to_string(idx[r]) + " outside " + shape_string(A.shape()));
    std::copy_n(A.data().begin() + static_cast<std::ptrdiff_t>(idx[r] * n), n,
                C.data().begin() + static_cast<std::ptrdiff_t>(r * n));
  }
  const std::size_t ia = a.id;
  return t.record("gather_rows", std::move(C), {ia}, [ia, idx, n](Tape& tp, std::size_t self) {
    if (!tp.needs_grad(ia)) return;
    const auto& g = tp.grad(self);
    auto& ga = tp.grad_buffer(ia);
    for (std::size_t r = 0; r < idx.size(); ++r)
      for (std::size_t j = 0; j < n; ++j) ga[idx[r] * n + j] += g[r * n + j];
  });
}

Var group_sum_rows(Var a, std::size_t group) {
  Tape& t = *a.tape;
  const Tensor& A = t.value(a);
  const std::size_t rows = A.rows(), n = A.cols();
  if (group == 0 || rows % group != 0) {
    throw DimensionError("group_sum_rows: " + std::to_string(rows) + " rows not divisible into groups of " +
                         std::to_string(group));
  }
  const std::size_t m = rows / group;
  Tensor C(matrix_shape(m, n));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < n; ++j) C[(r / group) * n + j] += A[r * n + j];
  const std::size_t ia = a.id;
  return t.record("group_sum_rows", std::move(C), {ia}, [ia, rows, group, n](Tape& tp, std::size_t self) {
    if (!tp.needs_grad(ia)) return;
    const auto& g = tp.grad(self);
    auto& ga = tp.grad_buffer(ia);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < n; ++j) ga[r * n + j] += g[(r / group) * n + j];
  });
}

Var pick(Var a, const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols) {
  if (rows.size() != cols.size()) throw DimensionError("pick: index lists differ in length");
  Tape& t = *a.tape;
  const Tensor& A = t.value(a);
  const std::size_t m = A.rows(), n = A.cols();
  Tensor C(matrix_shape(rows.size(), 1));
  std::vector<std::size_t> flat(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] >= m || cols[k] >= n) throw IndexError("pick: index outside " + shape_string(A.shape()));
    flat[k] = rows[k] * n + cols[k];
    C[k] = A[flat[k]];
  }
  const std::size_t ia = a.id;
  return t.record("pick", std::move(C), {ia}, [ia, flat = std::move(flat)](Tape& tp, std::size_t self) {
    if (!tp.needs_grad(ia)) return;
    const auto& g = tp.grad(self);
    auto& ga = tp.grad_buffer(ia);
    for (std::size_t k = 0; k < flat.size(); ++k) ga[flat[k]] += g[k];
  });
}

Var overwrite_rows(Var a, const std::vector<std::size_t>& idx, const Tensor& fixed) {
  Tape& t = *a.tape;
  const Tensor& A = t.value(a);
  const std::size_t m = A.rows(), n = A.cols();
  if (fixed.cols() != n || fixed.rows() != m) {
    throw DimensionError("overwrite_rows: replacement " + shape_string(fixed.shape()) + " vs " + shape_string(A.shape()));
  }
  Tensor C = A;
  std::vector<char> replaced(m, 0);
  for (std::size_t r : idx) {
    if (r >= m) throw IndexError("overwrite_rows: row " + std::to_string(r) + " outside " + shape_string(A.shape()));
    replaced[r] = 1;
    for (std::size_t j = 0; j < n; ++j) C[r * n + j] = fixed[r * n + j];
  }
  C.set_requires_grad(false);
  const std::size_t ia = a.id;
  return t.record("overwrite_rows", std::move(C), {ia}, [ia, n, replaced = std::move(replaced)](Tape& tp, std::size_t self) {
    if (!tp.needs_grad(ia)) return;
    const auto& g = tp.grad(self);
    auto& ga = tp.grad_buffer(ia);
    for (std::size_t r = 0; r < replaced.size(); ++r) {
      if (replaced[r]) continue;
      for (std::size_t j = 0; j < n; ++j) ga[r * n + j] += g[r * n + j];
    }
  });
}

}  // namespace enzygen
