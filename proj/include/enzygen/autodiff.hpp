#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <vector>

#include "enzygen/tensor.hpp"

namespace enzygen {

class Tape;

/// Handle to a node recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  double item() const;
  const Shape& shape() const { return value().shape(); }
};

// Define-by-run reverse-mode tape. Nodes are appended in evaluation order, so
// every node's inputs precede it; backward walks the list once in reverse.
// One tape per forward pass and per thread.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Records a value that never receives gradients.
  Var constant(Tensor value);

  /// Binds an external tensor without copying it. If the tensor requires
  /// grad, backward() accumulates into tensor.grad(). The tensor must outlive
  /// the tape and must not be resized while bound.
  Var leaf(Tensor& tensor);

  /// Records an op output. `backward` is dropped when no input needs grad.
  /// Throws NumericError if the value holds NaN/Inf.
  Var record(const char* op, Tensor value, std::vector<std::size_t> inputs, BackwardFn backward);

  const Tensor& value(std::size_t id) const;
  const Tensor& value(Var v) const { return value(v.id); }
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }

  /// Output gradient of a node during or after backward (empty if untouched).
  const std::vector<double>& grad(std::size_t id) const { return nodes_[id].grad; }
  const std::vector<double>& grad(Var v) const { return grad(v.id); }

  /// Zero-initialised gradient buffer of an input node, for backward rules.
  std::vector<double>& grad_buffer(std::size_t id);

  /// Seeds d(loss)/d(loss) = 1 and propagates. Throws ContractError if the
  /// loss is not a single element.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor own;
    const Tensor* external = nullptr;
    Tensor* leaf = nullptr;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool needs_grad = false;
    std::vector<double> grad;
  };

  // A deque keeps references returned by value() valid while the tape grows.
  std::deque<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Differentiable operations. Rank-1 tensors are treated as a single row where
// a matrix is expected.

Var matmul(Var a, Var b);
/// a · bᵀ without materialising the transpose.
Var matmul_nt(Var a, Var b);
Var transpose(Var a);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var scale(Var a, double factor);
Var add_scalar(Var a, double offset);

/// a[m×n] + row[1×n] broadcast over rows.
Var add_row(Var a, Var row);
/// a[m×n] ⊙ row[1×n] broadcast over rows.
Var mul_row(Var a, Var row);
/// a[m×n] ⊙ col[m×1] broadcast over columns.
Var mul_col(Var a, Var col);

Var exp(Var a);
/// Throws DomainError for any input <= 0.
Var ln(Var a);
Var silu(Var a);
Var relu(Var a);
Var sigmoid(Var a);
Var square(Var a);

/// Softmax along `axis` (0 or 1) of a rank-2 tensor, or the whole of a rank-1
/// tensor. Max-subtracted.
Var softmax(Var a, std::size_t axis = 1);
Var log_softmax_rows(Var a);

/// Row-wise (x - mean) / sqrt(var + eps), no affine.
Var layer_norm(Var a, double eps = 1e-5);
/// Row-wise layer norm followed by gamma ⊙ · + beta.
Var layer_norm(Var a, Var gamma, Var beta, double eps = 1e-5);

Var concat_cols(const std::vector<Var>& parts);
Var slice_cols(Var a, std::size_t start, std::size_t count);
Var reshape(Var a, Shape shape);

/// Column sums: [m×n] → [1×n].
Var sum_pool(Var a);
/// Sum of all elements → scalar.
Var sum(Var a);
/// Euclidean norm of each row: [m×n] → [m×1]. Gradient at the zero row is 0.
Var l2_norm(Var a);

/// Rows a[idx[0]], a[idx[1]], ... ; backward scatter-adds.
Var gather_rows(Var a, const std::vector<std::size_t>& idx);
/// Sums consecutive groups of `group` rows: [(m·g)×n] → [m×n].
Var group_sum_rows(Var a, std::size_t group);
/// Elements a[rows[k], cols[k]] as a [k×1] column.
Var pick(Var a, const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols);
/// Copy of a with rows listed in `idx` replaced by the matching rows of `fixed`
/// (no gradient flows to the replaced rows).
Var overwrite_rows(Var a, const std::vector<std::size_t>& idx, const Tensor& fixed);

}  // namespace enzygen
