#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "thermesh/common.hpp"
#include "thermesh/params.hpp"

namespace thermesh::ad {

/// Handle to a node on a Tape. Only valid for the tape that produced it.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

/// Reverse-mode automatic differentiation over dense matrices.
///
/// Every operation records its inputs and a backward closure. backward(loss)
/// recomputes all adjoints from scratch (so repeated calls re-accumulate into
/// Parameter::grad) and walks nodes in reverse creation order, which is a
/// valid topological order because ops can only reference earlier nodes.
///
/// detach() introduces a gradient boundary: the value flows forward, nothing
/// flows back. This is the mechanism behind truncated backpropagation through
/// time.
class Tape {
public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // ----- leaves -----
  Var constant(Mat v);
  Var input(Mat v);  // differentiable leaf, adjoint readable via grad()
  Var param(Parameter& p);

  // ----- arithmetic -----
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);  // elementwise
  Var scale(Var a, double s);
  Var matmul(Var a, Var w);
  Var add_row(Var a, Var row);  // row: [1 x c], broadcast over rows of a
  Var row_scale(Var a, Vec weights);  // out.row(i) = a.row(i) * weights(i)

  // ----- shape -----
  Var concat_cols(const std::vector<Var>& xs);
  Var concat_rows(const std::vector<Var>& xs);
  Var slice_cols(Var a, int start, int count);
  Var broadcast_row(Var row, int nrows);
  Var gather_rows(Var a, std::vector<int> idx);
  Var scatter_sum(Var a, std::vector<int> idx, int rows_out);

  // ----- nonlinearities -----
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var silu(Var a);
  Var relu(Var a);
  Var leaky_relu(Var a, double slope);
  Var exp(Var a);
  Var log(Var a);
  Var square(Var a);

  /// Per-row normalization to zero mean / unit variance followed by a learned
  /// affine map. gain/shift: [1 x c].
  Var layer_norm(Var x, Var gain, Var shift, double eps = 1e-5);

  /// Softmax over groups of rows. scores: [n x 1], seg[i] in [0, nseg).
  Var segment_softmax(Var scores, std::vector<int> seg, int nseg);

  // ----- reductions -----
  Var sum(Var a);  // -> [1 x 1]

  // ----- gradient boundary -----
  Var detach(Var a);

  /// Seeds d(loss)/d(loss) = 1 and accumulates d(loss)/d(p) into p.grad for
  /// every trainable parameter leaf on this tape.
  void backward(Var loss);

  const Mat& value(Var v) const;
  /// Adjoint from the most recent backward() call (zero-sized if untouched).
  const Mat& grad(Var v) const;

  std::size_t size() const { return nodes_.size(); }

private:
  struct Node {
    Mat value;
    bool requires_grad = false;
    std::function<void()> backprop;  // adds into parent adjoints
    Parameter* slot = nullptr;       // param leaves only
  };

  Var emit(Mat value, bool requires_grad, std::function<void()> backprop = nullptr);
  Mat& adjoint(int id);  // lazily allocated zero matrix of the node's shape
  void check(Var v) const;

  std::vector<Node> nodes_;
  std::vector<Mat> adjoints_;
  Mat empty_;
};

}  // namespace thermesh::ad
