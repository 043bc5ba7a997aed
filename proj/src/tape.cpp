#include "thermesh/tape.hpp"

#include <cmath>
#include <utility>

namespace thermesh::ad {

namespace {

void require_same_shape(const Mat& a, const Mat& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ValidationError(std::string(op) + ": shape mismatch " +
                          std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " vs " +
                          std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
}

}  // namespace

Var Tape::emit(Mat value, bool requires_grad, std::function<void()> backprop) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  adjoints_.emplace_back();
  return Var{static_cast<int>(nodes_.size()) - 1};
}

void Tape::check(Var v) const {
  if (!v.valid() || v.id >= static_cast<int>(nodes_.size())) {
    throw ComputeError("tape: op applied to an invalid Var");
  }
}

Mat& Tape::adjoint(int id) {
  Mat& g = adjoints_[static_cast<std::size_t>(id)];
  if (g.size() == 0) g = Mat::Zero(nodes_[static_cast<std::size_t>(id)].value.rows(),
                                   nodes_[static_cast<std::size_t>(id)].value.cols());
  return g;
}

const Mat& Tape::value(Var v) const {
  check(v);
  return nodes_[static_cast<std::size_t>(v.id)].value;
}

const Mat& Tape::grad(Var v) const {
  check(v);
  const Mat& g = adjoints_[static_cast<std::size_t>(v.id)];
  return g.size() == 0 ? empty_ : g;
}

Var Tape::constant(Mat v) { return emit(std::move(v), false); }

Var Tape::input(Mat v) { return emit(std::move(v), true); }

Var Tape::param(Parameter& p) {
  Var v = emit(p.value, true);
  nodes_[static_cast<std::size_t>(v.id)].slot = &p;
  return v;
}

Var Tape::add(Var a, Var b) {
  check(a);
  check(b);
  require_same_shape(value(a), value(b), "add");
  bool rg = nodes_[a.id].requires_grad || nodes_[b.id].requires_grad;
  Var out = emit(value(a) + value(b), rg);
  if (rg) {
    nodes_[out.id].backprop = [this, a, b, out]() {
      const Mat& g = adjoints_[out.id];
      if (nodes_[a.id].requires_grad) adjoint(a.id) += g;
      if (nodes_[b.id].requires_grad) adjoint(b.id) += g;
    };
  }
  return out;
}

Var Tape::sub(Var a, Var b) {
  check(a);
  check(b);
  require_same_shape(value(a), value(b), "sub");
  bool rg = nodes_[a.id].requires_grad || nodes_[b.id].requires_grad;
  Var out = emit(value(a) - value(b), rg);
  if (rg) {
    nodes_[out.id].backprop = [this, a, b, out]() {
      const Mat& g = adjoints_[out.id];
      if (nodes_[a.id].requires_grad) adjoint(a.id) += g;
      if (nodes_[b.id].requires_grad) adjoint(b.id) -= g;
    };
  }
  return out;
}

Var Tape::mul(Var a, Var b) {
  check(a);
  check(b);
  require_same_shape(value(a), value(b), "mul");
  bool rg = nodes_[a.id].requires_grad || nodes_[b.id].requires_grad;
  Var out = emit(value(a).cwiseProduct(value(b)), rg);
  if (rg) {
    nodes_[out.id].backprop = [this, a, b, out]() {
      const Mat& g = adjoints_[out.id];
      if (nodes_[a.id].requires_grad) adjoint(a.id) += g.cwiseProduct(nodes_[b.id].value);
      if (nodes_[b.id].requires_grad) adjoint(b.id) += g.cwiseProduct(nodes_[a.id].value);
    };
  }
  return out;
}

Var Tape::scale(Var a, double s) {
  check(a);
  bool rg = nodes_[a.id].requires_grad;
  Var out = emit(value(a) * s, rg);
  if (rg) {
    nodes_[out.id].backprop = [this, a, s, out]() { adjoint(a.id) += adjoints_[out.id] * s; };
  }
  return out;
}

Var Tape::matmul(Var a, Var w) {
  check(a);
  check(w);
  if (value(a).cols() != value(w).rows()) {
    throw ValidationError("matmul: inner dimensions " + std::to_string(value(a).cols()) +
                          " vs " + std::to_string(value(w).rows()));
  }
  bool rg = nodes_[a.id].requires_grad || nodes_[w.id].requires_grad;
  Var out = emit(value(a) * value(w), rg);
  if (rg) {
    nodes_[out.id].backprop = [this, a, w, out]() {
      const Mat& g = adjoints_[out.id];
      if (nodes_[a.id].requires_grad) adjoint(a.id) += g * nodes_[w.id].value.transpose();
      if (nodes_[w.id].requires_grad) adjoint(w.id) += nodes_[a.id].value.transpose() * g;
    };
  }
  return out;
}

Var Tape::add_row(Var a, Var row) {
  check(a);
  check(row);
  if (value(row).rows() != 1 || value(row).cols() != value(a).cols()) {
    throw ValidationError("add_row: bias must be [1 x cols(a)]");
  }
  bool rg = nodes_[a.id].requires_grad || nodes_[row.id].requires_grad;
  Mat v = value(a);
  v.rowwise() += value(row).row(0);
  Var out = emit(std::move(v), rg);
  if (rg) {
    nodes_[out.id].backprop = [this, a, row, out]() {
      const Mat& g = adjoints_[out.id];
      if (nodes_[a.id].requires_grad) adjoint(a.id) += g;
      if (nodes_[row.id].requires_grad) adjoint(row.id) += g.colwise().sum();
    };
  }
  return out;
}

Var Tape::row_scale(Var a, Vec weights) {
  check(a);
  if (weights.size() != value(a).rows()) {
    throw ValidationError("row_scale: weight count must equal rows(a)");
  }
  bool rg = nodes_[a.id].requires_grad;
  Mat v = weights.asDiagonal() * value(a);
  auto w = std::make_shared<Vec>(std::move(weights));
  Var out = emit(std::move(v), rg);
  if (rg) {
    nodes_[out.id].backprop = [this, a, w, out]() {
      adjoint(a.id) += w->asDiagonal() * adjoints_[out.id];
    };
  }
  return out;
}

Var Tape::concat_cols(const std::vector<Var>& xs) {
  if (xs.empty()) throw ValidationError("concat_cols: empty input list");
  Eigen::Index rows = value(xs[0]).rows();
  Eigen::Index cols = 0;
  bool rg = false;
  for (Var x : xs) {
    check(x);
    if (value(x).rows() != rows) throw ValidationError("concat_cols: row count mismatch");
    cols += value(x).cols();
    rg = rg || nodes_[x.id].requires_grad;
  }
  Mat v(rows, cols);
  Eigen::Index at = 0;
  for (Var x : xs) {
    v.middleCols(at, value(x).cols()) = value(x);
    at += value(x).cols();
  }
  auto parts = std::make_shared<std::vector<Var>>(xs);
  Var out = emit(std::move(v), rg);
  if (rg) {
    nodes_[out.id].backprop = [this, parts, out]() {
      const Mat& g = adjoints_[out.id];
      Eigen::Index at2 = 0;
      for (Var x : *parts) {
        Eigen::Index c = nodes_[x.id].value.cols();
        if (nodes_[x.id].requires_grad) adjoint(x.id) += g.middleCols(at2, c);
        at2 += c;
      }
    };
  }
  return out;
}

Var Tape::concat_rows(const std::vector<Var>& xs) {
  if (xs.empty()) throw ValidationError("concat_rows: empty input list");
  Eigen::Index cols = value(xs[0]).cols();
  Eigen::Index rows = 0;
  bool rg = false;
  for (Var x : xs) {
    check(x);
    if (value(x).cols() != cols) throw ValidationError("concat_rows: column count mismatch");
    rows += value(x).rows();
    rg = rg || nodes_[x.id].requires_grad;
  }
  Mat v(rows, cols);
  Eigen::Index at = 0;
  for (Var x : xs) {
    v.middleRows(at, value(x).rows()) = value(x);
    at += value(x).rows();
  }
  auto parts = std::make_shared<std::vector<Var>>(xs);
  Var out = emit(std::move(v), rg);
  if (rg) {
    nodes_[out.id].backprop = [this, parts, out]() {
      const Mat& g = adjoints_[out.id];
      Eigen::Index at2 = 0;
      for (Var x : *parts) {
        Eigen::Index r = nodes_[x.id].value.rows();
        if (nodes_[x.id].requires_grad) adjoint(x.id) += g.middleRows(at2, r);
        at2 += r;
      }
    };
  }
  return out;
}

Var Tape::slice_cols(Var a, int start, int count) {
  check(a);
  if (start < 0 || count < 0 || start + count > value(a).cols()) {
    throw ValidationError("slice_cols: range out of bounds");
  }
  bool rg = nodes_[a.id].requires_grad;
  Var out = emit(value(a).middleCols(start, count), rg);
  if (rg) {
    nodes_[out.id].backprop = [this, a, start, count, out]() {
      adjoint(a.id).middleCols(start, count) += adjoints_[out.id];
    };
  }
  return out;
}

Var Tape::broadcast_row(Var row, int nrows) {
  check(row);
  if (value(row).rows() != 1) throw ValidationError("broadcast_row: expected [1 x c]");
  bool rg = nodes_[row.id].requires_grad;
  Var out = emit(value(row).replicate(nrows, 1), rg);
  if (rg) {
    nodes_[out.id].backprop = [this, row, out]() {
      adjoint(row.id) += adjoints_[out.id].colwise().sum();
    };
  }
  return out;
}

Var Tape::gather_rows(Var a, std::vector<int> idx) {
  check(a);
  const Mat& src = value(a);
  for (int i : idx) {
    if (i < 0 || i >= src.rows()) throw ValidationError("gather_rows: index out of range");
  }
  Mat v(static_cast<Eigen::Index>(idx.size()), src.cols());
  for (std::size_t e = 0; e < idx.size(); ++e) v.row(static_cast<Eigen::Index>(e)) = src.row(idx[e]);
  bool rg = nodes_[a.id].requires_grad;
  auto ix = std::make_shared<std::vector<int>>(std::move(idx));
  Var out = emit(std::move(v), rg);
  if (rg) {
    nodes_[out.id].backprop = [this, a, ix, out]() {
      const Mat& g = adjoints_[out.id];
      Mat& ga = adjoint(a.id);
      for (std::size_t e = 0; e < ix->size(); ++e) {
        ga.row((*ix)[e]) += g.row(static_cast<Eigen::Index>(e));
      }
    };
  }
  return out;
}

Var Tape::scatter_sum(Var a, std::vector<int> idx, int rows_out) {
  check(a);
  if (static_cast<Eigen::Index>(idx.size()) != value(a).rows()) {
    throw ValidationError("scatter_sum: one index per row required");
  }
  for (int i : idx) {
    if (i < 0 || i >= rows_out) throw ValidationError("scatter_sum: index out of range");
  }
  Mat v = Mat::Zero(rows_out, value(a).cols());
  const Mat& src = value(a);
  for (std::size_t e = 0; e < idx.size(); ++e) v.row(idx[e]) += src.row(static_cast<Eigen::Index>(e));
  bool rg = nodes_[a.id].requires_grad;
  auto ix = std::make_shared<std::vector<int>>(std::move(idx));
  Var out = emit(std::move(v), rg);
  if (rg) {
    nodes_[out.id].backprop = [this, a, ix, out]() {
      const Mat& g = adjoints_[out.id];
      Mat& ga = adjoint(a.id);
      for (std::size_t e = 0; e < ix->size(); ++e) {
        ga.row(static_cast<Eigen::Index>(e)) += g.row((*ix)[e]);
      }
    };
  }
  return out;
}

Var Tape::sigmoid(Var a) {
  check(a);
  Mat v = value(a).unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
  bool rg = nodes_[a.id].requires_grad;
  Var out = emit(std::move(v), rg);
  if (rg) {
    nodes_[out.id].backprop = [this, a, out]() {
      const Mat& y = nodes_[out.id].value;
      adjoint(a.id) += adjoints_[out.id].cwiseProduct(y.cwiseProduct(Mat::Ones(y.rows(), y.cols()) - y));
    };
  }
  return out;
}

Var Tape::tanh(Var a) {
  check(a);
  Mat v = value(a).array().tanh().matrix();
  bool rg = nodes_[a.id].requires_grad;
  Var out = emit(std::move(v), rg);
  if (rg) {
    nodes_[out.id].backprop = [this, a, out]() {
      const Mat& y = nodes_[out.id].value;
      adjoint(a.id) += adjoints_[out.id].cwiseProduct((1.0 - y.array().square()).matrix());
    };
  }
  return out;
}

Var Tape::silu(Var a) {
  check(a);
  Mat s = value(a).unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
  Mat v = value(a).cwiseProduct(s);
  bool rg = nodes_[a.id].requires_grad;
  auto sp = std::make_shared<Mat>(std::move(s));
  Var out = emit(std::move(v), rg);
  if (rg) {
    nodes_[out.id].backprop = [this, a, sp, out]() {
      const Mat& x = nodes_[a.id].value;
      // d/dx x*sig(x) = sig(x) * (1 + x * (1 - sig(x)))
      Mat d = sp->array() * (1.0 + x.array() * (1.0 - sp->array()));
      adjoint(a.id) += adjoints_[out.id].cwiseProduct(d);
    };
  }
  return out;
}

Var Tape::relu(Var a) { return leaky_relu(a, 0.0); }

Var Tape::leaky_relu(Var a, double slope) {
  check(a);
  Mat v = value(a).unaryExpr([slope](double x) { return x > 0.0 ? x : slope * x; });
  bool rg = nodes_[a.id].requires_grad;
  Var out = emit(std::move(v), rg);
  if (rg) {
    nodes_[out.id].backprop = [this, a, slope, out]() {
      Mat d = nodes_[a.id].value.unaryExpr([slope](double x) { return x > 0.0 ? 1.0 : slope; });
      adjoint(a.id) += adjoints_[out.id].cwiseProduct(d);
    };
  }
  return out;
}

Var Tape::exp(Var a) {
  check(a);
  Mat v = value(a).array().exp().matrix();
  bool rg = nodes_[a.id].requires_grad;
  Var out = emit(std::move(v), rg);
  if (rg) {
    nodes_[out.id].backprop = [this, a, out]() {
      adjoint(a.id) += adjoints_[out.id].cwiseProduct(nodes_[out.id].value);
    };
  }
  return out;
}

Var Tape::log(Var a) {
  check(a);
  Mat v = value(a).array().log().matrix();
  bool rg = nodes_[a.id].requires_grad;
  Var out = emit(std::move(v), rg);
  if (rg) {
    nodes_[out.id].backprop = [this, a, out]() {
      adjoint(a.id) += adjoints_[out.id].cwiseQuotient(nodes_[a.id].value);
    };
  }
  return out;
}

Var Tape::square(Var a) {
  check(a);
  Mat v = value(a).array().square().matrix();
  bool rg = nodes_[a.id].requires_grad;
  Var out = emit(std::move(v), rg);
  if (rg) {
    nodes_[out.id].backprop = [this, a, out]() {
      adjoint(a.id) += 2.0 * adjoints_[out.id].cwiseProduct(nodes_[a.id].value);
    };
  }
  return out;
}

Var Tape::layer_norm(Var x, Var gain, Var shift, double eps) {
  check(x);
  check(gain);
  check(shift);
  const Mat& xv = value(x);
  if (value(gain).rows() != 1 || value(gain).cols() != xv.cols() ||
      value(shift).rows() != 1 || value(shift).cols() != xv.cols()) {
    throw ValidationError("layer_norm: gain/shift must be [1 x cols(x)]");
  }
  const Eigen::Index n = xv.rows(), d = xv.cols();
  Mat y(n, d);
  Vec inv_sigma(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double m = xv.row(i).mean();
    double var = (xv.row(i).array() - m).square().mean();
    double is = 1.0 / std::sqrt(var + eps);
    inv_sigma(i) = is;
    y.row(i) = (xv.row(i).array() - m) * is;
  }
  Mat outv = (y.array().rowwise() * value(gain).row(0).array()).matrix();
  outv.rowwise() += value(shift).row(0);
  bool rg = nodes_[x.id].requires_grad || nodes_[gain.id].requires_grad ||
            nodes_[shift.id].requires_grad;
  auto yv = std::make_shared<Mat>(std::move(y));
  auto is = std::make_shared<Vec>(std::move(inv_sigma));
  Var out = emit(std::move(outv), rg);
  if (rg) {
    nodes_[out.id].backprop = [this, x, gain, shift, yv, is, out]() {
      const Mat& g = adjoints_[out.id];
      if (nodes_[shift.id].requires_grad) adjoint(shift.id) += g.colwise().sum();
      if (nodes_[gain.id].requires_grad) adjoint(gain.id) += g.cwiseProduct(*yv).colwise().sum();
      if (nodes_[x.id].requires_grad) {
        const Mat& gn = nodes_[gain.id].value;
        Mat dy = g.array().rowwise() * gn.row(0).array();
        Mat& gx = adjoint(x.id);
        for (Eigen::Index i = 0; i < dy.rows(); ++i) {
          double mdy = dy.row(i).mean();
          double mdyy = dy.row(i).cwiseProduct(yv->row(i)).mean();
          gx.row(i) += ((dy.row(i).array() - mdy - yv->row(i).array() * mdyy) * (*is)(i)).matrix();
        }
      }
    };
  }
  return out;
}

Var Tape::segment_softmax(Var scores, std::vector<int> seg, int nseg) {
  check(scores);
  const Mat& s = value(scores);
  if (s.cols() != 1) throw ValidationError("segment_softmax: scores must be [n x 1]");
  if (static_cast<Eigen::Index>(seg.size()) != s.rows()) {
    throw ValidationError("segment_softmax: one segment id per score required");
  }
  Vec smax = Vec::Constant(nseg, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < seg.size(); ++i) {
    if (seg[i] < 0 || seg[i] >= nseg) throw ValidationError("segment_softmax: segment out of range");
    smax(seg[i]) = std::max(smax(seg[i]), s(static_cast<Eigen::Index>(i), 0));
  }
  Mat w(s.rows(), 1);
  Vec denom = Vec::Zero(nseg);
  for (std::size_t i = 0; i < seg.size(); ++i) {
    double e = std::exp(s(static_cast<Eigen::Index>(i), 0) - smax(seg[i]));
    w(static_cast<Eigen::Index>(i), 0) = e;
    denom(seg[i]) += e;
  }
  for (std::size_t i = 0; i < seg.size(); ++i) {
    w(static_cast<Eigen::Index>(i), 0) /= denom(seg[i]);
  }
  bool rg = nodes_[scores.id].requires_grad;
  auto sg = std::make_shared<std::vector<int>>(std::move(seg));
  Var out = emit(std::move(w), rg);
  if (rg) {
    nodes_[out.id].backprop = [this, scores, sg, nseg, out]() {
      const Mat& g = adjoints_[out.id];
      const Mat& wv = nodes_[out.id].value;
      Vec dot = Vec::Zero(nseg);
      for (std::size_t i = 0; i < sg->size(); ++i) {
        dot((*sg)[i]) += wv(static_cast<Eigen::Index>(i), 0) * g(static_cast<Eigen::Index>(i), 0);
      }
      Mat& gs = adjoint(scores.id);
      for (std::size_t i = 0; i < sg->size(); ++i) {
        Eigen::Index e = static_cast<Eigen::Index>(i);
        gs(e, 0) += wv(e, 0) * (g(e, 0) - dot((*sg)[i]));
      }
    };
  }
  return out;
}

Var Tape::sum(Var a) {
  check(a);
  Mat v(1, 1);
  v(0, 0) = value(a).sum();
  bool rg = nodes_[a.id].requires_grad;
  Var out = emit(std::move(v), rg);
  if (rg) {
    nodes_[out.id].backprop = [this, a, out]() {
      adjoint(a.id).array() += adjoints_[out.id](0, 0);
    };
  }
  return out;
}

Var Tape::detach(Var a) {
  check(a);
  return emit(value(a), false);
}

void Tape::backward(Var loss) {
  check(loss);
  const Node& ln = nodes_[static_cast<std::size_t>(loss.id)];
  if (ln.value.rows() != 1 || ln.value.cols() != 1) {
    throw ValidationError("backward: loss must be a [1 x 1] scalar");
  }
  if (!ln.requires_grad) {
    throw ComputeError("backward: loss does not depend on any differentiable leaf");
  }
  for (auto& g : adjoints_) g.resize(0, 0);
  adjoint(loss.id)(0, 0) = 1.0;
  for (int id = loss.id; id >= 0; --id) {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.requires_grad || adjoints_[static_cast<std::size_t>(id)].size() == 0) continue;
    if (n.backprop) n.backprop();
    if (n.slot != nullptr && n.slot->trainable) {
      n.slot->grad += adjoints_[static_cast<std::size_t>(id)];
    }
  }
}

}  // namespace thermesh::ad
