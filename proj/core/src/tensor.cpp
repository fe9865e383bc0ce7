#include "plume/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "plume/error.hpp"

namespace plume::ad {

namespace {

Tape& same_tape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.valid() || !b.valid()) throw InvalidArgument(std::string(op) + ": invalid tensor");
  if (a.tape() != b.tape()) throw InvalidArgument(std::string(op) + ": tensors live on different tapes");
  return *a.tape();
}

Tape& tape_of(const Tensor& a, const char* op) {
  if (!a.valid()) throw InvalidArgument(std::string(op) + ": invalid tensor");
  return *a.tape();
}

std::string shape_str(const Tensor& t) {
  std::ostringstream s;
  s << '[' << t.rows() << ',' << t.cols() << ']';
  return s.str();
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeMismatch(std::string(op) + ": shapes " + shape_str(a) + " and " + shape_str(b));
  }
}

void check_rowvec(const Tensor& x, const Tensor& v, const char* op) {
  if (v.rows() != 1 || v.cols() != x.cols()) {
    throw ShapeMismatch(std::string(op) + ": expected row vector [1," + std::to_string(x.cols()) +
                        "], got " + shape_str(v));
  }
}

}  // namespace

// ---------------------------------------------------------------- Tensor

const Matrix& Tensor::value() const { return tape_->nodes_[id_].value; }

Matrix Tensor::grad() const {
  const auto& n = tape_->nodes_[id_];
  if (n.has_grad) return n.grad;
  return Matrix::Zero(n.value.rows(), n.value.cols());
}

bool Tensor::has_grad() const { return tape_->nodes_[id_].has_grad; }
bool Tensor::requires_grad() const { return tape_->nodes_[id_].requires_grad; }

double Tensor::item() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw ShapeMismatch("item: tensor is " + shape_str(*this));
  return v(0, 0);
}

// ---------------------------------------------------------------- Tape

Tensor Tape::variable(Matrix value, bool requires_grad) {
  return record(std::move(value), requires_grad, nullptr);
}

Tensor Tape::record(Matrix value, bool requires_grad, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Tensor(this, nodes_.size() - 1);
}

void Tape::accumulate(std::size_t id, const Matrix& g) { accumulate_expr(id, g); }

void Tape::zero_grad() {
  for (Node& n : nodes_) {
    n.grad.resize(0, 0);
    n.has_grad = false;
  }
}

void Tape::run_backward(std::size_t top) {
  for (std::size_t k = top + 1; k-- > 0;) {
    Node& n = nodes_[k];
    if (!n.has_grad || !n.backward) continue;
    // consumers all have larger ids, so nothing accumulates into k while its rule runs
    Matrix g = std::move(n.grad);
    n.backward(*this, g);
    nodes_[k].grad = std::move(g);
  }
}

void Tape::backward(const Tensor& root) { backward(std::vector<Tensor>{root}); }

void Tape::backward(const std::vector<Tensor>& roots) {
  if (roots.empty()) return;
  std::size_t top = 0;
  for (const Tensor& r : roots) {
    if (r.tape() != this) throw InvalidArgument("backward: root from another tape");
    if (r.rows() != 1 || r.cols() != 1) throw ShapeMismatch("backward: root must be 1x1, got " + shape_str(r));
    accumulate(r.id(), Matrix::Ones(1, 1));
    top = std::max(top, r.id());
  }
  run_backward(top);
}

void Tape::backward(const Tensor& root, const Matrix& seed) {
  if (root.tape() != this) throw InvalidArgument("backward: root from another tape");
  if (seed.rows() != root.rows() || seed.cols() != root.cols()) {
    throw ShapeMismatch("backward: seed shape does not match root " + shape_str(root));
  }
  accumulate(root.id(), seed);
  run_backward(root.id());
}

// ---------------------------------------------------------------- ops

Tensor matmul(const Tensor& a, const Tensor& b) {
  Tape& t = same_tape(a, b, "matmul");
  if (a.cols() != b.rows()) throw ShapeMismatch("matmul: " + shape_str(a) + " x " + shape_str(b));
  const std::size_t ia = a.id(), ib = b.id();
  Matrix out = a.value() * b.value();
  const bool rg = a.requires_grad() || b.requires_grad();
  return t.record(std::move(out), rg, [ia, ib](Tape& tp, const Matrix& g) {
    if (tp.requires_grad_of(ia)) tp.accumulate_expr(ia, g * tp.value_of(ib).transpose());
    if (tp.requires_grad_of(ib)) tp.accumulate_expr(ib, tp.value_of(ia).transpose() * g);
  });
}

Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
  Tape& t = same_tape(x, w, "affine");
  same_tape(x, b, "affine");
  if (x.cols() != w.rows()) throw ShapeMismatch("affine: " + shape_str(x) + " x " + shape_str(w));
  if (b.rows() != 1 || b.cols() != w.cols()) {
    throw ShapeMismatch("affine: bias " + shape_str(b) + " for output width " + std::to_string(w.cols()));
  }
  const std::size_t ix = x.id(), iw = w.id(), ib = b.id();
  Matrix out = x.value() * w.value();
  out.rowwise() += b.value().row(0);
  const bool rg = x.requires_grad() || w.requires_grad() || b.requires_grad();
  return t.record(std::move(out), rg, [ix, iw, ib](Tape& tp, const Matrix& g) {
    if (tp.requires_grad_of(ix)) tp.accumulate_expr(ix, g * tp.value_of(iw).transpose());
    if (tp.requires_grad_of(iw)) tp.accumulate_expr(iw, tp.value_of(ix).transpose() * g);
    if (tp.requires_grad_of(ib)) tp.accumulate_expr(ib, g.colwise().sum());
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  Tape& t = same_tape(a, b, "add");
  check_same_shape(a, b, "add");
  const std::size_t ia = a.id(), ib = b.id();
  Matrix out = a.value() + b.value();
  return t.record(std::move(out), a.requires_grad() || b.requires_grad(),
                  [ia, ib](Tape& tp, const Matrix& g) {
                    tp.accumulate_expr(ia, g);
                    tp.accumulate_expr(ib, g);
                  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  Tape& t = same_tape(a, b, "sub");
  check_same_shape(a, b, "sub");
  const std::size_t ia = a.id(), ib = b.id();
  Matrix out = a.value() - b.value();
  return t.record(std::move(out), a.requires_grad() || b.requires_grad(),
                  [ia, ib](Tape& tp, const Matrix& g) {
                    tp.accumulate_expr(ia, g);
                    tp.accumulate_expr(ib, -g);
                  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  Tape& t = same_tape(a, b, "mul");
  check_same_shape(a, b, "mul");
  const std::size_t ia = a.id(), ib = b.id();
  Matrix out = a.value().cwiseProduct(b.value());
  return t.record(std::move(out), a.requires_grad() || b.requires_grad(),
                  [ia, ib](Tape& tp, const Matrix& g) {
                    if (tp.requires_grad_of(ia)) tp.accumulate_expr(ia, g.cwiseProduct(tp.value_of(ib)));
                    if (tp.requires_grad_of(ib)) tp.accumulate_expr(ib, g.cwiseProduct(tp.value_of(ia)));
                  });
}

Tensor scale(const Tensor& a, double c) {
  Tape& t = tape_of(a, "scale");
  const std::size_t ia = a.id();
  Matrix out = c * a.value();
  return t.record(std::move(out), a.requires_grad(),
                  [ia, c](Tape& tp, const Matrix& g) { tp.accumulate_expr(ia, c * g); });
}

Tensor add_rowvec(const Tensor& x, const Tensor& b) {
  Tape& t = same_tape(x, b, "add_rowvec");
  check_rowvec(x, b, "add_rowvec");
  const std::size_t ix = x.id(), ib = b.id();
  Matrix out = x.value();
  out.rowwise() += b.value().row(0);
  return t.record(std::move(out), x.requires_grad() || b.requires_grad(),
                  [ix, ib](Tape& tp, const Matrix& g) {
                    tp.accumulate_expr(ix, g);
                    if (tp.requires_grad_of(ib)) tp.accumulate_expr(ib, g.colwise().sum());
                  });
}

Tensor mul_rowvec(const Tensor& x, const Tensor& w) {
  Tape& t = same_tape(x, w, "mul_rowvec");
  check_rowvec(x, w, "mul_rowvec");
  const std::size_t ix = x.id(), iw = w.id();
  Matrix out = x.value().array().rowwise() * w.value().row(0).array();
  return t.record(std::move(out), x.requires_grad() || w.requires_grad(),
                  [ix, iw](Tape& tp, const Matrix& g) {
                    if (tp.requires_grad_of(ix)) {
                      tp.accumulate_expr(ix, (g.array().rowwise() * tp.value_of(iw).row(0).array()).matrix());
                    }
                    if (tp.requires_grad_of(iw)) {
                      tp.accumulate_expr(iw, g.cwiseProduct(tp.value_of(ix)).colwise().sum());
                    }
                  });
}

Tensor relu(const Tensor& x) {
  Tape& t = tape_of(x, "relu");
  const std::size_t ix = x.id();
  Matrix out = x.value().cwiseMax(0.0);
  return t.record(std::move(out), x.requires_grad(), [ix](Tape& tp, const Matrix& g) {
    tp.accumulate_expr(ix, (tp.value_of(ix).array() > 0.0).select(g, 0.0).matrix());
  });
}

Tensor sigmoid(const Tensor& x) {
  Tape& t = tape_of(x, "sigmoid");
  const std::size_t ix = x.id();
  Matrix out = x.value().unaryExpr([](double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
  const std::size_t iy = t.size();
  return t.record(std::move(out), x.requires_grad(), [ix, iy](Tape& tp, const Matrix& g) {
    const auto y = tp.value_of(iy).array();
    tp.accumulate_expr(ix, (g.array() * y * (1.0 - y)).matrix());
  });
}

Tensor tanh(const Tensor& x) {
  Tape& t = tape_of(x, "tanh");
  const std::size_t ix = x.id();
  Matrix out = x.value().array().tanh().matrix();
  const std::size_t iy = t.size();
  return t.record(std::move(out), x.requires_grad(), [ix, iy](Tape& tp, const Matrix& g) {
    const auto y = tp.value_of(iy).array();
    tp.accumulate_expr(ix, (g.array() * (1.0 - y.square())).matrix());
  });
}

Tensor activation(Activation kind, const Tensor& x) {
  switch (kind) {
    case Activation::relu: return relu(x);
    case Activation::sigmoid: return sigmoid(x);
    case Activation::tanh: return tanh(x);
  }
  throw InvalidArgument("activation: unknown kind");
}

Tensor sqrt(const Tensor& x) {
  Tape& t = tape_of(x, "sqrt");
  if ((x.value().array() < 0.0).any()) throw NumericalError("sqrt: negative input");
  const std::size_t ix = x.id();
  Matrix out = x.value().array().sqrt().matrix();
  const std::size_t iy = t.size();
  return t.record(std::move(out), x.requires_grad(), [ix, iy](Tape& tp, const Matrix& g) {
    const auto y = tp.value_of(iy).array();
    tp.accumulate_expr(ix, (y > 0.0).select(g.array() / (2.0 * y), 0.0).matrix());
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  Tape& t = same_tape(x, gamma, "layer_norm");
  same_tape(x, beta, "layer_norm");
  check_rowvec(x, gamma, "layer_norm");
  check_rowvec(x, beta, "layer_norm");
  const Index d = x.cols();
  if (d < 1) throw ShapeMismatch("layer_norm: need at least one column");
  const Matrix& xv = x.value();
  Eigen::VectorXd inv(xv.rows());
  Matrix xhat(xv.rows(), d);
  for (Index r = 0; r < xv.rows(); ++r) {
    const double mu = xv.row(r).mean();
    const double var = (xv.row(r).array() - mu).square().mean();
    inv(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (xv.row(r).array() - mu) * inv(r);
  }
  Matrix out = xhat.array().rowwise() * gamma.value().row(0).array();
  out.rowwise() += beta.value().row(0);
  const std::size_t ix = x.id(), ig = gamma.id(), ib = beta.id();
  const bool rg = x.requires_grad() || gamma.requires_grad() || beta.requires_grad();
  return t.record(std::move(out), rg,
                  [ix, ig, ib, d, xhat = std::move(xhat), inv = std::move(inv)](Tape& tp, const Matrix& g) {
                    if (tp.requires_grad_of(ig)) tp.accumulate_expr(ig, g.cwiseProduct(xhat).colwise().sum());
                    if (tp.requires_grad_of(ib)) tp.accumulate_expr(ib, g.colwise().sum());
                    if (!tp.requires_grad_of(ix)) return;
                    const Matrix dxhat = g.array().rowwise() * tp.value_of(ig).row(0).array();
                    Matrix dx(g.rows(), d);
                    const double dd = static_cast<double>(d);
                    for (Index r = 0; r < g.rows(); ++r) {
                      const double s1 = dxhat.row(r).sum();
                      const double s2 = dxhat.row(r).dot(xhat.row(r));
                      dx.row(r) = (inv(r) / dd) * (dd * dxhat.row(r).array() - s1 - xhat.row(r).array() * s2);
                    }
                    tp.accumulate(ix, dx);
                  });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw InvalidArgument("concat_cols: no inputs");
  Tape& t = tape_of(parts[0], "concat_cols");
  const Index rows = parts[0].rows();
  Index cols = 0;
  bool rg = false;
  std::vector<std::size_t> ids;
  std::vector<Index> widths;
  for (const Tensor& p : parts) {
    same_tape(parts[0], p, "concat_cols");
    if (p.rows() != rows) throw ShapeMismatch("concat_cols: row mismatch " + shape_str(p));
    cols += p.cols();
    rg = rg || p.requires_grad();
    ids.push_back(p.id());
    widths.push_back(p.cols());
  }
  Matrix out(rows, cols);
  Index c = 0;
  for (const Tensor& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  return t.record(std::move(out), rg, [ids = std::move(ids), widths = std::move(widths)](Tape& tp, const Matrix& g) {
    Index c0 = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (tp.requires_grad_of(ids[k])) tp.accumulate_expr(ids[k], g.middleCols(c0, widths[k]));
      c0 += widths[k];
    }
  });
}

Tensor slice_cols(const Tensor& x, Index start, Index width) {
  Tape& t = tape_of(x, "slice_cols");
  if (start < 0 || width < 0 || start + width > x.cols()) {
    throw ShapeMismatch("slice_cols: range out of bounds for " + shape_str(x));
  }
  const std::size_t ix = x.id();
  const Index rows = x.rows(), cols = x.cols();
  Matrix out = x.value().middleCols(start, width);
  return t.record(std::move(out), x.requires_grad(), [ix, rows, cols, start, width](Tape& tp, const Matrix& g) {
    Matrix full = Matrix::Zero(rows, cols);
    full.middleCols(start, width) = g;
    tp.accumulate(ix, full);
  });
}

Tensor gather_rows(const Tensor& x, std::shared_ptr<const std::vector<std::size_t>> index) {
  Tape& t = tape_of(x, "gather_rows");
  const std::vector<std::size_t>& idx = *index;
  const Index n = x.rows();
  Matrix out(static_cast<Index>(idx.size()), x.cols());
  const Matrix& xv = x.value();
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] >= static_cast<std::size_t>(n)) throw InvalidArgument("gather_rows: index out of range");
    out.row(static_cast<Index>(k)) = xv.row(static_cast<Index>(idx[k]));
  }
  const std::size_t ix = x.id();
  return t.record(std::move(out), x.requires_grad(), [ix, n, index](Tape& tp, const Matrix& g) {
    Matrix dx = Matrix::Zero(n, g.cols());
    const std::vector<std::size_t>& id = *index;
    for (std::size_t k = 0; k < id.size(); ++k) dx.row(static_cast<Index>(id[k])) += g.row(static_cast<Index>(k));
    tp.accumulate(ix, dx);
  });
}

Tensor scatter_sum(const Tensor& messages, std::shared_ptr<const std::vector<std::size_t>> targets,
                   std::size_t n) {
  Tape& t = tape_of(messages, "scatter_sum");
  const std::vector<std::size_t>& tg = *targets;
  if (tg.size() != static_cast<std::size_t>(messages.rows())) {
    throw ShapeMismatch("scatter_sum: " + std::to_string(tg.size()) + " targets for " + shape_str(messages));
  }
  Matrix out = Matrix::Zero(static_cast<Index>(n), messages.cols());
  const Matrix& mv = messages.value();
  for (std::size_t k = 0; k < tg.size(); ++k) {
    if (tg[k] >= n) throw InvalidArgument("scatter_sum: target index out of range");
    out.row(static_cast<Index>(tg[k])) += mv.row(static_cast<Index>(k));
  }
  const std::size_t im = messages.id();
  return t.record(std::move(out), messages.requires_grad(), [im, targets](Tape& tp, const Matrix& g) {
    const std::vector<std::size_t>& tg2 = *targets;
    Matrix dm(static_cast<Index>(tg2.size()), g.cols());
    for (std::size_t k = 0; k < tg2.size(); ++k) dm.row(static_cast<Index>(k)) = g.row(static_cast<Index>(tg2[k]));
    tp.accumulate(im, dm);
  });
}

Tensor spmm(std::shared_ptr<const SparseMatrix> s, const Tensor& x) {
  Tape& t = tape_of(x, "spmm");
  if (s->cols() != x.rows()) {
    throw ShapeMismatch("spmm: sparse [" + std::to_string(s->rows()) + ',' + std::to_string(s->cols()) +
                        "] x " + shape_str(x));
  }
  Matrix out = (*s) * x.value();
  const std::size_t ix = x.id();
  return t.record(std::move(out), x.requires_grad(), [ix, s](Tape& tp, const Matrix& g) {
    tp.accumulate_expr(ix, Matrix(s->transpose() * g));
  });
}

Tensor sum(const Tensor& x) {
  Tape& t = tape_of(x, "sum");
  const std::size_t ix = x.id();
  const Index r = x.rows(), c = x.cols();
  Matrix out(1, 1);
  out(0, 0) = x.value().sum();
  return t.record(std::move(out), x.requires_grad(), [ix, r, c](Tape& tp, const Matrix& g) {
    tp.accumulate_expr(ix, Matrix::Constant(r, c, g(0, 0)));
  });
}

Tensor sum_squares(const Tensor& x) {
  Tape& t = tape_of(x, "sum_squares");
  const std::size_t ix = x.id();
  Matrix out(1, 1);
  out(0, 0) = x.value().squaredNorm();
  return t.record(std::move(out), x.requires_grad(), [ix](Tape& tp, const Matrix& g) {
    tp.accumulate_expr(ix, (2.0 * g(0, 0)) * tp.value_of(ix));
  });
}

Tensor rmse(const Tensor& pred, const Tensor& target) {
  Tape& t = same_tape(pred, target, "rmse");
  check_same_shape(pred, target, "rmse");
  const double n = static_cast<double>(pred.value().size());
  if (n < 1) throw ShapeMismatch("rmse: empty input");
  const Matrix diff = pred.value() - target.value();
  const double r = std::sqrt(diff.squaredNorm() / n);
  Matrix out(1, 1);
  out(0, 0) = r;
  const std::size_t ip = pred.id(), it = target.id();
  return t.record(std::move(out), pred.requires_grad() || target.requires_grad(),
                  [ip, it, n, r, diff](Tape& tp, const Matrix& g) {
                    if (r == 0.0) return;
                    const Matrix d = (g(0, 0) / (n * r)) * diff;
                    tp.accumulate_expr(ip, d);
                    tp.accumulate_expr(it, -d);
                  });
}

// ---------------------------------------------------------------- grad_check

double grad_check(const ScalarFn& f, const std::vector<Matrix>& params, double eps) {
  auto evaluate = [&](const std::vector<Matrix>& values) {
    Tape tape;
    std::vector<Tensor> leaves;
    leaves.reserve(values.size());
    for (const Matrix& v : values) leaves.push_back(tape.constant(v));
    const double y = f(tape, leaves).item();
    if (!std::isfinite(y)) throw NumericalError("grad_check: function value is not finite");
    return y;
  };

  Tape tape;
  std::vector<Tensor> leaves;
  leaves.reserve(params.size());
  for (const Matrix& v : params) leaves.push_back(tape.variable(v));
  const Tensor y = f(tape, leaves);
  if (!std::isfinite(y.item())) throw NumericalError("grad_check: function value is not finite");
  tape.backward(y);

  std::vector<Matrix> work = params;
  double worst = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    const Matrix analytic = leaves[p].grad();
    for (Index k = 0; k < params[p].size(); ++k) {
      double* entry = work[p].data() + k;
      const double orig = *entry;
      *entry = orig + eps;
      const double fp = evaluate(work);
      *entry = orig - eps;
      const double fm = evaluate(work);
      *entry = orig;
      const double numeric = (fp - fm) / (2.0 * eps);
      const double err = std::abs(analytic.data()[k] - numeric) / std::max(1.0, std::abs(numeric));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace plume::ad
