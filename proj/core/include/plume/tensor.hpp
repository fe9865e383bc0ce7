#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

namespace plume::ad {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Index = Eigen::Index;

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; only valid while the
/// tape is alive.
class Tensor {
 public:
  Tensor() = default;

  const Matrix& value() const;
  /// Gradient accumulated by the last backward pass (zeros if never reached).
  Matrix grad() const;
  bool has_grad() const;
  bool requires_grad() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  double item() const;  // value of a 1x1 tensor

  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Tensor(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Tensor variable(Matrix value, bool requires_grad = true);
  Tensor constant(Matrix value) { return variable(std::move(value), false); }

  /// Seeds every (1x1) root with gradient 1 and runs the recorded backward
  /// rules in reverse order. Gradients accumulate across calls.
  void backward(const Tensor& root);
  void backward(const std::vector<Tensor>& roots);
  /// Seeds `root` with an arbitrary gradient of its own shape.
  void backward(const Tensor& root, const Matrix& seed);
  void zero_grad();

  std::size_t size() const { return nodes_.size(); }

  // Used by op implementations.
  using BackwardFn = std::function<void(Tape&, const Matrix& grad_out)>;
  Tensor record(Matrix value, bool requires_grad, BackwardFn backward);
  const Matrix& value_of(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad_of(std::size_t id) const { return nodes_[id].requires_grad; }
  void accumulate(std::size_t id, const Matrix& g);
  template <typename Expr>
  void accumulate_expr(std::size_t id, const Expr& g) {
    Node& n = nodes_[id];
    if (!n.requires_grad) return;
    if (!n.has_grad) {
      n.grad = g;
      n.has_grad = true;
    } else {
      n.grad += g;
    }
  }

 private:
  friend class Tensor;
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    bool has_grad = false;
    BackwardFn backward;
  };
  void run_backward(std::size_t top);
  std::vector<Node> nodes_;
};

enum class Activation { relu, sigmoid, tanh };

// All binary ops require both tensors on the same tape and matching shapes;
// the only broadcast is a [1,d] row vector applied to every row.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor add_rowvec(const Tensor& x, const Tensor& b);
Tensor mul_rowvec(const Tensor& x, const Tensor& w);
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor activation(Activation kind, const Tensor& x);
Tensor sqrt(const Tensor& x);
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_cols(const Tensor& x, Index start, Index width);
Tensor gather_rows(const Tensor& x, std::shared_ptr<const std::vector<std::size_t>> index);
Tensor scatter_sum(const Tensor& messages, std::shared_ptr<const std::vector<std::size_t>> targets,
                   std::size_t n);
Tensor spmm(std::shared_ptr<const SparseMatrix> s, const Tensor& x);
Tensor sum(const Tensor& x);
Tensor sum_squares(const Tensor& x);
/// sqrt(mean((pred - target)^2)) over all entries; gradient 0 at exact equality.
Tensor rmse(const Tensor& pred, const Tensor& target);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }

/// f builds a scalar from leaves holding `params`. Returns the max over all
/// entries of |analytic - central difference| / max(1, |central difference|).
using ScalarFn = std::function<Tensor(Tape&, const std::vector<Tensor>&)>;
double grad_check(const ScalarFn& f, const std::vector<Matrix>& params, double eps = 1e-6);

}  // namespace plume::ad
