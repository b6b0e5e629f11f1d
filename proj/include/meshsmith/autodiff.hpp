#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <vector>

#include "meshsmith/error.hpp"

namespace meshsmith::ad {

/// Dense row-major matrix of doubles; 1x1 doubles as a scalar, 1xC as a row
/// vector. Small enough that value semantics are fine everywhere.
struct Tensor {
  int rows = 0, cols = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}

  static Tensor scalar(double v);
  static Tensor row(std::initializer_list<double> v);
  static Tensor from(int r, int c, std::initializer_list<double> v);

  double& at(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
  double at(int i, int j) const { return data[static_cast<size_t>(i) * cols + j]; }
  int size() const { return rows * cols; }
  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
};

/// Eager reverse-mode tape over Tensor values.
///
/// Binary arithmetic broadcasts in two cases: a 1x1 operand against anything,
/// and a 1xC row vector against RxC. Gradients of broadcast operands are
/// reduced (summed) back to their shape. relu/max/min have zero gradient at
/// the kink; acos expects inputs kept away from +-1 by an upstream clamp.
class Tape {
 public:
  // leaves
  int leaf(const Tensor& t, bool needs_grad);
  int constant(const Tensor& t) { return leaf(t, false); }
  int constant(double v) { return leaf(Tensor::scalar(v), false); }

  // binary (with broadcasting)
  int add(int a, int b);
  int sub(int a, int b);
  int mul(int a, int b);
  int div(int a, int b);
  int matmul(int a, int b);

  // unary
  int relu(int a);
  int sqrt(int a);
  int square(int a);
  int neg(int a);
  int acos(int a);

  // reductions and indexing
  int sum(int a);
  int mean(int a);
  int colmean(int a);        // RxC -> 1xC
  int select_row(int a, int r);
  int select(int a, int r, int c);  // 1x1

  // immediates (no constant node)
  int add_s(int a, double s);
  int mul_s(int a, double s);
  int rsub_s(int a, double s);  // s - x
  int max_s(int a, double s);
  int min_s(int a, double s);

  const Tensor& value(int id) const { return nodes_[id].value; }
  bool needs_grad(int id) const { return nodes_[id].needs_grad; }

  /// Seeds d(out)/d(out) = 1 and sweeps backwards. `out` must be 1x1.
  /// Gradients accumulate; query them per node with grad().
  void backward(int out);
  /// Zero tensor until backward() touches the node.
  const Tensor& grad(int id) const;

  /// Drops all nodes (capacity kept); invalidates ids.
  void reset();
  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  enum class OpKind : std::uint8_t {
    Leaf, Add, Sub, Mul, Div, MatMul, Relu, Sqrt, Square, Neg, Acos,
    Sum, Mean, ColMean, SelectRow, Select, AddS, MulS, RsubS, MaxS, MinS,
  };
  struct Node {
    OpKind kind;
    bool needs_grad;
    int a = -1, b = -1;
    double s = 0;
    int r = 0, c = 0;  // select indices
    Tensor value;
  };

  int push(Node n);
  int binary(OpKind kind, int a, int b);
  int unary(OpKind kind, int a, double s = 0.0);
  void accumulate(int id, const Tensor& g);

  std::vector<Node> nodes_;
  mutable std::vector<Tensor> grads_;
  mutable Tensor zero_;
};

/// Taped scalar with value-like arithmetic, so numeric code can be written
/// once and instantiated for plain double (fast, no tape) and Scalar
/// (differentiable). A default-constructed or double-constructed Scalar is an
/// off-tape constant; it is lifted lazily when combined with a taped value.
class Scalar {
 public:
  Scalar() = default;
  Scalar(double v) : v_(v) {}  // NOLINT: implicit by design
  Scalar(Tape* tape, int id) : tape_(tape), id_(id), v_(tape->value(id).data[0]) {}

  double value() const { return v_; }
  int id() const { return id_; }
  Tape* tape() const { return tape_; }

  friend Scalar operator+(const Scalar& a, const Scalar& b);
  friend Scalar operator-(const Scalar& a, const Scalar& b);
  friend Scalar operator*(const Scalar& a, const Scalar& b);
  friend Scalar operator/(const Scalar& a, const Scalar& b);
  Scalar operator-() const;

  friend Scalar sqrt(const Scalar& a);
  friend Scalar acos(const Scalar& a);
  friend Scalar fmax(const Scalar& a, double s);
  friend Scalar fmin(const Scalar& a, double s);

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
  double v_ = 0;
};

/// Numeric value of either instantiation, for branching (max-by-value etc.).
inline double val_of(double x) { return x; }
inline double val_of(const Scalar& s) { return s.value(); }

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One slot per parameter tensor; shapes fixed at first step.
struct AdamState {
  std::vector<Tensor> m, v;
  long t = 0;
};

void adam_step(std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
               AdamState& state, const AdamConfig& cfg);

/// Max relative error between analytic gradient and central differences,
/// rel = |a - n| / max(1, |a|, |n|). `value` must be deterministic.
double grad_check(const std::function<double(const std::vector<double>&)>& value,
                  const std::function<std::vector<double>(const std::vector<double>&)>& grad,
                  const std::vector<double>& x, double step = 1e-5);

}  // namespace meshsmith::ad
