#include "meshsmith/autodiff.hpp"

#include <cmath>
#include <cstdio>

namespace meshsmith::ad {

namespace {

[[noreturn]] void shape_fail(const char* op, const Tensor& a, const Tensor& b) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s: %dx%d vs %dx%d", op, a.rows, a.cols, b.rows, b.cols);
  throw Error(ErrorCode::ShapeMismatch, buf);
}

bool scalar_shape(const Tensor& t) { return t.rows == 1 && t.cols == 1; }

// a's shape broadcasts to out's shape?
bool broadcasts_to(const Tensor& a, int rows, int cols) {
  if (a.rows == rows && a.cols == cols) return true;
  if (scalar_shape(a)) return true;
  return a.rows == 1 && a.cols == cols;  // row vector over rows
}

// value of operand `a` at (i, j) of the broadcast output
double bval(const Tensor& a, int i, int j) {
  if (scalar_shape(a)) return a.data[0];
  return a.at(a.rows == 1 ? 0 : i, j);
}

// reduce a full-shape gradient back onto the (possibly broadcast) operand
void reduce_into(Tensor& dst, const Tensor& g) {
  if (dst.same_shape(g)) {
    for (int i = 0; i < g.size(); ++i) dst.data[i] += g.data[i];
    return;
  }
  if (scalar_shape(dst)) {
    for (double v : g.data) dst.data[0] += v;
    return;
  }
  for (int i = 0; i < g.rows; ++i)
    for (int j = 0; j < g.cols; ++j) dst.data[j] += g.at(i, j);
}

}  // namespace

Tensor Tensor::scalar(double v) {
  Tensor t(1, 1);
  t.data[0] = v;
  return t;
}

Tensor Tensor::row(std::initializer_list<double> v) {
  Tensor t(1, static_cast<int>(v.size()));
  int j = 0;
  for (double x : v) t.data[j++] = x;
  return t;
}

Tensor Tensor::from(int r, int c, std::initializer_list<double> v) {
  Tensor t(r, c);
  if (static_cast<int>(v.size()) != r * c)
    throw Error(ErrorCode::ShapeMismatch, "Tensor::from: wrong element count");
  int j = 0;
  for (double x : v) t.data[j++] = x;
  return t;
}

int Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::leaf(const Tensor& t, bool needs_grad) {
  Node n;
  n.kind = OpKind::Leaf;
  n.needs_grad = needs_grad;
  n.value = t;
  return push(std::move(n));
}

int Tape::binary(OpKind kind, int a, int b) {
  const Tensor& ta = nodes_[a].value;
  const Tensor& tb = nodes_[b].value;
  const char* names[] = {"add", "sub", "mul", "div"};
  const char* name = names[static_cast<int>(kind) - static_cast<int>(OpKind::Add)];
  const int rows = std::max(ta.rows, tb.rows);
  const int cols = std::max(ta.cols, tb.cols);
  if (!broadcasts_to(ta, rows, cols) || !broadcasts_to(tb, rows, cols)) shape_fail(name, ta, tb);

  Node n;
  n.kind = kind;
  n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
  n.a = a;
  n.b = b;
  n.value = Tensor(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const double x = bval(ta, i, j), y = bval(tb, i, j);
      double& out = n.value.at(i, j);
      switch (kind) {
        case OpKind::Add: out = x + y; break;
        case OpKind::Sub: out = x - y; break;
        case OpKind::Mul: out = x * y; break;
        default: out = x / y; break;
      }
    }
  }
  return push(std::move(n));
}

int Tape::add(int a, int b) { return binary(OpKind::Add, a, b); }
int Tape::sub(int a, int b) { return binary(OpKind::Sub, a, b); }
int Tape::mul(int a, int b) { return binary(OpKind::Mul, a, b); }
int Tape::div(int a, int b) { return binary(OpKind::Div, a, b); }

int Tape::matmul(int a, int b) {
  const Tensor& ta = nodes_[a].value;
  const Tensor& tb = nodes_[b].value;
  if (ta.cols != tb.rows) shape_fail("matmul", ta, tb);
  Node n;
  n.kind = OpKind::MatMul;
  n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
  n.a = a;
  n.b = b;
  n.value = Tensor(ta.rows, tb.cols);
  for (int i = 0; i < ta.rows; ++i)
    for (int k = 0; k < ta.cols; ++k) {
      const double aik = ta.at(i, k);
      for (int j = 0; j < tb.cols; ++j) n.value.at(i, j) += aik * tb.at(k, j);
    }
  return push(std::move(n));
}

int Tape::unary(OpKind kind, int a, double s) {
  const Tensor& ta = nodes_[a].value;
  Node n;
  n.kind = kind;
  n.needs_grad = nodes_[a].needs_grad;
  n.a = a;
  n.s = s;
  switch (kind) {
    case OpKind::Sum:
    case OpKind::Mean:
      n.value = Tensor(1, 1);
      break;
    case OpKind::ColMean:
      n.value = Tensor(1, ta.cols);
      break;
    default:
      n.value = Tensor(ta.rows, ta.cols);
      break;
  }
  switch (kind) {
    case OpKind::Relu:
      for (int i = 0; i < ta.size(); ++i) n.value.data[i] = ta.data[i] > 0 ? ta.data[i] : 0.0;
      break;
    case OpKind::Sqrt:
      for (int i = 0; i < ta.size(); ++i) n.value.data[i] = std::sqrt(ta.data[i]);
      break;
    case OpKind::Square:
      for (int i = 0; i < ta.size(); ++i) n.value.data[i] = ta.data[i] * ta.data[i];
      break;
    case OpKind::Neg:
      for (int i = 0; i < ta.size(); ++i) n.value.data[i] = -ta.data[i];
      break;
    case OpKind::Acos:
      for (int i = 0; i < ta.size(); ++i) n.value.data[i] = std::acos(ta.data[i]);
      break;
    case OpKind::Sum: {
      double acc = 0;
      for (double v : ta.data) acc += v;
      n.value.data[0] = acc;
      break;
    }
    case OpKind::Mean: {
      double acc = 0;
      for (double v : ta.data) acc += v;
      n.value.data[0] = acc / ta.size();
      break;
    }
    case OpKind::ColMean:
      for (int j = 0; j < ta.cols; ++j) {
        double acc = 0;
        for (int i = 0; i < ta.rows; ++i) acc += ta.at(i, j);
        n.value.data[j] = acc / ta.rows;
      }
      break;
    case OpKind::AddS:
      for (int i = 0; i < ta.size(); ++i) n.value.data[i] = ta.data[i] + s;
      break;
    case OpKind::MulS:
      for (int i = 0; i < ta.size(); ++i) n.value.data[i] = ta.data[i] * s;
      break;
    case OpKind::RsubS:
      for (int i = 0; i < ta.size(); ++i) n.value.data[i] = s - ta.data[i];
      break;
    case OpKind::MaxS:
      for (int i = 0; i < ta.size(); ++i) n.value.data[i] = ta.data[i] > s ? ta.data[i] : s;
      break;
    case OpKind::MinS:
      for (int i = 0; i < ta.size(); ++i) n.value.data[i] = ta.data[i] < s ? ta.data[i] : s;
      break;
    default:
      throw Error(ErrorCode::ShapeMismatch, "unary: bad op");
  }
  return push(std::move(n));
}

int Tape::relu(int a) { return unary(OpKind::Relu, a); }
int Tape::sqrt(int a) { return unary(OpKind::Sqrt, a); }
int Tape::square(int a) { return unary(OpKind::Square, a); }
int Tape::neg(int a) { return unary(OpKind::Neg, a); }
int Tape::acos(int a) { return unary(OpKind::Acos, a); }
int Tape::sum(int a) { return unary(OpKind::Sum, a); }
int Tape::mean(int a) { return unary(OpKind::Mean, a); }
int Tape::colmean(int a) { return unary(OpKind::ColMean, a); }
int Tape::add_s(int a, double s) { return unary(OpKind::AddS, a, s); }
int Tape::mul_s(int a, double s) { return unary(OpKind::MulS, a, s); }
int Tape::rsub_s(int a, double s) { return unary(OpKind::RsubS, a, s); }
int Tape::max_s(int a, double s) { return unary(OpKind::MaxS, a, s); }
int Tape::min_s(int a, double s) { return unary(OpKind::MinS, a, s); }

int Tape::select_row(int a, int r) {
  const Tensor& ta = nodes_[a].value;
  if (r < 0 || r >= ta.rows) throw Error(ErrorCode::ShapeMismatch, "select_row out of range");
  Node n;
  n.kind = OpKind::SelectRow;
  n.needs_grad = nodes_[a].needs_grad;
  n.a = a;
  n.r = r;
  n.value = Tensor(1, ta.cols);
  for (int j = 0; j < ta.cols; ++j) n.value.data[j] = ta.at(r, j);
  return push(std::move(n));
}

int Tape::select(int a, int r, int c) {
  const Tensor& ta = nodes_[a].value;
  if (r < 0 || r >= ta.rows || c < 0 || c >= ta.cols)
    throw Error(ErrorCode::ShapeMismatch, "select out of range");
  Node n;
  n.kind = OpKind::Select;
  n.needs_grad = nodes_[a].needs_grad;
  n.a = a;
  n.r = r;
  n.c = c;
  n.value = Tensor::scalar(ta.at(r, c));
  return push(std::move(n));
}

void Tape::accumulate(int id, const Tensor& g) {
  if (!nodes_[id].needs_grad) return;
  Tensor& dst = grads_[id];
  if (dst.data.empty()) dst = Tensor(nodes_[id].value.rows, nodes_[id].value.cols);
  reduce_into(dst, g);
}

void Tape::backward(int out) {
  const Node& seed = nodes_[out];
  if (!scalar_shape(seed.value))
    throw Error(ErrorCode::NonScalarOutput, "backward needs a 1x1 output");
  grads_.assign(nodes_.size(), Tensor{});
  if (!seed.needs_grad) return;
  grads_[out] = Tensor::scalar(1.0);

  for (int i = out; i >= 0; --i) {
    const Node& n = nodes_[i];
    if (!n.needs_grad || grads_[i].data.empty()) continue;
    const Tensor& g = grads_[i];
    const Tensor* ta = n.a >= 0 ? &nodes_[n.a].value : nullptr;
    const Tensor* tb = n.b >= 0 ? &nodes_[n.b].value : nullptr;
    switch (n.kind) {
      case OpKind::Leaf:
        break;
      case OpKind::Add:
        accumulate(n.a, g);
        accumulate(n.b, g);
        break;
      case OpKind::Sub: {
        accumulate(n.a, g);
        Tensor gb = g;
        for (double& v : gb.data) v = -v;
        accumulate(n.b, gb);
        break;
      }
      case OpKind::Mul: {
        Tensor ga(g.rows, g.cols), gb(g.rows, g.cols);
        for (int r = 0; r < g.rows; ++r)
          for (int c = 0; c < g.cols; ++c) {
            ga.at(r, c) = g.at(r, c) * bval(*tb, r, c);
            gb.at(r, c) = g.at(r, c) * bval(*ta, r, c);
          }
        accumulate(n.a, ga);
        accumulate(n.b, gb);
        break;
      }
      case OpKind::Div: {
        Tensor ga(g.rows, g.cols), gb(g.rows, g.cols);
        for (int r = 0; r < g.rows; ++r)
          for (int c = 0; c < g.cols; ++c) {
            const double y = bval(*tb, r, c);
            ga.at(r, c) = g.at(r, c) / y;
            gb.at(r, c) = -g.at(r, c) * bval(*ta, r, c) / (y * y);
          }
        accumulate(n.a, ga);
        accumulate(n.b, gb);
        break;
      }
      case OpKind::MatMul: {
        // dA = g * B^T, dB = A^T * g
        Tensor ga(ta->rows, ta->cols), gb(tb->rows, tb->cols);
        for (int r = 0; r < ta->rows; ++r)
          for (int k = 0; k < ta->cols; ++k) {
            double acc = 0;
            for (int c = 0; c < tb->cols; ++c) acc += g.at(r, c) * tb->at(k, c);
            ga.at(r, k) = acc;
          }
        for (int k = 0; k < tb->rows; ++k)
          for (int c = 0; c < tb->cols; ++c) {
            double acc = 0;
            for (int r = 0; r < ta->rows; ++r) acc += ta->at(r, k) * g.at(r, c);
            gb.at(k, c) = acc;
          }
        accumulate(n.a, ga);
        accumulate(n.b, gb);
        break;
      }
      case OpKind::Relu: {
        Tensor ga = g;
        for (int k = 0; k < ga.size(); ++k)
          if (ta->data[k] <= 0) ga.data[k] = 0;
        accumulate(n.a, ga);
        break;
      }
      case OpKind::Sqrt: {
        Tensor ga = g;
        for (int k = 0; k < ga.size(); ++k) ga.data[k] *= 0.5 / n.value.data[k];
        accumulate(n.a, ga);
        break;
      }
      case OpKind::Square: {
        Tensor ga = g;
        for (int k = 0; k < ga.size(); ++k) ga.data[k] *= 2.0 * ta->data[k];
        accumulate(n.a, ga);
        break;
      }
      case OpKind::Neg: {
        Tensor ga = g;
        for (double& v : ga.data) v = -v;
        accumulate(n.a, ga);
        break;
      }
      case OpKind::Acos: {
        Tensor ga = g;
        for (int k = 0; k < ga.size(); ++k) {
          const double x = ta->data[k];
          ga.data[k] *= -1.0 / std::sqrt(1.0 - x * x);
        }
        accumulate(n.a, ga);
        break;
      }
      case OpKind::Sum: {
        Tensor ga(ta->rows, ta->cols);
        for (double& v : ga.data) v = g.data[0];
        accumulate(n.a, ga);
        break;
      }
      case OpKind::Mean: {
        Tensor ga(ta->rows, ta->cols);
        const double s = g.data[0] / ta->size();
        for (double& v : ga.data) v = s;
        accumulate(n.a, ga);
        break;
      }
      case OpKind::ColMean: {
        Tensor ga(ta->rows, ta->cols);
        for (int r = 0; r < ta->rows; ++r)
          for (int c = 0; c < ta->cols; ++c) ga.at(r, c) = g.data[c] / ta->rows;
        accumulate(n.a, ga);
        break;
      }
      case OpKind::SelectRow: {
        Tensor ga(ta->rows, ta->cols);
        for (int c = 0; c < ta->cols; ++c) ga.at(n.r, c) = g.data[c];
        accumulate(n.a, ga);
        break;
      }
      case OpKind::Select: {
        Tensor ga(ta->rows, ta->cols);
        ga.at(n.r, n.c) = g.data[0];
        accumulate(n.a, ga);
        break;
      }
      case OpKind::AddS:
        accumulate(n.a, g);
        break;
      case OpKind::MulS: {
        Tensor ga = g;
        for (double& v : ga.data) v *= n.s;
        accumulate(n.a, ga);
        break;
      }
      case OpKind::RsubS: {
        Tensor ga = g;
        for (double& v : ga.data) v = -v;
        accumulate(n.a, ga);
        break;
      }
      case OpKind::MaxS: {
        Tensor ga = g;
        for (int k = 0; k < ga.size(); ++k)
          if (!(ta->data[k] > n.s)) ga.data[k] = 0;
        accumulate(n.a, ga);
        break;
      }
      case OpKind::MinS: {
        Tensor ga = g;
        for (int k = 0; k < ga.size(); ++k)
          if (!(ta->data[k] < n.s)) ga.data[k] = 0;
        accumulate(n.a, ga);
        break;
      }
    }
  }
}

const Tensor& Tape::grad(int id) const {
  if (id < static_cast<int>(grads_.size()) && !grads_[id].data.empty()) return grads_[id];
  const Node& n = nodes_[id];
  zero_ = Tensor(n.value.rows, n.value.cols);
  return zero_;
}

void Tape::reset() {
  nodes_.clear();
  grads_.clear();
}

namespace {

// Lift an off-tape constant when the other operand carries a tape.
int lifted(Tape* tape, const Scalar& s) {
  return s.tape() ? s.id() : tape->constant(s.value());
}

}  // namespace

Scalar operator+(const Scalar& a, const Scalar& b) {
  Tape* t = a.tape() ? a.tape() : b.tape();
  if (!t) return {a.value() + b.value()};
  if (!b.tape()) return {t, t->add_s(a.id(), b.value())};
  if (!a.tape()) return {t, t->add_s(b.id(), a.value())};
  return {t, t->add(a.id(), b.id())};
}

Scalar operator-(const Scalar& a, const Scalar& b) {
  Tape* t = a.tape() ? a.tape() : b.tape();
  if (!t) return {a.value() - b.value()};
  if (!b.tape()) return {t, t->add_s(a.id(), -b.value())};
  if (!a.tape()) return {t, t->rsub_s(b.id(), a.value())};
  return {t, t->sub(a.id(), b.id())};
}

Scalar operator*(const Scalar& a, const Scalar& b) {
  Tape* t = a.tape() ? a.tape() : b.tape();
  if (!t) return {a.value() * b.value()};
  if (!b.tape()) return {t, t->mul_s(a.id(), b.value())};
  if (!a.tape()) return {t, t->mul_s(b.id(), a.value())};
  return {t, t->mul(a.id(), b.id())};
}

Scalar operator/(const Scalar& a, const Scalar& b) {
  Tape* t = a.tape() ? a.tape() : b.tape();
  if (!t) return {a.value() / b.value()};
  if (!b.tape()) return {t, t->mul_s(a.id(), 1.0 / b.value())};
  return {t, t->div(lifted(t, a), b.id())};
}

Scalar Scalar::operator-() const {
  if (!tape_) return {-v_};
  return {tape_, tape_->neg(id_)};
}

Scalar sqrt(const Scalar& a) {
  if (!a.tape()) return {std::sqrt(a.value())};
  return {a.tape(), a.tape()->sqrt(a.id())};
}

Scalar acos(const Scalar& a) {
  if (!a.tape()) return {std::acos(a.value())};
  return {a.tape(), a.tape()->acos(a.id())};
}

Scalar fmax(const Scalar& a, double s) {
  if (!a.tape()) return {std::fmax(a.value(), s)};
  return {a.tape(), a.tape()->max_s(a.id(), s)};
}

Scalar fmin(const Scalar& a, double s) {
  if (!a.tape()) return {std::fmin(a.value(), s)};
  return {a.tape(), a.tape()->min_s(a.id(), s)};
}

void adam_step(std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
               AdamState& state, const AdamConfig& cfg) {
  if (params.size() != grads.size())
    throw Error(ErrorCode::ShapeMismatch, "adam_step: params/grads mismatch");
  if (state.m.empty()) {
    for (const Tensor* p : params) {
      state.m.emplace_back(p->rows, p->cols);
      state.v.emplace_back(p->rows, p->cols);
    }
  }
  ++state.t;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = grads[i];
    if (!p.same_shape(g)) throw Error(ErrorCode::ShapeMismatch, "adam_step: grad shape");
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    for (int k = 0; k < p.size(); ++k) {
      m.data[k] = cfg.beta1 * m.data[k] + (1.0 - cfg.beta1) * g.data[k];
      v.data[k] = cfg.beta2 * v.data[k] + (1.0 - cfg.beta2) * g.data[k] * g.data[k];
      const double mhat = m.data[k] / bc1;
      const double vhat = v.data[k] / bc2;
      p.data[k] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

double grad_check(const std::function<double(const std::vector<double>&)>& value,
                  const std::function<std::vector<double>(const std::vector<double>&)>& grad,
                  const std::vector<double>& x, double step) {
  const std::vector<double> analytic = grad(x);
  if (analytic.size() != x.size())
    throw Error(ErrorCode::ShapeMismatch, "grad_check: gradient size");
  double worst = 0;
  std::vector<double> probe = x;
  for (size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + step;
    const double hi = value(probe);
    probe[i] = x[i] - step;
    const double lo = value(probe);
    probe[i] = x[i];
    const double numeric = (hi - lo) / (2 * step);
    const double denom = std::fmax(1.0, std::fmax(std::fabs(analytic[i]), std::fabs(numeric)));
    worst = std::fmax(worst, std::fabs(analytic[i] - numeric) / denom);
  }
  return worst;
}

}  // namespace meshsmith::ad
