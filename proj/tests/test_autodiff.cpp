#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "meshsmith/autodiff.hpp"
#include "meshsmith/rng.hpp"

using namespace meshsmith;
namespace ad = meshsmith::ad;

namespace {

// Rebuilds the same single-input program per evaluation so grad_check can
// probe it with central differences.
struct Prog {
  int rows, cols;
  std::function<int(ad::Tape&, int)> build;  // leaf id -> 1x1 output id
};

double check_prog(const Prog& p, const std::vector<double>& x0) {
  auto eval = [&](const std::vector<double>& x, bool want_grad,
                  std::vector<double>* g) -> double {
    ad::Tape t;
    ad::Tensor in(p.rows, p.cols);
    in.data = x;
    const int id = t.leaf(in, true);
    const int out = p.build(t, id);
    if (want_grad) {
      t.backward(out);
      *g = t.grad(id).data;
    }
    return t.value(out).data[0];
  };
  auto value = [&](const std::vector<double>& x) { return eval(x, false, nullptr); };
  auto grad = [&](const std::vector<double>& x) {
    std::vector<double> g;
    eval(x, true, &g);
    return g;
  };
  return ad::grad_check(value, grad, x0);
}

// Distinct weights so a reduction to scalar keeps per-element gradients apart.
ad::Tensor weights(int rows, int cols) {
  ad::Tensor w(rows, cols);
  for (int i = 0; i < w.size(); ++i) w.data[i] = 0.3 + 0.7 * i;
  return w;
}

std::vector<double> random_vec(int n, double lo, double hi, uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

}  // namespace

TEST_CASE("forward values") {
  ad::Tape t;
  const int a = t.leaf(ad::Tensor::from(2, 2, {1, 2, 3, 4}), true);
  const int b = t.leaf(ad::Tensor::from(2, 2, {5, 6, 7, 8}), true);

  CHECK(t.value(t.add(a, b)).data == std::vector<double>{6, 8, 10, 12});
  CHECK(t.value(t.sub(a, b)).data == std::vector<double>{-4, -4, -4, -4});
  CHECK(t.value(t.mul(a, b)).data == std::vector<double>{5, 12, 21, 32});
  // [[1,2],[3,4]] @ [[5,6],[7,8]] = [[19,22],[43,50]]
  CHECK(t.value(t.matmul(a, b)).data == std::vector<double>{19, 22, 43, 50});

  const int r = t.leaf(ad::Tensor::row({10, 20}), false);
  CHECK(t.value(t.add(a, r)).data == std::vector<double>{11, 22, 13, 24});
  const int s = t.constant(100.0);
  CHECK(t.value(t.add(a, s)).data == std::vector<double>{101, 102, 103, 104});

  CHECK(t.value(t.sum(a)).data[0] == 10.0);
  CHECK(t.value(t.mean(a)).data[0] == 2.5);
  CHECK(t.value(t.colmean(a)).data == std::vector<double>{2, 3});
  CHECK(t.value(t.select_row(a, 1)).data == std::vector<double>{3, 4});
  CHECK(t.value(t.select(a, 1, 0)).data[0] == 3.0);

  const int neg = t.leaf(ad::Tensor::row({-2, 0, 3}), false);
  CHECK(t.value(t.relu(neg)).data == std::vector<double>{0, 0, 3});
  CHECK(t.value(t.rsub_s(neg, 1.0)).data == std::vector<double>{3, 1, -2});
  CHECK(t.value(t.max_s(neg, 0.5)).data == std::vector<double>{0.5, 0.5, 3});
  CHECK(t.value(t.min_s(neg, 0.5)).data == std::vector<double>{-2, 0, 0.5});
  CHECK(t.value(t.mul_s(neg, -2.0)).data == std::vector<double>{4, 0, -6});
  CHECK(t.value(t.add_s(neg, 2.0)).data == std::vector<double>{0, 2, 5});
}

TEST_CASE("per-primitive gradients match central differences") {
  // acceptance bar for individual primitives is 1e-6
  constexpr double kTol = 1e-6;
  const ad::Tensor w23 = weights(2, 3);

  auto reduced = [&](std::function<int(ad::Tape&, int)> op) {
    return Prog{2, 3, [op, w23](ad::Tape& t, int x) {
                  return t.sum(t.mul(op(t, x), t.constant(w23)));
                }};
  };

  const std::vector<double> pos = random_vec(6, 0.3, 2.0, 11);
  const std::vector<double> mixed = random_vec(6, -2.0, 2.0, 12);
  const std::vector<double> cosrange = random_vec(6, -0.9, 0.9, 13);

  CHECK(check_prog(reduced([](ad::Tape& t, int x) { return t.relu(x); }), mixed) < kTol);
  CHECK(check_prog(reduced([](ad::Tape& t, int x) { return t.sqrt(x); }), pos) < kTol);
  CHECK(check_prog(reduced([](ad::Tape& t, int x) { return t.square(x); }), mixed) < kTol);
  CHECK(check_prog(reduced([](ad::Tape& t, int x) { return t.neg(x); }), mixed) < kTol);
  CHECK(check_prog(reduced([](ad::Tape& t, int x) { return t.acos(x); }), cosrange) < kTol);
  CHECK(check_prog(reduced([](ad::Tape& t, int x) { return t.add_s(x, 1.7); }), mixed) < kTol);
  CHECK(check_prog(reduced([](ad::Tape& t, int x) { return t.mul_s(x, -0.6); }), mixed) < kTol);
  CHECK(check_prog(reduced([](ad::Tape& t, int x) { return t.rsub_s(x, 2.5); }), mixed) < kTol);
  CHECK(check_prog(reduced([](ad::Tape& t, int x) { return t.max_s(x, 0.25); }), mixed) < kTol);
  CHECK(check_prog(reduced([](ad::Tape& t, int x) { return t.min_s(x, 0.25); }), mixed) < kTol);

  CHECK(check_prog({2, 3, [](ad::Tape& t, int x) { return t.sum(x); }}, mixed) < kTol);
  CHECK(check_prog({2, 3, [](ad::Tape& t, int x) { return t.mean(x); }}, mixed) < kTol);
  CHECK(check_prog({2, 3,
                    [&](ad::Tape& t, int x) {
                      return t.sum(t.mul(t.colmean(x), t.constant(weights(1, 3))));
                    }},
                   mixed) < kTol);
  CHECK(check_prog({2, 3,
                    [&](ad::Tape& t, int x) {
                      return t.sum(t.mul(t.select_row(x, 1), t.constant(weights(1, 3))));
                    }},
                   mixed) < kTol);
  CHECK(check_prog({2, 3, [](ad::Tape& t, int x) { return t.select(x, 0, 2); }}, mixed) < kTol);

  // binary ops against a fixed second operand, both argument slots
  const ad::Tensor other = ad::Tensor::from(2, 3, {0.7, -1.2, 0.5, 2.0, -0.4, 1.1});
  auto with_other = [&](std::function<int(ad::Tape&, int, int)> op, bool x_first) {
    return Prog{2, 3, [op, other, w23, x_first](ad::Tape& t, int x) {
                  const int o = t.leaf(other, false);
                  const int y = x_first ? op(t, x, o) : op(t, o, x);
                  return t.sum(t.mul(y, t.constant(w23)));
                }};
  };
  auto add_op = [](ad::Tape& t, int a, int b) { return t.add(a, b); };
  auto sub_op = [](ad::Tape& t, int a, int b) { return t.sub(a, b); };
  auto mul_op = [](ad::Tape& t, int a, int b) { return t.mul(a, b); };
  auto div_op = [](ad::Tape& t, int a, int b) { return t.div(a, b); };
  for (bool x_first : {true, false}) {
    CHECK(check_prog(with_other(add_op, x_first), mixed) < kTol);
    CHECK(check_prog(with_other(sub_op, x_first), mixed) < kTol);
    CHECK(check_prog(with_other(mul_op, x_first), mixed) < kTol);
    CHECK(check_prog(with_other(div_op, x_first), pos) < kTol);  // x in denom: stay off 0
  }

  // matmul, both slots
  const ad::Tensor m32 = ad::Tensor::from(3, 2, {0.4, -0.9, 1.3, 0.2, -0.6, 0.8});
  CHECK(check_prog({2, 3,
                    [&](ad::Tape& t, int x) {
                      return t.sum(t.mul(t.matmul(x, t.leaf(m32, false)),
                                         t.constant(weights(2, 2))));
                    }},
                   mixed) < kTol);
  CHECK(check_prog({2, 3,
                    [&](ad::Tape& t, int x) {
                      ad::Tensor m22 = ad::Tensor::from(2, 2, {1.1, -0.3, 0.7, 0.9});
                      return t.sum(t.mul(t.matmul(t.leaf(m22, false), x),
                                         t.constant(weights(2, 3))));
                    }},
                   mixed) < kTol);
}

TEST_CASE("broadcast operand gradients are reduced") {
  constexpr double kTol = 1e-6;
  // 1x3 row against 4x3: row grad must sum over rows
  const ad::Tensor big = ad::Tensor::from(
      4, 3, {0.2, 1.4, -0.7, 0.9, -1.1, 0.3, 1.8, 0.5, -0.2, -0.6, 1.0, 0.4});
  CHECK(check_prog({1, 3,
                    [&](ad::Tape& t, int x) {
                      return t.mean(t.mul(x, t.leaf(big, false)));
                    }},
                   random_vec(3, -1, 1, 21)) < kTol);
  // 1x1 against 4x3 through div (scalar in denominator)
  CHECK(check_prog({1, 1,
                    [&](ad::Tape& t, int x) {
                      return t.sum(t.div(t.leaf(big, false), x));
                    }},
                   {1.7}) < kTol);

  // exact hand value: d/dx sum(x_row * big) = colsum(big)
  ad::Tape t;
  const int x = t.leaf(ad::Tensor::row({1, 2, 3}), true);
  const int out = t.sum(t.mul(x, t.leaf(big, false)));
  t.backward(out);
  const ad::Tensor& g = t.grad(x);
  CHECK(g.rows == 1);
  CHECK(g.cols == 3);
  CHECK(g.data[0] == doctest::Approx(2.3).epsilon(1e-12));
  CHECK(g.data[1] == doctest::Approx(1.8).epsilon(1e-12));
  CHECK(g.data[2] == doctest::Approx(-0.2).epsilon(1e-12));
}

TEST_CASE("reused node accumulates gradient") {
  ad::Tape t;
  const int x = t.leaf(ad::Tensor::scalar(3.0), true);
  // x*x + x*x: both branches feed the same leaf
  const int out = t.add(t.mul(x, x), t.mul(x, x));
  t.backward(out);
  CHECK(t.value(out).data[0] == 18.0);
  CHECK(t.grad(x).data[0] == doctest::Approx(12.0).epsilon(1e-15));  // 4x
}

TEST_CASE("gradient does not flow into constants") {
  ad::Tape t;
  const int x = t.leaf(ad::Tensor::scalar(2.0), true);
  const int c = t.constant(5.0);
  const int out = t.mul(x, c);
  t.backward(out);
  CHECK(t.grad(x).data[0] == 5.0);
  CHECK_FALSE(t.needs_grad(c));
  CHECK(t.grad(c).data[0] == 0.0);
}

TEST_CASE("shape errors") {
  ad::Tape t;
  const int a = t.leaf(ad::Tensor(2, 3), false);
  const int b = t.leaf(ad::Tensor(3, 2), false);
  CHECK_THROWS_AS(t.add(a, b), Error);
  CHECK_THROWS_AS(t.matmul(a, a), Error);  // inner dims 3 vs 2
  CHECK_THROWS_AS(t.backward(a), Error);   // non-scalar seed
  try {
    t.backward(a);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonScalarOutput);
  }
  try {
    t.add(a, b);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ShapeMismatch);
  }
  CHECK_THROWS_AS(ad::Tensor::from(2, 2, {1, 2, 3}), Error);
}

TEST_CASE("reset drops nodes and allows reuse") {
  ad::Tape t;
  t.leaf(ad::Tensor::scalar(1.0), true);
  CHECK(t.size() == 1);
  t.reset();
  CHECK(t.size() == 0);
  const int x = t.leaf(ad::Tensor::scalar(4.0), true);
  const int out = t.sqrt(x);
  t.backward(out);
  CHECK(t.value(out).data[0] == 2.0);
  CHECK(t.grad(x).data[0] == doctest::Approx(0.25).epsilon(1e-15));
}

namespace {

// Same expression works for double and for taped Scalar.
template <typename T>
T demo_expr(T x, T y) {
  using std::sqrt;
  using std::acos;
  using std::fmax;
  T r = sqrt(x * x + y * y);
  T c = fmax(fmin(x / r, 1.0 - 1e-12), -(1.0 - 1e-12));
  return acos(c) * 2.0 + (1.0 - y) / (r + 0.5) - (-x);
}

}  // namespace

TEST_CASE("Scalar mirrors double and differentiates") {
  const double x0 = 0.8, y0 = -0.6;
  const double plain = demo_expr(x0, y0);

  ad::Tape t;
  const int xi = t.leaf(ad::Tensor::scalar(x0), true);
  const int yi = t.leaf(ad::Tensor::scalar(y0), true);
  ad::Scalar out = demo_expr(ad::Scalar(&t, xi), ad::Scalar(&t, yi));
  CHECK(out.value() == doctest::Approx(plain).epsilon(1e-15));

  t.backward(out.id());
  const double gx = t.grad(xi).data[0];
  const double gy = t.grad(yi).data[0];

  auto value = [&](const std::vector<double>& v) { return demo_expr(v[0], v[1]); };
  auto grad = [&](const std::vector<double>&) { return std::vector<double>{gx, gy}; };
  CHECK(ad::grad_check(value, grad, {x0, y0}) < 1e-6);
}

TEST_CASE("Scalar constants stay off the tape") {
  ad::Tape t;
  const int xi = t.leaf(ad::Tensor::scalar(2.0), true);
  ad::Scalar x(&t, xi);
  const int before = t.size();
  ad::Scalar y = (x * 3.0 + 1.0) / 2.0 - 0.25;  // all immediates, one node each
  CHECK(y.value() == doctest::Approx(3.25).epsilon(1e-15));
  CHECK(t.size() == before + 4);

  ad::Scalar pure = ad::Scalar(1.5) * 2.0 + 1.0;
  CHECK(pure.tape() == nullptr);
  CHECK(pure.value() == 4.0);
  CHECK(t.size() == before + 4);
}

TEST_CASE("adam first steps") {
  ad::Tensor p = ad::Tensor::scalar(1.0);
  std::vector<ad::Tensor*> params{&p};
  ad::AdamState st;
  ad::AdamConfig cfg;
  cfg.lr = 0.1;

  // with bias correction a constant unit gradient moves by ~lr each step
  ad::Tensor g = ad::Tensor::scalar(1.0);
  ad::adam_step(params, {g}, st, cfg);
  CHECK(p.data[0] == doctest::Approx(0.9).epsilon(1e-7));
  ad::adam_step(params, {g}, st, cfg);
  CHECK(p.data[0] == doctest::Approx(0.8).epsilon(1e-7));
  CHECK(st.t == 2);

  // gradient sign drives direction
  ad::Tensor gneg = ad::Tensor::scalar(-2.0);
  const double before = p.data[0];
  ad::adam_step(params, {gneg}, st, cfg);
  CHECK(p.data[0] > before);
}

TEST_CASE("grad_check flags a wrong gradient") {
  auto value = [](const std::vector<double>& x) { return x[0] * x[0]; };
  auto good = [](const std::vector<double>& x) { return std::vector<double>{2 * x[0]}; };
  auto bad = [](const std::vector<double>& x) { return std::vector<double>{3 * x[0]}; };
  CHECK(ad::grad_check(value, good, {1.5}) < 1e-9);
  CHECK(ad::grad_check(value, bad, {1.5}) > 0.3);
}
