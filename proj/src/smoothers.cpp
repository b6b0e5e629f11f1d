#include "meshsmith/smoothers.hpp"

#include <cmath>

#include "meshsmith/autodiff.hpp"
#include "meshsmith/losses.hpp"

namespace meshsmith {

double shift_truncate_factor(const StarPolygon& star, const Vec2& base,
                             const Vec2& delta) {
  double c = 1.0;
  for (int k = 0; k <= 30; ++k) {
    if (!has_negative_element(star, base + delta * c)) return c;
    c *= 0.5;
  }
  return 0.0;
}

Vec2 shift_truncate_from(const StarPolygon& star, const Vec2& base, Vec2 delta) {
  const double c = shift_truncate_factor(star, base, delta);
  // explicit zero: delta may be non-finite and NaN * 0 stays NaN
  return c == 0.0 ? Vec2{0, 0} : delta * c;
}

Vec2 shift_truncate(const StarPolygon& star, Vec2 delta) {
  return shift_truncate_from(star, star.center, delta);
}

Vec2 laplacian_step(const StarPolygon& star) {
  Vec2 acc{0, 0};
  for (const Vec2& p : star.ring) acc = acc + p;
  return acc * (1.0 / star.degree());
}

Vec2 smart_laplacian_step(const StarPolygon& star) {
  const Vec2 candidate = laplacian_step(star);
  if (has_negative_element(star, candidate)) return star.center;
  const double before = metric_loss(star.center.x, star.center.y, star);
  const double after = metric_loss(candidate.x, candidate.y, star);
  return after < before ? candidate : star.center;
}

Vec2 angle_based_step(const StarPolygon& star) {
  const int n = star.degree();
  Vec2 acc{0, 0};
  for (int i = 0; i < n; ++i) {
    const Vec2& xi = star.ring[i];
    const Vec2 e1 = star.ring[(i + n - 1) % n] - xi;
    const Vec2 e2 = star.ring[(i + 1) % n] - xi;
    const Vec2 v = star.center - xi;
    if (e1.norm2() == 0.0 || e2.norm2() == 0.0 || v.norm2() == 0.0)
      throw Error(ErrorCode::DegenerateAngle, "zero-length edge at ring node");
    const double a1 = std::atan2(e1.cross(v), e1.dot(v));
    const double a2 = std::atan2(v.cross(e2), v.dot(e2));
    const double th = 0.5 * (a2 - a1);
    const double c = std::cos(th), s = std::sin(th);
    acc = acc + xi + Vec2{c * v.x - s * v.y, s * v.x + c * v.y};
  }
  return acc * (1.0 / n);
}

Vec2 cvt_step(const StarPolygon& star) {
  const int n = star.degree();
  Vec2 acc{0, 0};
  double total_area = 0;
  for (int k = 0; k < n; ++k) {
    const Vec2& a = star.ring[k];
    const Vec2& b = star.ring[(k + 1) % n];
    const double area = signed_area(star.center, a, b);
    Vec2 cc;
    if (area <= star.eps_area || !circumcenter(star.center, a, b, cc))
      throw Error(ErrorCode::DegenerateTriangle, "unbounded circumcenter in star");
    acc = acc + cc * area;
    total_area += area;
  }
  return acc * (1.0 / total_area);
}

Vec2 optimization_step(const StarPolygon& star, const OptimConfig& config) {
  namespace ad = meshsmith::ad;
  Vec2 lo = star.center, hi = star.center;
  for (const Vec2& p : star.ring) {
    lo.x = std::fmin(lo.x, p.x);
    lo.y = std::fmin(lo.y, p.y);
    hi.x = std::fmax(hi.x, p.x);
    hi.y = std::fmax(hi.y, p.y);
  }
  const double d = std::fmax(hi.x - lo.x, hi.y - lo.y);
  if (!(d > 0)) return star.center;

  // normalized frame: origin at the free node, uniform scale 1/d
  StarPolygon ns;
  ns.center = {0, 0};
  ns.ring.reserve(star.ring.size());
  for (const Vec2& p : star.ring) ns.ring.push_back((p - star.center) * (1.0 / d));
  ns.eps_area = star.eps_area / (d * d);

  Vec2 u{0, 0};
  Vec2 best = u;
  double best_loss = metric_loss(u.x, u.y, ns);

  ad::Tape tape;
  ad::Tensor pos = ad::Tensor::row({0, 0});
  std::vector<ad::Tensor*> params{&pos};
  ad::AdamState state;
  ad::AdamConfig adam;
  adam.lr = config.lr;

  for (int iter = 0; iter < config.max_iters; ++iter) {
    tape.reset();
    const int xi = tape.leaf(ad::Tensor::scalar(u.x), true);
    const int yi = tape.leaf(ad::Tensor::scalar(u.y), true);
    const ad::Scalar loss =
        metric_loss(ad::Scalar(&tape, xi), ad::Scalar(&tape, yi), ns);
    tape.backward(loss.id());
    ad::Tensor g(1, 2);
    g.data[0] = tape.grad(xi).data[0];
    g.data[1] = tape.grad(yi).data[0];

    pos.data = {u.x, u.y};
    ad::adam_step(params, {g}, state, adam);
    const Vec2 delta =
        shift_truncate_from(ns, u, {pos.data[0] - u.x, pos.data[1] - u.y});
    u = u + delta;

    const double loss_now = metric_loss(u.x, u.y, ns);
    if (loss_now < best_loss) {
      best_loss = loss_now;
      best = u;
    }
  }
  return star.center + best * d;
}

}  // namespace meshsmith
