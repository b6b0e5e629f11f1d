#pragma once

#include <array>
#include <cmath>
#include <string>

#include "meshsmith/autodiff.hpp"
#include "meshsmith/geometry.hpp"
#include "meshsmith/mesh.hpp"

namespace meshsmith {

/// Per-star quality losses. Each is a function of the candidate center
/// position only; the ring enters as constants. Templated over T in
/// {double, ad::Scalar} so one formula serves both the fast path and the
/// differentiable path.
enum class LossKind { Metric, MinMaxAngle, AspectRatio, Cosine };

/// CLI spelling: metric | minmax | ar | cos.
inline LossKind parse_loss_kind(const std::string& name) {
  if (name == "metric") return LossKind::Metric;
  if (name == "minmax") return LossKind::MinMaxAngle;
  if (name == "ar") return LossKind::AspectRatio;
  if (name == "cos") return LossKind::Cosine;
  throw Error(ErrorCode::ParseError, "unknown loss '" + name + "'");
}

inline const char* loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::Metric: return "metric";
    case LossKind::MinMaxAngle: return "minmax_angle";
    case LossKind::AspectRatio: return "aspect_ratio";
    default: return "cosine";
  }
}

namespace detail {

/// Fan triangle (c, a, b) with c the variable candidate: edge vectors,
/// squared lengths, and cross = 2 x signed area. The a-b edge is constant.
template <typename T>
struct FanTri {
  T ux, uy, vx, vy;
  T cross, m2, l2;
  double n2, wx, wy;

  FanTri(const T& cx, const T& cy, const Vec2& a, const Vec2& b)
      : ux(a.x - cx),
        uy(a.y - cy),
        vx(b.x - cx),
        vy(b.y - cy),
        cross(ux * vy - uy * vx),
        m2(ux * ux + uy * uy),
        l2(vx * vx + vy * vy),
        n2((b - a).norm2()),
        wx(b.x - a.x),
        wy(b.y - a.y) {}
};

/// Cosines of the angles at c, a, b. Pure dot products, no clamping; callers
/// feeding acos must clamp first.
template <typename T>
std::array<T, 3> fan_cosines(const FanTri<T>& t) {
  using std::sqrt;
  T lu = sqrt(t.m2);
  T lv = sqrt(t.l2);
  const double lw = std::sqrt(t.n2);
  T cos_c = (t.ux * t.vx + t.uy * t.vy) / (lu * lv);
  T cos_a = -(t.ux * t.wx + t.uy * t.wy) / (lu * lw);
  T cos_b = (t.vx * t.wx + t.vy * t.wy) / (lv * lw);
  return {cos_c, cos_a, cos_b};
}

}  // namespace detail

/// Mean over fan triangles of 1 - 4sqrt(3)S/(m^2+n^2+l^2) with SIGNED area S:
/// equilateral fan gives 0, valid stars stay in [0,1), an inverted element
/// contributes a term > 1 whose gradient pushes the candidate back inside.
/// A collapsed (zero-area) configuration yields 1, not an error.
template <typename T>
T metric_loss(const T& cx, const T& cy, const StarPolygon& star) {
  const int n = star.degree();
  T total = 0.0;
  for (int k = 0; k < n; ++k) {
    detail::FanTri<T> t(cx, cy, star.ring[k], star.ring[(k + 1) % n]);
    total = total + (1.0 - (t.cross * (2.0 * kSqrt3)) / (t.m2 + t.l2 + t.n2));
  }
  return total / static_cast<double>(n);
}

/// Mean over fan triangles of each triangle's largest angle, in radians. The
/// argmax branch is chosen by value, so the gradient follows the active
/// angle; ties get one branch's subgradient.
template <typename T>
T minmax_angle_loss(const T& cx, const T& cy, const StarPolygon& star) {
  using std::acos;
  using std::fmax;
  using std::fmin;
  const int n = star.degree();
  T total = 0.0;
  for (int k = 0; k < n; ++k) {
    detail::FanTri<T> t(cx, cy, star.ring[k], star.ring[(k + 1) % n]);
    std::array<T, 3> c = detail::fan_cosines(t);
    T smallest = c[0];  // largest angle has the smallest cosine
    if (ad::val_of(c[1]) < ad::val_of(smallest)) smallest = c[1];
    if (ad::val_of(c[2]) < ad::val_of(smallest)) smallest = c[2];
    total = total + acos(fmax(fmin(smallest, 1.0 - 1e-12), -(1.0 - 1e-12)));
  }
  return total / static_cast<double>(n);
}

/// Mean of q = (m^2+n^2+l^2)/(4sqrt(3)S) with signed area. Blows up as any
/// fan triangle flattens; that divergence is the point of keeping it.
template <typename T>
T aspect_ratio_loss(const T& cx, const T& cy, const StarPolygon& star) {
  const int n = star.degree();
  T total = 0.0;
  for (int k = 0; k < n; ++k) {
    detail::FanTri<T> t(cx, cy, star.ring[k], star.ring[(k + 1) % n]);
    total = total + (t.m2 + t.l2 + t.n2) / (t.cross * (2.0 * kSqrt3));
  }
  return total / static_cast<double>(n);
}

/// (1/(3n)) x sum over fan triangles and their three angles of
/// (cos theta - 1/2)^2. Zero exactly on an equilateral fan. The per-triangle
/// mean ranges over [0, 11/12): one angle near pi contributes (3/2)^2 while
/// the other two approach (1/2)^2 each.
template <typename T>
T cosine_loss(const T& cx, const T& cy, const StarPolygon& star) {
  const int n = star.degree();
  T total = 0.0;
  for (int k = 0; k < n; ++k) {
    detail::FanTri<T> t(cx, cy, star.ring[k], star.ring[(k + 1) % n]);
    for (const T& c : detail::fan_cosines(t)) {
      T d = c - 0.5;
      total = total + d * d;
    }
  }
  return total / static_cast<double>(3 * n);
}

template <typename T>
T star_loss(LossKind kind, const T& cx, const T& cy, const StarPolygon& star) {
  switch (kind) {
    case LossKind::Metric: return metric_loss(cx, cy, star);
    case LossKind::MinMaxAngle: return minmax_angle_loss(cx, cy, star);
    case LossKind::AspectRatio: return aspect_ratio_loss(cx, cy, star);
    default: return cosine_loss(cx, cy, star);
  }
}

}  // namespace meshsmith
