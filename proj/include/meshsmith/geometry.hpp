#pragma once

#include <array>
#include <cmath>
#include <limits>

namespace meshsmith {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2() = default;
  Vec2(double x_, double y_) : x(x_), y(y_) {}

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator/(double s) const { return {x / s, y / s}; }
  Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }

  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double cross(const Vec2& o) const { return x * o.y - y * o.x; }
  double norm2() const { return x * x + y * y; }
  double norm() const { return std::sqrt(norm2()); }
  bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

/// Half the cross product (b-a) x (c-a). Positive for counter-clockwise triangles.
inline double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * ((b - a).cross(c - a));
}

constexpr double kSqrt3 = 1.7320508075688772935;
constexpr double kPi = 3.14159265358979323846;
constexpr double kRadToDeg = 180.0 / kPi;

/// Per-element shape measures. Edge naming: m = |b-a|, n = |c-b|, l = |a-c|.
/// aspect_ratio q = (m^2+n^2+l^2) / (4*sqrt(3)*S); 1 for equilateral, +inf at
/// degeneracy. transformed = 1 - 1/q in [0,1), reported as 1 when S <= 0.
struct TriangleQuality {
  std::array<double, 3> angles_deg{};  // at vertices a, b, c
  double edge_m = 0.0;
  double edge_n = 0.0;
  double edge_l = 0.0;
  double area = 0.0;  // signed
  double aspect_ratio = std::numeric_limits<double>::infinity();
  double transformed = 1.0;

  double min_angle() const {
    return std::fmin(angles_deg[0], std::fmin(angles_deg[1], angles_deg[2]));
  }
  double max_angle() const {
    return std::fmax(angles_deg[0], std::fmax(angles_deg[1], angles_deg[2]));
  }
  double inv_aspect_ratio() const {
    return std::isfinite(aspect_ratio) ? 1.0 / aspect_ratio : 0.0;
  }
};

inline double angle_at(const Vec2& v, const Vec2& p, const Vec2& q) {
  Vec2 u = p - v, w = q - v;
  const double nu = u.norm(), nw = w.norm();
  if (nu == 0.0 || nw == 0.0) return 0.0;
  double c = u.dot(w) / (nu * nw);
  c = std::fmin(1.0, std::fmax(-1.0, c));
  return std::acos(c) * kRadToDeg;
}

inline TriangleQuality triangle_quality(const Vec2& a, const Vec2& b, const Vec2& c) {
  TriangleQuality q;
  q.edge_m = (b - a).norm();
  q.edge_n = (c - b).norm();
  q.edge_l = (a - c).norm();
  q.area = signed_area(a, b, c);
  q.angles_deg = {angle_at(a, b, c), angle_at(b, c, a), angle_at(c, a, b)};
  const double sum2 = q.edge_m * q.edge_m + q.edge_n * q.edge_n + q.edge_l * q.edge_l;
  if (q.area > 0.0 && sum2 > 0.0) {
    q.aspect_ratio = sum2 / (4.0 * kSqrt3 * q.area);
    q.transformed = 1.0 - 1.0 / q.aspect_ratio;
  } else {
    q.aspect_ratio = std::numeric_limits<double>::infinity();
    q.transformed = 1.0;
  }
  return q;
}

/// Circumcenter of triangle abc. Returns false when the points are (nearly)
/// collinear and the center is unbounded.
inline bool circumcenter(const Vec2& a, const Vec2& b, const Vec2& c, Vec2& out) {
  const Vec2 ab = b - a, ac = c - a;
  const double d = 2.0 * ab.cross(ac);
  if (d == 0.0 || !std::isfinite(d)) return false;
  const double ab2 = ab.norm2(), ac2 = ac.norm2();
  out.x = a.x + (ac.y * ab2 - ab.y * ac2) / d;
  out.y = a.y + (ab.x * ac2 - ac.x * ab2) / d;
  return out.finite();
}

}  // namespace meshsmith
