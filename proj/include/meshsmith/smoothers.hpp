#pragma once

#include "meshsmith/geometry.hpp"
#include "meshsmith/mesh.hpp"

namespace meshsmith {

/// Local smoothing steps. Each takes a star polygon and proposes a new
/// position for its free node; none of them mutates the star. Callers are
/// expected to pass proposals through shift_truncate before committing.

/// Halves delta until center + delta creates no negative element, up to 30
/// halvings, then gives up and returns the zero vector. Non-finite deltas
/// fall through to zero. The result is always safe to commit.
Vec2 shift_truncate(const StarPolygon& star, Vec2 delta);

/// shift_truncate measured from an explicit base point instead of the
/// star's stored center (used by iterative smoothers).
Vec2 shift_truncate_from(const StarPolygon& star, const Vec2& base, Vec2 delta);

/// The scale 2^-k the truncation settles on (1 when delta is already safe,
/// 0 after 30 failed halvings), so callers can rescale a differentiable
/// displacement by a constant instead of re-deriving the clipped vector.
double shift_truncate_factor(const StarPolygon& star, const Vec2& base, const Vec2& delta);

/// Arithmetic mean of the ring.
Vec2 laplacian_step(const StarPolygon& star);

/// laplacian_step if it strictly lowers the star's mean transformed quality
/// metric and creates no negative element; otherwise the center, unchanged.
Vec2 smart_laplacian_step(const StarPolygon& star);

/// For each ring node x_i, rotates the center about x_i onto the bisector of
/// the ring's interior angle at x_i (distance preserved), then averages the
/// rotated candidates. Throws DegenerateAngle when a ring edge or the
/// center-to-ring segment has zero length.
Vec2 angle_based_step(const StarPolygon& star);

/// Area-weighted mean of fan-triangle circumcenters. Throws
/// DegenerateTriangle when any fan triangle's area is at or below the star's
/// epsilon (its circumcenter would be unbounded).
Vec2 cvt_step(const StarPolygon& star);

struct OptimConfig {
  int max_iters = 20;
  double lr = 0.05;  // Adam step size in normalized (unit-scale) coordinates
};

/// Gradient descent on the mean transformed metric: Adam iterations on the
/// center in normalized coordinates, every iterate shift-truncated, best
/// iterate returned. Never returns a position worse than the start.
Vec2 optimization_step(const StarPolygon& star, const OptimConfig& config = {});

}  // namespace meshsmith
