#pragma once

#include <array>
#include <string>
#include <vector>

#include "meshsmith/error.hpp"
#include "meshsmith/geometry.hpp"

namespace meshsmith {

/// Triangle mesh over 2D nodes. Triangles are 0-based index triples in
/// counter-clockwise order; `fixed[i]` marks boundary/immovable nodes.
struct Mesh {
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> triangles;
  std::vector<bool> fixed;

  int node_count() const { return static_cast<int>(nodes.size()); }
  int triangle_count() const { return static_cast<int>(triangles.size()); }

  void bbox(Vec2& lo, Vec2& hi) const;
  /// max(width, height) of the node bounding box.
  double bbox_extent() const;
  double bbox_area() const;
  /// Negative-element threshold: 1e-12 x bounding-box area.
  double area_epsilon() const { return 1e-12 * bbox_area(); }

  std::vector<int> interior_nodes() const;
  /// Triangles with signed area <= area_epsilon().
  int negative_element_count() const;
};

/// A free node with its one-ring neighborhood. `ring` is ordered
/// counter-clockwise; `edges` lists the graph connectivity over local node
/// ids, id 0 = center and ids 1..n = positions in `ring`.
struct StarPolygon {
  Vec2 center;
  std::vector<Vec2> ring;
  std::vector<std::array<int, 2>> edges;
  double eps_area = 0.0;

  int degree() const { return static_cast<int>(ring.size()); }

  /// Ring-and-center star with the implied fan connectivity. The
  /// negative-element threshold defaults to 1e-12 x the star's own
  /// bounding-box area; stars extracted from a mesh use the mesh's instead.
  static StarPolygon from_ring(const Vec2& center, std::vector<Vec2> ring);
};

/// Extracts the star polygon of an interior node. The ring starts at the
/// smallest neighbor index and runs counter-clockwise.
/// Throws BoundaryNode for fixed nodes, OpenRing when the incident triangles
/// do not close around the node.
StarPolygon star_polygon(const Mesh& mesh, int node_index);

/// True iff some fan triangle (candidate, ring[i], ring[i+1]) has signed area
/// <= star.eps_area. Non-finite candidates count as negative.
bool has_negative_element(const StarPolygon& star, const Vec2& candidate);

struct QualityReport {
  double min_angle_min = 0.0;
  double min_angle_mean = 0.0;
  double max_angle_max = 0.0;
  double max_angle_mean = 0.0;
  double inv_ar_min = 0.0;
  double inv_ar_mean = 0.0;
  std::array<long, 20> histogram{};  // f(q) binned uniformly over [0,1]
  long element_count = 0;
};

QualityReport quality_report(const Mesh& mesh);

/// Composite ranking metric
///   q^ = 1/6 [ (a_mean + a_min + 120 - b_max - b_mean)/60
///              + (1/q)_mean + (1/q)_min ]
/// with a the minimum angle, b the maximum angle (degrees). 2/3 for an
/// all-equilateral mesh.
double weighted_quality(const QualityReport& report);

/// Text format ".m2d":
///   nodes N        / N lines "x y F"   (F: 0 free, 1 fixed)
///   triangles M    / M lines "i j k"   (0-based, counter-clockwise)
/// Coordinates are written with 17 significant digits (round-trip exact).
Mesh load_m2d(const std::string& path);
void save_m2d(const Mesh& mesh, const std::string& path);
std::string to_m2d(const Mesh& mesh);
Mesh parse_m2d(const std::string& text, const std::string& origin = "<string>");

}  // namespace meshsmith
