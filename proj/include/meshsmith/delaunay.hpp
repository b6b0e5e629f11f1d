#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "meshsmith/mesh.hpp"

namespace meshsmith {

/// Delaunay triangulation of a point set (incremental Bowyer-Watson with a
/// super-triangle). Node order is preserved; triangles come out in canonical
/// order (smallest index first, lexicographically sorted) so equal inputs give
/// byte-equal meshes. Convex-hull nodes, including nodes lying on hull edges,
/// are flagged fixed. Cocircular ties are broken by insertion order.
///
/// Throws DuplicatePoints (two points closer than 1e-12) and DegenerateInput
/// (fewer than 3 points, or all collinear).
Mesh delaunay_triangulate(const std::vector<Vec2>& points);

/// Square test domain: 4*ceil(sqrt(node_count)) evenly spaced fixed nodes on
/// the boundary (corners included) plus uniform random nodes in the open
/// square, Delaunay-triangulated. node_count is the total budget; when it is
/// at or below the boundary minimum the mesh is boundary-only. Deterministic
/// given (node_count, side, seed).
Mesh random_square_mesh(int node_count, double side, std::uint64_t seed);

struct DatasetSpec {
  int mesh_count = 20;
  std::array<int, 3> split = {6, 2, 2};  // train : val : test ratio
  int node_count_min = 200;
  int node_count_max = 800;
  double side_min = 1.0;
  double side_max = 10.0;
  std::uint64_t seed = 0;
};

struct Dataset {
  std::vector<Mesh> train, val, test;
  // File names relative to the manifest, filled by write_dataset/load_dataset.
  std::vector<std::string> train_names, val_names, test_names;
};

/// Largest-remainder partition of mesh_count into the three ratio buckets.
/// Remainder ties go to the earlier bucket (train, then val).
std::array<int, 3> split_counts(int mesh_count, const std::array<int, 3>& ratios);

/// mesh_count meshes with node counts and side lengths drawn per mesh from the
/// spec ranges; per-mesh RNG streams are derived from (seed, mesh index) so
/// meshes are independent of mesh_count ordering. Deterministic given spec.
Dataset build_dataset(const DatasetSpec& spec);

/// Writes train_000.m2d / val_000.m2d / test_000.m2d plus dataset.json into
/// out_dir (created if missing) and records the names on the dataset.
void write_dataset(Dataset& ds, const DatasetSpec& spec, const std::string& out_dir);

/// Loads a dataset.json manifest and the meshes it lists (paths are resolved
/// relative to the manifest). Throws VersionMismatch on a foreign format tag
/// and CorruptFile on malformed JSON.
Dataset load_dataset(const std::string& manifest_path);

}  // namespace meshsmith
