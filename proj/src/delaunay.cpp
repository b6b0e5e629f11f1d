#include "meshsmith/delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "meshsmith/rng.hpp"

namespace meshsmith {

namespace {

struct BwTriangle {
  int a, b, c;
};

// The three helper vertices live at infinity in these directions (CCW). A
// finite super-triangle leaves coverage notches: a point slightly inside the
// hull can still connect to super vertices, and removing those punches a hole
// into the hull. Taking the limit makes the finite triangles tile the convex
// hull exactly.
const Vec2 kInfDir[3] = {{0.0, 1.0},
                         {-0.8660254037844387, -0.5},
                         {0.8660254037844387, -0.5}};

// Strictly-inside-circumcircle with a relative margin, so cocircular points
// (fp noise included) count as outside and ties keep the first-inserted
// configuration. Triangles are CCW throughout; vertices with index >= n are
// infinite and the circle degenerates to a half-plane (limit of the
// determinant as those vertices recede).
class InCircle {
 public:
  InCircle(const std::vector<Vec2>& pts, int n) : pts_(pts), n_(n) {}

  bool operator()(const BwTriangle& t, Vec2 p) const {
    std::array<int, 3> v{t.a, t.b, t.c};
    const int infinite = (v[0] >= n_) + (v[1] >= n_) + (v[2] >= n_);
    // rotate so infinite vertices come last; cyclic, keeps orientation
    if (infinite == 1)
      while (v[2] < n_) std::rotate(v.begin(), v.begin() + 1, v.end());
    else if (infinite == 2)
      while (v[0] >= n_) std::rotate(v.begin(), v.begin() + 1, v.end());
    switch (infinite) {
      case 0:
        return finite_case(pts_[v[0]], pts_[v[1]], pts_[v[2]], p);
      case 1: {
        // circle through (a, b, far point) -> half-plane left of a->b
        const Vec2 a = pts_[v[0]], b = pts_[v[1]];
        const double val = (b - a).cross(p - a);
        const double margin = 1e-12 * (b - a).norm() * (p - a).norm();
        if (val > margin) return true;
        if (val < -margin) return false;
        // p on the hull edge line: conflict only inside the open segment,
        // which splits the hull edge instead of minting a zero-area triangle
        const double along = (p - a).dot(b - a);
        return along > 0 && along < (b - a).norm2();
      }
      case 2: {
        // circle through (a, two far points) -> half-plane through a spanned
        // by the chord direction u - v
        const Vec2 a = pts_[v[0]];
        const Vec2 uv = kInfDir[v[1] - n_] - kInfDir[v[2] - n_];
        const double val = (a - p).cross(uv);
        return val > 1e-12 * (a - p).norm() * uv.norm();
      }
      default:
        return true;  // the all-infinite start triangle contains everything
    }
  }

 private:
  static bool finite_case(Vec2 a, Vec2 b, Vec2 c, Vec2 p) {
    const double adx = a.x - p.x, ady = a.y - p.y;
    const double bdx = b.x - p.x, bdy = b.y - p.y;
    const double cdx = c.x - p.x, cdy = c.y - p.y;
    const double alift = adx * adx + ady * ady;
    const double blift = bdx * bdx + bdy * bdy;
    const double clift = cdx * cdx + cdy * cdy;
    const double bxcy = bdx * cdy, bycx = bdy * cdx;
    const double cxay = cdx * ady, cyax = cdy * adx;
    const double axby = adx * bdy, aybx = ady * bdx;
    const double det = alift * (bxcy - bycx) + blift * (cxay - cyax) + clift * (axby - aybx);
    // the permanent bounds the determinant's rounding error
    const double permanent = alift * (std::fabs(bxcy) + std::fabs(bycx)) +
                             blift * (std::fabs(cxay) + std::fabs(cyax)) +
                             clift * (std::fabs(axby) + std::fabs(aybx));
    return det > 1e-12 * permanent;
  }

  const std::vector<Vec2>& pts_;
  int n_;
};

}  // namespace

Mesh delaunay_triangulate(const std::vector<Vec2>& points) {
  const int n = static_cast<int>(points.size());
  if (n < 3) throw Error(ErrorCode::DegenerateInput, "need at least 3 points");

  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if ((points[i] - points[j]).norm2() < 1e-24) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "points %d and %d coincide", i, j);
        throw Error(ErrorCode::DuplicatePoints, buf);
      }
    }
  }

  // Collinearity: find the widest baseline from point 0, then the point
  // farthest off it.
  int far0 = 1;
  for (int i = 2; i < n; ++i)
    if ((points[i] - points[0]).norm2() > (points[far0] - points[0]).norm2()) far0 = i;
  const double base2 = (points[far0] - points[0]).norm2();
  double max_area = 0;
  for (int i = 0; i < n; ++i)
    max_area = std::fmax(max_area, std::fabs(signed_area(points[0], points[far0], points[i])));
  if (max_area <= 1e-12 * base2)
    throw Error(ErrorCode::DegenerateInput, "all points are collinear");

  const InCircle in_circle(points, n);
  std::vector<BwTriangle> tris;
  tris.push_back({n, n + 1, n + 2});  // the all-infinite start triangle

  auto ekey = [](int a, int b) {
    return (static_cast<std::uint64_t>(std::min(a, b)) << 32) |
           static_cast<std::uint32_t>(std::max(a, b));
  };
  for (int p = 0; p < n; ++p) {
    const Vec2 P = points[p];

    // Cavity: the first conflicting triangle plus the edge-connected
    // in-circle region. Growing by connectivity (rather than a global scan)
    // keeps the cavity boundary a closed loop even when fp noise disagrees
    // with exact in-circle results on slivers.
    int seed = -1;
    for (size_t i = 0; i < tris.size(); ++i) {
      if (in_circle(tris[i], P)) {
        seed = static_cast<int>(i);
        break;
      }
    }
    if (seed < 0) throw Error(ErrorCode::DegenerateInput, "point location failed");

    std::unordered_map<std::uint64_t, std::array<int, 2>> edge_tris;
    edge_tris.reserve(tris.size() * 2);
    for (size_t i = 0; i < tris.size(); ++i) {
      const BwTriangle& t = tris[i];
      for (auto [a, b] : {std::pair{t.a, t.b}, {t.b, t.c}, {t.c, t.a}}) {
        auto [it, fresh] = edge_tris.try_emplace(ekey(a, b), std::array<int, 2>{-1, -1});
        it->second[fresh ? 0 : 1] = static_cast<int>(i);
      }
    }
    std::vector<char> bad(tris.size(), 0);
    std::vector<int> queue{seed};
    bad[seed] = 1;
    while (!queue.empty()) {
      const BwTriangle t = tris[queue.back()];
      queue.pop_back();
      for (auto [a, b] : {std::pair{t.a, t.b}, {t.b, t.c}, {t.c, t.a}}) {
        const auto& pair = edge_tris.at(ekey(a, b));
        for (int nb : pair) {
          if (nb < 0 || bad[nb]) continue;
          if (in_circle(tris[nb], P)) {
            bad[nb] = 1;
            queue.push_back(nb);
          }
        }
      }
    }

    // Boundary of the cavity: directed edges whose reverse is absent. Keeping
    // the direction from the removed (CCW) triangle puts p on the left, so
    // every new triangle is CCW.
    std::vector<std::array<int, 2>> bad_edges;
    std::vector<BwTriangle> keep;
    keep.reserve(tris.size() + 2);
    for (size_t i = 0; i < tris.size(); ++i) {
      if (bad[i]) {
        bad_edges.push_back({tris[i].a, tris[i].b});
        bad_edges.push_back({tris[i].b, tris[i].c});
        bad_edges.push_back({tris[i].c, tris[i].a});
      } else {
        keep.push_back(tris[i]);
      }
    }
    tris = std::move(keep);
    for (const auto& e : bad_edges) {
      bool shared = false;
      for (const auto& f : bad_edges) {
        if (f[0] == e[1] && f[1] == e[0]) {
          shared = true;
          break;
        }
      }
      if (!shared) tris.push_back({e[0], e[1], p});
    }
  }

  Mesh mesh;
  mesh.nodes = points;
  mesh.fixed.assign(n, false);
  for (const BwTriangle& t : tris) {
    if (t.a >= n || t.b >= n || t.c >= n) continue;  // touches the super-triangle
    std::array<int, 3> tri{t.a, t.b, t.c};
    // smallest index first, cyclic order (orientation) preserved
    const int rot = static_cast<int>(std::min_element(tri.begin(), tri.end()) - tri.begin());
    std::rotate(tri.begin(), tri.begin() + rot, tri.end());
    mesh.triangles.push_back(tri);
  }
  if (mesh.triangles.empty())
    throw Error(ErrorCode::DegenerateInput, "triangulation is empty");
  std::sort(mesh.triangles.begin(), mesh.triangles.end());

  // Hull nodes = endpoints of edges with a single incident triangle.
  std::unordered_map<std::uint64_t, int> edge_count;
  auto key = [](int a, int b) {
    return (static_cast<std::uint64_t>(std::min(a, b)) << 32) | static_cast<std::uint32_t>(std::max(a, b));
  };
  for (const auto& t : mesh.triangles) {
    ++edge_count[key(t[0], t[1])];
    ++edge_count[key(t[1], t[2])];
    ++edge_count[key(t[2], t[0])];
  }
  for (const auto& [k, count] : edge_count) {
    if (count == 1) {
      mesh.fixed[k >> 32] = true;
      mesh.fixed[k & 0xffffffffu] = true;
    }
  }
  return mesh;
}

Mesh random_square_mesh(int node_count, double side, std::uint64_t seed) {
  if (node_count < 4) throw Error(ErrorCode::DegenerateInput, "node_count must be >= 4");
  if (!(side > 0)) throw Error(ErrorCode::DegenerateInput, "side must be positive");

  const int m = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(node_count))));
  std::vector<Vec2> pts;
  pts.reserve(static_cast<size_t>(std::max(node_count, 4 * m)));
  for (int i = 0; i < m; ++i) {
    const double t = side * i / m;
    pts.push_back({t, 0});
    pts.push_back({side, t});
    pts.push_back({side - t, side});
    pts.push_back({0, side - t});
  }

  Rng rng(seed);
  const int interior = std::max(0, node_count - 4 * m);
  for (int i = 0; i < interior; ++i) {
    double x = 0, y = 0;
    do {
      x = rng.uniform(0, side);
      y = rng.uniform(0, side);
    } while (x <= 0.0 || y <= 0.0);  // open square; uniform() already excludes `side`
    pts.push_back({x, y});
  }
  return delaunay_triangulate(pts);
}

std::array<int, 3> split_counts(int mesh_count, const std::array<int, 3>& ratios) {
  const int total_ratio = ratios[0] + ratios[1] + ratios[2];
  if (mesh_count < 0 || total_ratio <= 0)
    throw Error(ErrorCode::DegenerateInput, "invalid split ratios");
  std::array<int, 3> out{};
  std::array<double, 3> frac{};
  int assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double share = static_cast<double>(mesh_count) * ratios[i] / total_ratio;
    out[i] = static_cast<int>(std::floor(share));
    frac[i] = share - out[i];
    assigned += out[i];
  }
  // hand out the remainder by largest fraction, earlier bucket on ties
  for (int left = mesh_count - assigned; left > 0; --left) {
    int best = 0;
    for (int i = 1; i < 3; ++i)
      if (frac[i] > frac[best]) best = i;
    ++out[best];
    frac[best] = -1;
  }
  return out;
}

Dataset build_dataset(const DatasetSpec& spec) {
  if (spec.mesh_count < 1) throw Error(ErrorCode::DegenerateInput, "mesh_count must be >= 1");
  if (spec.node_count_min < 4 || spec.node_count_max < spec.node_count_min)
    throw Error(ErrorCode::DegenerateInput, "bad node_count range");
  if (!(spec.side_min > 0) || spec.side_max < spec.side_min)
    throw Error(ErrorCode::DegenerateInput, "bad side range");

  const std::array<int, 3> counts = split_counts(spec.mesh_count, spec.split);
  Dataset ds;
  for (int i = 0; i < spec.mesh_count; ++i) {
    Rng meta(mix_seed(spec.seed, static_cast<std::uint64_t>(i)));
    const int nodes =
        spec.node_count_min +
        static_cast<int>(meta.below(static_cast<std::uint64_t>(spec.node_count_max - spec.node_count_min + 1)));
    const double side = meta.uniform(spec.side_min, spec.side_max);
    const std::uint64_t mesh_seed = mix_seed(mix_seed(spec.seed, static_cast<std::uint64_t>(i)), 1);
    Mesh mesh = random_square_mesh(nodes, side, mesh_seed);
    if (i < counts[0])
      ds.train.push_back(std::move(mesh));
    else if (i < counts[0] + counts[1])
      ds.val.push_back(std::move(mesh));
    else
      ds.test.push_back(std::move(mesh));
  }
  return ds;
}

void write_dataset(Dataset& ds, const DatasetSpec& spec, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + out_dir + ": " + ec.message());

  auto emit = [&](const std::vector<Mesh>& meshes, const char* prefix,
                  std::vector<std::string>& names) {
    names.clear();
    for (size_t i = 0; i < meshes.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "%s_%03zu.m2d", prefix, i);
      save_m2d(meshes[i], (fs::path(out_dir) / name).string());
      names.emplace_back(name);
    }
  };
  emit(ds.train, "train", ds.train_names);
  emit(ds.val, "val", ds.val_names);
  emit(ds.test, "test", ds.test_names);

  nlohmann::ordered_json j;
  j["format"] = "meshset-v1";
  j["seed"] = spec.seed;
  j["mesh_count"] = spec.mesh_count;
  j["node_count_range"] = {spec.node_count_min, spec.node_count_max};
  j["side_range"] = {spec.side_min, spec.side_max};
  j["train"] = ds.train_names;
  j["val"] = ds.val_names;
  j["test"] = ds.test_names;
  std::ofstream out(fs::path(out_dir) / "dataset.json", std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write dataset.json in " + out_dir);
  out << j.dump(2) << "\n";
}

Dataset load_dataset(const std::string& manifest_path) {
  namespace fs = std::filesystem;
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + manifest_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptFile, manifest_path + ": " + e.what());
  }
  if (!j.contains("format") || !j["format"].is_string())
    throw Error(ErrorCode::CorruptFile, manifest_path + ": missing format tag");
  if (j["format"] != "meshset-v1")
    throw Error(ErrorCode::VersionMismatch,
                manifest_path + ": unsupported format " + j["format"].get<std::string>());

  const fs::path dir = fs::path(manifest_path).parent_path();
  Dataset ds;
  auto slurp = [&](const char* split, std::vector<Mesh>& meshes, std::vector<std::string>& names) {
    if (!j.contains(split)) return;
    for (const auto& entry : j[split]) {
      if (!entry.is_string())
        throw Error(ErrorCode::CorruptFile, manifest_path + ": non-string mesh name");
      names.push_back(entry.get<std::string>());
      meshes.push_back(load_m2d((dir / names.back()).string()));
    }
  };
  slurp("train", ds.train, ds.train_names);
  slurp("val", ds.val, ds.val_names);
  slurp("test", ds.test, ds.test_names);
  if (ds.train.empty() && ds.val.empty() && ds.test.empty())
    throw Error(ErrorCode::EmptyDataset, manifest_path + ": no meshes listed");
  return ds;
}

}  // namespace meshsmith
