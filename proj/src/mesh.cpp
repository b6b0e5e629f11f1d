#include "meshsmith/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "meshsmith/error.hpp"
#include "meshsmith/kernels.hpp"

namespace meshsmith {

void Mesh::bbox(Vec2& lo, Vec2& hi) const {
  lo = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  hi = {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const Vec2& p : nodes) {
    lo.x = std::fmin(lo.x, p.x);
    lo.y = std::fmin(lo.y, p.y);
    hi.x = std::fmax(hi.x, p.x);
    hi.y = std::fmax(hi.y, p.y);
  }
}

double Mesh::bbox_extent() const {
  if (nodes.empty()) return 0.0;
  Vec2 lo, hi;
  bbox(lo, hi);
  return std::fmax(hi.x - lo.x, hi.y - lo.y);
}

double Mesh::bbox_area() const {
  if (nodes.empty()) return 0.0;
  Vec2 lo, hi;
  bbox(lo, hi);
  return (hi.x - lo.x) * (hi.y - lo.y);
}

std::vector<int> Mesh::interior_nodes() const {
  std::vector<int> out;
  for (int i = 0; i < node_count(); ++i)
    if (!fixed[i]) out.push_back(i);
  return out;
}

int Mesh::negative_element_count() const {
  const double eps = area_epsilon();
  int count = 0;
  for (const auto& t : triangles)
    if (signed_area(nodes[t[0]], nodes[t[1]], nodes[t[2]]) <= eps) ++count;
  return count;
}

StarPolygon StarPolygon::from_ring(const Vec2& center, std::vector<Vec2> ring) {
  StarPolygon star;
  star.center = center;
  star.ring = std::move(ring);
  const int n = star.degree();
  for (int i = 1; i <= n; ++i) star.edges.push_back({0, i});
  for (int i = 1; i <= n; ++i) star.edges.push_back({i, i % n + 1});

  Vec2 lo = center, hi = center;
  for (const Vec2& p : star.ring) {
    lo.x = std::fmin(lo.x, p.x);
    lo.y = std::fmin(lo.y, p.y);
    hi.x = std::fmax(hi.x, p.x);
    hi.y = std::fmax(hi.y, p.y);
  }
  star.eps_area = 1e-12 * (hi.x - lo.x) * (hi.y - lo.y);
  return star;
}

StarPolygon star_polygon(const Mesh& mesh, int node_index) {
  if (node_index < 0 || node_index >= mesh.node_count())
    throw Error(ErrorCode::OpenRing, "node index out of range");
  if (mesh.fixed[node_index])
    throw Error(ErrorCode::BoundaryNode,
                "node " + std::to_string(node_index) + " is fixed");

  // For each incident triangle (v,a,b) in CCW order, a -> b steps CCW
  // around v. Following the successor map yields the ordered ring.
  std::map<int, int> successor;
  for (const auto& t : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      if (t[k] == node_index) {
        const int a = t[(k + 1) % 3], b = t[(k + 2) % 3];
        if (!successor.emplace(a, b).second)
          throw Error(ErrorCode::OpenRing, "non-manifold fan at node " +
                                               std::to_string(node_index));
        break;
      }
    }
  }
  if (successor.size() < 3)
    throw Error(ErrorCode::OpenRing,
                "node " + std::to_string(node_index) + " has fewer than 3 ring nodes");

  const int start = successor.begin()->first;  // smallest neighbor index
  std::vector<int> ring_idx;
  int cur = start;
  do {
    ring_idx.push_back(cur);
    auto it = successor.find(cur);
    if (it == successor.end())
      throw Error(ErrorCode::OpenRing,
                  "ring around node " + std::to_string(node_index) + " does not close");
    cur = it->second;
  } while (cur != start && ring_idx.size() <= successor.size());
  if (ring_idx.size() != successor.size())
    throw Error(ErrorCode::OpenRing,
                "ring around node " + std::to_string(node_index) + " does not close");

  std::vector<Vec2> ring(ring_idx.size());
  for (size_t i = 0; i < ring_idx.size(); ++i) ring[i] = mesh.nodes[ring_idx[i]];
  StarPolygon star = StarPolygon::from_ring(mesh.nodes[node_index], std::move(ring));
  star.eps_area = mesh.area_epsilon();
  return star;
}

bool has_negative_element(const StarPolygon& star, const Vec2& candidate) {
  if (!candidate.finite()) return true;
  const int n = star.degree();
  for (int i = 0; i < n; ++i) {
    if (signed_area(candidate, star.ring[i], star.ring[(i + 1) % n]) <= star.eps_area)
      return true;
  }
  return false;
}

QualityReport quality_report(const Mesh& mesh) {
  if (mesh.triangles.empty()) throw Error(ErrorCode::EmptyMesh, "mesh has no triangles");

  const int m = mesh.triangle_count();
  std::vector<double> ax(m), ay(m), bx(m), by(m), cx(m), cy(m), f(m);
  for (int t = 0; t < m; ++t) {
    const auto& tri = mesh.triangles[t];
    ax[t] = mesh.nodes[tri[0]].x;
    ay[t] = mesh.nodes[tri[0]].y;
    bx[t] = mesh.nodes[tri[1]].x;
    by[t] = mesh.nodes[tri[1]].y;
    cx[t] = mesh.nodes[tri[2]].x;
    cy[t] = mesh.nodes[tri[2]].y;
  }
  kernels::active().tri_transformed(ax.data(), ay.data(), bx.data(), by.data(), cx.data(),
                                    cy.data(), m, f.data());

  QualityReport rep;
  rep.element_count = m;
  rep.min_angle_min = std::numeric_limits<double>::infinity();
  rep.max_angle_max = 0.0;
  rep.inv_ar_min = std::numeric_limits<double>::infinity();
  double sum_min = 0.0, sum_max = 0.0, sum_inv = 0.0;
  for (int t = 0; t < m; ++t) {
    const Vec2 a{ax[t], ay[t]}, b{bx[t], by[t]}, c{cx[t], cy[t]};
    const double a0 = angle_at(a, b, c), a1 = angle_at(b, c, a), a2 = angle_at(c, a, b);
    const double amin = std::fmin(a0, std::fmin(a1, a2));
    const double amax = std::fmax(a0, std::fmax(a1, a2));
    // f >= 1 marks degenerate/inverted elements; they report 1/q = 0, f = 1.
    const double fr = std::fmin(f[t], 1.0);
    const double inv_ar = fr < 1.0 ? 1.0 - fr : 0.0;

    rep.min_angle_min = std::fmin(rep.min_angle_min, amin);
    rep.max_angle_max = std::fmax(rep.max_angle_max, amax);
    rep.inv_ar_min = std::fmin(rep.inv_ar_min, inv_ar);
    sum_min += amin;
    sum_max += amax;
    sum_inv += inv_ar;

    int bin = static_cast<int>(fr * 20.0);
    bin = std::clamp(bin, 0, 19);
    ++rep.histogram[bin];
  }
  rep.min_angle_mean = sum_min / m;
  rep.max_angle_mean = sum_max / m;
  rep.inv_ar_mean = sum_inv / m;
  return rep;
}

double weighted_quality(const QualityReport& r) {
  return (1.0 / 6.0) *
         ((r.min_angle_mean + r.min_angle_min + 120.0 - r.max_angle_max - r.max_angle_mean) /
              60.0 +
          r.inv_ar_mean + r.inv_ar_min);
}

namespace {

[[noreturn]] void parse_fail(const std::string& origin, int line, const std::string& msg) {
  throw Error(ErrorCode::ParseError, origin + ":" + std::to_string(line) + ": " + msg);
}

}  // namespace

Mesh parse_m2d(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line, word;
  int lineno = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r\n") != std::string::npos) return true;
    }
    return false;
  };

  if (!next_line()) parse_fail(origin, lineno, "empty file");
  std::istringstream hdr(line);
  long n = -1;
  if (!(hdr >> word >> n) || word != "nodes" || n < 0)
    parse_fail(origin, lineno, "expected 'nodes N'");

  Mesh mesh;
  mesh.nodes.reserve(n);
  mesh.fixed.reserve(n);
  for (long i = 0; i < n; ++i) {
    if (!next_line()) parse_fail(origin, lineno, "unexpected end of file in node list");
    std::istringstream ls(line);
    double x, y;
    int fixed_flag;
    if (!(ls >> x >> y >> fixed_flag) || (fixed_flag != 0 && fixed_flag != 1))
      parse_fail(origin, lineno, "expected 'x y F' with F in {0,1}");
    if (!std::isfinite(x) || !std::isfinite(y))
      parse_fail(origin, lineno, "non-finite coordinate");
    mesh.nodes.push_back({x, y});
    mesh.fixed.push_back(fixed_flag == 1);
  }

  if (!next_line()) parse_fail(origin, lineno, "missing 'triangles M' line");
  std::istringstream thdr(line);
  long m = -1;
  if (!(thdr >> word >> m) || word != "triangles" || m < 0)
    parse_fail(origin, lineno, "expected 'triangles M'");

  mesh.triangles.reserve(m);
  for (long t = 0; t < m; ++t) {
    if (!next_line()) parse_fail(origin, lineno, "unexpected end of file in triangle list");
    std::istringstream ls(line);
    long i, j, k;
    if (!(ls >> i >> j >> k)) parse_fail(origin, lineno, "expected 'i j k'");
    if (i < 0 || j < 0 || k < 0 || i >= n || j >= n || k >= n)
      parse_fail(origin, lineno, "triangle index out of range");
    if (i == j || j == k || i == k)
      parse_fail(origin, lineno, "duplicate index within triangle");
    const double s = signed_area(mesh.nodes[i], mesh.nodes[j], mesh.nodes[k]);
    if (s <= 0.0)
      parse_fail(origin, lineno,
                 s == 0.0 ? "degenerate (zero-area) triangle" : "clockwise triangle");
    mesh.triangles.push_back({static_cast<int>(i), static_cast<int>(j), static_cast<int>(k)});
  }
  return mesh;
}

Mesh load_m2d(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_m2d(buf.str(), path);
}

std::string to_m2d(const Mesh& mesh) {
  std::string out;
  out.reserve(mesh.nodes.size() * 48 + mesh.triangles.size() * 24 + 64);
  char buf[96];
  std::snprintf(buf, sizeof buf, "nodes %zu\n", mesh.nodes.size());
  out += buf;
  for (size_t i = 0; i < mesh.nodes.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %d\n", mesh.nodes[i].x, mesh.nodes[i].y,
                  mesh.fixed[i] ? 1 : 0);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "triangles %zu\n", mesh.triangles.size());
  out += buf;
  for (const auto& t : mesh.triangles) {
    std::snprintf(buf, sizeof buf, "%d %d %d\n", t[0], t[1], t[2]);
    out += buf;
  }
  return out;
}

void save_m2d(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
  out << to_m2d(mesh);
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

}  // namespace meshsmith
