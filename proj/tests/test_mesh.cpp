#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>

#include "meshsmith/mesh.hpp"

using namespace meshsmith;

namespace {

// Interior node 0 surrounded by a regular n-gon of radius r, fanned into n triangles.
Mesh ring_mesh(int n, double r = 1.0) {
  Mesh m;
  m.nodes.push_back({0, 0});
  m.fixed.push_back(false);
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * kPi * i / n;
    m.nodes.push_back({r * std::cos(a), r * std::sin(a)});
    m.fixed.push_back(true);
  }
  for (int i = 0; i < n; ++i) m.triangles.push_back({0, 1 + i, 1 + (i + 1) % n});
  return m;
}

Mesh single_triangle(Vec2 a, Vec2 b, Vec2 c) {
  Mesh m;
  m.nodes = {a, b, c};
  m.fixed = {true, true, true};
  m.triangles = {{0, 1, 2}};
  return m;
}

}  // namespace

TEST_CASE("star_polygon walks the ring counter-clockwise") {
  const Mesh m = ring_mesh(6);
  const StarPolygon star = star_polygon(m, 0);
  REQUIRE(star.degree() == 6);
  CHECK(star.center.x == 0.0);
  CHECK(star.center.y == 0.0);
  // ring starts at the smallest neighbor index (node 1, angle 0) and turns CCW
  for (int i = 0; i < 6; ++i) {
    const double a = 2.0 * kPi * i / 6;
    CHECK(star.ring[i].x == doctest::Approx(std::cos(a)).scale(1).epsilon(1e-15));
    CHECK(star.ring[i].y == doctest::Approx(std::sin(a)).scale(1).epsilon(1e-15));
  }
  // edge list: n spokes + n ring segments
  CHECK(star.edges.size() == 12);
}

TEST_CASE("star_polygon of a degree-3 fan") {
  Mesh m;
  m.nodes = {{0, 0}, {1, 0}, {0.5, kSqrt3 / 2}, {0.5, 0.28867513459481287}};
  m.fixed = {true, true, true, false};
  m.triangles = {{0, 1, 3}, {1, 2, 3}, {2, 0, 3}};
  const StarPolygon star = star_polygon(m, 3);
  REQUIRE(star.degree() == 3);
  CHECK_FALSE(has_negative_element(star, star.center));
}

TEST_CASE("star_polygon rejects boundary and open rings") {
  const Mesh m = ring_mesh(6);
  CHECK_THROWS_AS_MESSAGE(star_polygon(m, 1), Error, doctest::Contains("fixed"));
  try {
    star_polygon(m, 1);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BoundaryNode);
  }

  Mesh open = ring_mesh(6);
  open.triangles.pop_back();  // fan no longer closes around node 0
  CHECK_THROWS_AS(star_polygon(open, 0), Error);
  try {
    star_polygon(open, 0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OpenRing);
  }
}

TEST_CASE("has_negative_element flags escapes, boundary hits and non-finite points") {
  const Mesh m = ring_mesh(8);
  const StarPolygon star = star_polygon(m, 0);
  CHECK_FALSE(has_negative_element(star, {0.1, -0.2}));
  CHECK(has_negative_element(star, {10, 0}));       // far outside
  CHECK(has_negative_element(star, {1.0, 0.0}));    // exactly on a ring vertex
  const double nan = std::nan("");
  CHECK(has_negative_element(star, {nan, 0}));

  // candidate exactly on a ring edge: zero-area fan triangle counts as negative
  const StarPolygon square = StarPolygon::from_ring({0, 0}, {{-1, -1}, {1, -1}, {1, 1}, {-1, 1}});
  CHECK(has_negative_element(square, {1.0, 0.0}));
  CHECK_FALSE(has_negative_element(square, {0.5, 0.0}));
}

TEST_CASE("quality_report on a one- and two-element mesh") {
  const Mesh eq = single_triangle({0, 0}, {1, 0}, {0.5, kSqrt3 / 2});
  QualityReport r = quality_report(eq);
  CHECK(r.element_count == 1);
  CHECK(r.min_angle_min == doctest::Approx(60.0).epsilon(1e-10));
  CHECK(r.max_angle_max == doctest::Approx(60.0).epsilon(1e-10));
  CHECK(r.inv_ar_min == doctest::Approx(1.0).epsilon(1e-12));

  Mesh two = eq;
  // append a disjoint right isoceles triangle
  two.nodes.push_back({3, 0});
  two.nodes.push_back({4, 0});
  two.nodes.push_back({3, 1});
  two.fixed.insert(two.fixed.end(), 3, true);
  two.triangles.push_back({3, 4, 5});
  r = quality_report(two);
  CHECK(r.element_count == 2);
  CHECK(r.min_angle_min == doctest::Approx(45.0).epsilon(1e-10));
  CHECK(r.min_angle_mean == doctest::Approx(52.5).epsilon(1e-10));
  CHECK(r.max_angle_max == doctest::Approx(90.0).epsilon(1e-10));
  CHECK(r.max_angle_mean == doctest::Approx(75.0).epsilon(1e-10));
  CHECK(r.inv_ar_min == doctest::Approx(0.8660254037844387).epsilon(1e-12));
  CHECK(r.inv_ar_mean == doctest::Approx(0.9330127018922193).epsilon(1e-12));

  Mesh empty;
  CHECK_THROWS_AS(quality_report(empty), Error);
}

TEST_CASE("quality histogram puts every element in exactly one bin") {
  const Mesh m = ring_mesh(7, 2.0);
  const QualityReport r = quality_report(m);
  long total = 0;
  for (long b : r.histogram) total += b;
  CHECK(total == r.element_count);
}

TEST_CASE("weighted_quality of an all-equilateral report is exactly 2/3") {
  QualityReport r{};
  r.min_angle_min = r.min_angle_mean = 60.0;
  r.max_angle_max = r.max_angle_mean = 60.0;
  r.inv_ar_min = r.inv_ar_mean = 1.0;
  r.element_count = 1;
  CHECK(weighted_quality(r) == 2.0 / 3.0);
}

TEST_CASE("weighted_quality decreases towards the degenerate limit") {
  QualityReport r{};
  r.min_angle_min = r.min_angle_mean = 0.0;
  r.max_angle_max = r.max_angle_mean = 180.0;
  r.inv_ar_min = r.inv_ar_mean = 0.0;
  r.element_count = 1;
  // (0 + 0 + 120 - 180 - 180)/60 = -4, so the blend bottoms out at -4/6
  CHECK(weighted_quality(r) == doctest::Approx(-2.0 / 3.0).epsilon(1e-15));

  // improving any single term raises the blend
  QualityReport mid{};
  mid.min_angle_min = 30;
  mid.min_angle_mean = 40;
  mid.max_angle_max = 110;
  mid.max_angle_mean = 90;
  mid.inv_ar_min = 0.5;
  mid.inv_ar_mean = 0.7;
  mid.element_count = 1;
  const double base = weighted_quality(mid);
  QualityReport b = mid;
  b.min_angle_min += 5;
  CHECK(weighted_quality(b) > base);
  b = mid;
  b.max_angle_max -= 5;
  CHECK(weighted_quality(b) > base);
  b = mid;
  b.inv_ar_mean += 0.05;
  CHECK(weighted_quality(b) > base);
}

TEST_CASE("m2d round trip preserves exact coordinates") {
  Mesh m = ring_mesh(6, 0.12345678901234567);
  m.nodes[0] = {1e-17, -0.039999999999999994};  // awkward doubles, still inside the ring
  const std::string text = to_m2d(m);
  const Mesh back = parse_m2d(text, "roundtrip");
  REQUIRE(back.node_count() == m.node_count());
  REQUIRE(back.triangle_count() == m.triangle_count());
  for (int i = 0; i < m.node_count(); ++i) {
    CHECK(back.nodes[i].x == m.nodes[i].x);
    CHECK(back.nodes[i].y == m.nodes[i].y);
    CHECK(back.fixed[i] == m.fixed[i]);
  }
  CHECK(back.triangles == m.triangles);
  CHECK(to_m2d(back) == text);
}

TEST_CASE("m2d parser reports malformed input with line numbers") {
  const char* clockwise =
      "nodes 3\n0 0 1\n1 0 1\n0 1 1\ntriangles 1\n0 2 1\n";
  try {
    parse_m2d(clockwise, "bad");
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    CHECK(std::string(e.what()).find(":6:") != std::string::npos);
    CHECK(std::string(e.what()).find("clockwise") != std::string::npos);
  }

  const char* oob = "nodes 3\n0 0 1\n1 0 1\n0 1 1\ntriangles 1\n0 1 7\n";
  CHECK_THROWS_AS(parse_m2d(oob, "bad"), Error);

  const char* dup = "nodes 3\n0 0 1\n1 0 1\n0 1 1\ntriangles 1\n0 1 1\n";
  CHECK_THROWS_AS(parse_m2d(dup, "bad"), Error);

  const char* badflag = "nodes 1\n0 0 2\ntriangles 0\n";
  CHECK_THROWS_AS(parse_m2d(badflag, "bad"), Error);

  const char* truncated = "nodes 3\n0 0 1\n1 0 1\n";
  CHECK_THROWS_AS(parse_m2d(truncated, "bad"), Error);
}

TEST_CASE("negative_element_count counts inverted fans") {
  Mesh m = ring_mesh(6);
  CHECK(m.negative_element_count() == 0);
  m.nodes[0] = {2.0, 0.0};  // drag the center outside the ring
  CHECK(m.negative_element_count() > 0);
}

TEST_CASE("interior_nodes lists only free nodes") {
  const Mesh m = ring_mesh(5);
  const std::vector<int> ids = m.interior_nodes();
  REQUIRE(ids.size() == 1);
  CHECK(ids[0] == 0);
}
