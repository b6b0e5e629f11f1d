#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>
#include <string>

#include "meshsmith/delaunay.hpp"
#include "meshsmith/svg.hpp"

using namespace meshsmith;

namespace {

size_t count_of(const std::string& hay, const std::string& needle) {
  size_t n = 0;
  for (size_t at = hay.find(needle); at != std::string::npos;
       at = hay.find(needle, at + needle.size()))
    ++n;
  return n;
}

}  // namespace

TEST_CASE("fill endpoints: equilateral blue, degenerate yellow") {
  Mesh eq;
  eq.nodes = {{0, 0}, {1, 0}, {0.5, kSqrt3 / 2}};
  eq.triangles = {{0, 1, 2}};
  eq.fixed = {true, true, true};
  const std::string blue = to_svg(eq);
  CHECK(count_of(blue, "fill=\"#0000ff\"") == 1);

  Mesh flat;
  flat.nodes = {{0, 0}, {1, 0}, {2, 0}};
  flat.triangles = {{0, 1, 2}};
  flat.fixed = {true, true, true};
  const std::string yellow = to_svg(flat);
  CHECK(count_of(yellow, "fill=\"#ffff00\"") == 1);
}

TEST_CASE("one polygon per triangle, deterministic bytes, y flipped") {
  const Mesh m = random_square_mesh(40, 2.0, 13);
  const std::string svg = to_svg(m);
  CHECK(count_of(svg, "<polygon") == static_cast<size_t>(m.triangle_count()));
  CHECK(svg == to_svg(m));
  // bbox extent 2 -> stroke 0.2% = 0.004
  CHECK(count_of(svg, "stroke-width=\"0.004\"") ==
        static_cast<size_t>(m.triangle_count()));

  Mesh tri;
  tri.nodes = {{0, 0}, {2, 0}, {0, 1}};
  tri.triangles = {{0, 1, 2}};
  tri.fixed = {true, true, true};
  // the y = 1 vertex renders at -1
  CHECK(count_of(to_svg(tri), "0,-1") == 1);
}

TEST_CASE("render_svg writes the exact bytes and reports IO failures") {
  const Mesh m = random_square_mesh(25, 1.0, 3);
  const std::string path = "/tmp/meshsmith_render.svg";
  render_svg(m, path);
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  CHECK(buf.str() == to_svg(m));

  try {
    render_svg(m, "/no-such-dir/out.svg");
    FAIL("expected IoError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IoError);
  }

  Mesh empty;
  CHECK_THROWS_AS(to_svg(empty), Error);
}
