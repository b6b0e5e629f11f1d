#include "meshsmith/svg.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace meshsmith {

namespace {

void append_num(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.8g", v);
  out += buf;
}

}  // namespace

std::string to_svg(const Mesh& mesh) {
  if (mesh.nodes.empty())
    throw Error(ErrorCode::EmptyMesh, "nothing to render");

  Vec2 lo, hi;
  mesh.bbox(lo, hi);
  const double extent = mesh.bbox_extent();
  const double margin = 0.02 * (extent > 0 ? extent : 1.0);
  const double stroke = 0.002 * (extent > 0 ? extent : 1.0);

  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"";
  // y negated: SVG's y axis points down
  append_num(out, lo.x - margin);
  out += " ";
  append_num(out, -hi.y - margin);
  out += " ";
  append_num(out, hi.x - lo.x + 2 * margin);
  out += " ";
  append_num(out, hi.y - lo.y + 2 * margin);
  out += "\">\n";

  char color[16];
  for (const auto& tri : mesh.triangles) {
    const TriangleQuality q = triangle_quality(
        mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]);
    const double f = std::fmin(std::fmax(q.transformed, 0.0), 1.0);
    const int ry = static_cast<int>(std::lround(255.0 * f));
    std::snprintf(color, sizeof color, "#%02x%02x%02x", ry, ry, 255 - ry);

    out += "<polygon points=\"";
    for (int k = 0; k < 3; ++k) {
      if (k) out += " ";
      append_num(out, mesh.nodes[tri[k]].x);
      out += ",";
      append_num(out, -mesh.nodes[tri[k]].y);
    }
    out += "\" fill=\"";
    out += color;
    out += "\" stroke=\"#000000\" stroke-width=\"";
    append_num(out, stroke);
    out += "\"/>\n";
  }
  out += "</svg>\n";
  return out;
}

void render_svg(const Mesh& mesh, const std::string& path) {
  const std::string text = to_svg(mesh);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed on '" + path + "'");
}

}  // namespace meshsmith
