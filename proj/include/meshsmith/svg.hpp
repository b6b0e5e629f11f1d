#pragma once

#include <string>

#include "meshsmith/mesh.hpp"

namespace meshsmith {

/// One polygon per triangle, filled by the transformed quality measure:
/// blue #0000ff at f = 0 (equilateral) blending linearly to yellow #ffff00
/// at f = 1 (degenerate). Black edges, stroke width 0.2% of the bbox
/// extent, y axis flipped so the mesh appears in mathematical orientation.
/// Output bytes are a pure function of the mesh.
std::string to_svg(const Mesh& mesh);

/// Throws EmptyMesh for a mesh without nodes, IoError when the file cannot
/// be written.
void render_svg(const Mesh& mesh, const std::string& path);

}  // namespace meshsmith
