#pragma once

#include <string>

#include "gp2/cloud.hpp"

namespace gp2 {

// ASCII PLY with float x/y/z vertex properties, one vertex per line,
// shortest-round-trip decimal formatting. Vertex order follows the cloud.
std::string write_ply_ascii(const PointCloud& cloud);

}  // namespace gp2
