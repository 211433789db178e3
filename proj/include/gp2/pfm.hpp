#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gp2/grid.hpp"

namespace gp2 {

struct PfmImage {
  Grid2D grid;   // Dimensionless; callers re-tag via with_unit()
  double scale;  // header scale as stored (sign encodes payload endianness)
};

// Grayscale PFM ("Pf"). Payload is float32, one row per line of pixels,
// bottom row first; rows are flipped to the repo's top-left convention here
// and nowhere else. Color PFM ("PF"), malformed headers and payload length
// mismatches are rejected.
PfmImage read_pfm(std::span<const std::uint8_t> bytes);

// Serializes with header "Pf\n{w} {h}\n-1.0\n" and little-endian float32
// payload. Non-finite values are rejected. Bit-exact round trip for grids
// whose values are exactly representable in float32.
std::vector<std::uint8_t> write_pfm(const Grid2D& grid);

}  // namespace gp2
