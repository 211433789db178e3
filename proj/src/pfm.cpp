#include "gp2/pfm.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace gp2 {

namespace {

bool is_pfm_space(std::uint8_t c) { return c == ' ' || c == '\n' || c == '\r' || c == '\t'; }

// Reads one whitespace-delimited header token starting at pos; advances pos
// past the single whitespace character that terminates the token.
std::string next_token(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  std::string tok;
  while (pos < bytes.size() && !is_pfm_space(bytes[pos])) tok.push_back(static_cast<char>(bytes[pos++]));
  if (tok.empty() || pos >= bytes.size())
    throw std::runtime_error("read_pfm: truncated header");
  ++pos;  // exactly one whitespace separator
  return tok;
}

long parse_long(const std::string& tok, const char* what) {
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(tok, &used);
  } catch (const std::exception&) {
    throw std::runtime_error(std::string("read_pfm: bad ") + what);
  }
  if (used != tok.size()) throw std::runtime_error(std::string("read_pfm: bad ") + what);
  return v;
}

}  // namespace

PfmImage read_pfm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  const std::string magic = next_token(bytes, pos);
  if (magic == "PF") throw std::runtime_error("read_pfm: color PFM is not supported");
  if (magic != "Pf") throw std::runtime_error("read_pfm: bad magic '" + magic + "'");

  const long width = parse_long(next_token(bytes, pos), "width");
  const long height = parse_long(next_token(bytes, pos), "height");
  if (width <= 0 || height <= 0) throw std::runtime_error("read_pfm: non-positive dimensions");

  const std::string scale_tok = next_token(bytes, pos);
  double scale = 0.0;
  try {
    std::size_t used = 0;
    scale = std::stod(scale_tok, &used);
    if (used != scale_tok.size()) throw std::runtime_error("");
  } catch (const std::exception&) {
    throw std::runtime_error("read_pfm: bad scale '" + scale_tok + "'");
  }
  if (scale == 0.0) throw std::runtime_error("read_pfm: zero scale");
  const bool little_endian = scale < 0.0;

  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() - pos != count * 4)
    throw std::runtime_error("read_pfm: payload is " + std::to_string(bytes.size() - pos) +
                             " bytes, expected " + std::to_string(count * 4));

  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t o = pos + i * 4;
    std::uint32_t u;
    if (little_endian) {
      u = static_cast<std::uint32_t>(bytes[o]) | (static_cast<std::uint32_t>(bytes[o + 1]) << 8) |
          (static_cast<std::uint32_t>(bytes[o + 2]) << 16) |
          (static_cast<std::uint32_t>(bytes[o + 3]) << 24);
    } else {
      u = static_cast<std::uint32_t>(bytes[o + 3]) | (static_cast<std::uint32_t>(bytes[o + 2]) << 8) |
          (static_cast<std::uint32_t>(bytes[o + 1]) << 16) |
          (static_cast<std::uint32_t>(bytes[o]) << 24);
    }
    // PFM stores the bottom row first; flip to top-left origin.
    const std::size_t file_row = i / width;
    const std::size_t col = i % width;
    const std::size_t image_row = static_cast<std::size_t>(height) - 1 - file_row;
    values[image_row * width + col] = static_cast<double>(std::bit_cast<float>(u));
  }
  return PfmImage{Grid2D(static_cast<int>(width), static_cast<int>(height),
                         GridUnit::Dimensionless, std::move(values)),
                  scale};
}

std::vector<std::uint8_t> write_pfm(const Grid2D& grid) {
  char header[64];
  const int n = std::snprintf(header, sizeof(header), "Pf\n%d %d\n-1.0\n", grid.width(), grid.height());
  std::vector<std::uint8_t> out(header, header + n);
  out.reserve(out.size() + grid.size() * 4);
  for (int y = grid.height() - 1; y >= 0; --y) {
    for (int x = 0; x < grid.width(); ++x) {
      const double v = grid.at(x, y);
      if (!std::isfinite(v))
        throw std::runtime_error("write_pfm: non-finite value at (" + std::to_string(x) + ", " +
                                 std::to_string(y) + ")");
      const std::uint32_t u = std::bit_cast<std::uint32_t>(static_cast<float>(v));
      out.push_back(static_cast<std::uint8_t>(u & 0xFF));
      out.push_back(static_cast<std::uint8_t>((u >> 8) & 0xFF));
      out.push_back(static_cast<std::uint8_t>((u >> 16) & 0xFF));
      out.push_back(static_cast<std::uint8_t>((u >> 24) & 0xFF));
    }
  }
  return out;
}

}  // namespace gp2
