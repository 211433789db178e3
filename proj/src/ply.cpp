#include "gp2/ply.hpp"

#include <charconv>
#include <stdexcept>
#include <system_error>

namespace gp2 {

namespace {

void append_double(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc())
    throw std::runtime_error("write_ply_ascii: failed to format value");
  out.append(buf, res.ptr);
}

}  // namespace

std::string write_ply_ascii(const PointCloud& cloud) {
  std::string out;
  out += "ply\nformat ascii 1.0\nelement vertex ";
  out += std::to_string(cloud.size());
  out += "\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
  for (const Vec3& p : cloud.points()) {
    append_double(out, p.x);
    out += ' ';
    append_double(out, p.y);
    out += ' ';
    append_double(out, p.z);
    out += '\n';
  }
  return out;
}

}  // namespace gp2
