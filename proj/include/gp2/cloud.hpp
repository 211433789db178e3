#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace gp2 {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
};

// Ordered 3D points in meters, optionally tagged with the (x, y) pixel each
// point came from. When source pixels are present there is exactly one per
// point, in the same order.
class PointCloud {
 public:
  using Pixel = std::array<std::int32_t, 2>;

  PointCloud() = default;
  explicit PointCloud(std::vector<Vec3> points) : points_(std::move(points)) {}
  PointCloud(std::vector<Vec3> points, std::vector<Pixel> source)
      : points_(std::move(points)), source_(std::move(source)) {
    if (source_->size() != points_.size())
      throw std::invalid_argument("PointCloud: source pixel count does not match point count");
  }

  std::size_t size() const { return points_.size(); }
  const Vec3& operator[](std::size_t i) const { return points_[i]; }
  const std::vector<Vec3>& points() const { return points_; }
  bool has_source() const { return source_.has_value(); }
  const std::vector<Pixel>& source() const { return *source_; }

 private:
  std::vector<Vec3> points_;
  std::optional<std::vector<Pixel>> source_;
};

}  // namespace gp2
