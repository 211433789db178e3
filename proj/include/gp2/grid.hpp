#pragma once

#include <cstdint>
#include <vector>

namespace gp2 {

// Unit tag carried by every raster. Depth-tagged grids must hold strictly
// positive values wherever they are valid. Validity always lives in a
// ValidityMask; invalid pixels carry an arbitrary payload, never a sentinel.
enum class GridUnit { MetersDepth, LogDepth, Disparity, Dimensionless };

const char* to_string(GridUnit unit);

// Per-pixel validity bits, row-major, top-left origin. Immutable.
class ValidityMask {
 public:
  ValidityMask(int width, int height, std::vector<std::uint8_t> bits);
  static ValidityMask all_valid(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  bool at(int x, int y) const { return bits_[static_cast<std::size_t>(y) * width_ + x] != 0; }
  bool at(std::size_t idx) const { return bits_[idx] != 0; }
  std::size_t size() const { return bits_.size(); }
  int count() const;
  // Indices of valid pixels in row-major order; the canonical ordering used by
  // losses, gradients and point clouds.
  std::vector<std::uint32_t> valid_indices() const;
  const std::vector<std::uint8_t>& bits() const { return bits_; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

// Row-major raster of doubles with a unit tag, top-left origin. Immutable.
// Constructing a MetersDepth grid rejects non-positive or non-finite values on
// the checked pixels (all pixels, or only those valid under the given mask).
class Grid2D {
 public:
  Grid2D(int width, int height, GridUnit unit, std::vector<double> values);
  Grid2D(int width, int height, GridUnit unit, std::vector<double> values,
         const ValidityMask& valid);
  static Grid2D constant(int width, int height, GridUnit unit, double value);

  int width() const { return width_; }
  int height() const { return height_; }
  GridUnit unit() const { return unit_; }
  std::size_t size() const { return values_.size(); }
  double at(int x, int y) const { return values_[static_cast<std::size_t>(y) * width_ + x]; }
  double at(std::size_t idx) const { return values_[idx]; }
  const std::vector<double>& values() const { return values_; }

  // Same payload under a different unit tag; re-runs depth validation.
  Grid2D with_unit(GridUnit unit) const;

 private:
  int width_ = 0;
  int height_ = 0;
  GridUnit unit_ = GridUnit::Dimensionless;
  std::vector<double> values_;
};

// Shape-compatibility guards shared by every (grid, mask) pairing site.
void require_same_shape(const Grid2D& a, const Grid2D& b, const char* where);
void require_same_shape(const Grid2D& g, const ValidityMask& m, const char* where);

}  // namespace gp2
