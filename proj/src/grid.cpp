#include "gp2/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace gp2 {

const char* to_string(GridUnit unit) {
  switch (unit) {
    case GridUnit::MetersDepth: return "meters-depth";
    case GridUnit::LogDepth: return "log-depth";
    case GridUnit::Disparity: return "inverse-meters-disparity";
    case GridUnit::Dimensionless: return "dimensionless";
  }
  return "unknown";
}

namespace {

void check_dims(int width, int height, std::size_t count, const char* what) {
  if (width <= 0 || height <= 0)
    throw std::invalid_argument(std::string(what) + ": dimensions must be positive");
  if (count != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
    throw std::invalid_argument(std::string(what) + ": value count does not match width*height");
}

void check_depth_positive(const std::vector<double>& values, const ValidityMask* mask) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (mask && !mask->at(i)) continue;
    if (!(values[i] > 0.0) || !std::isfinite(values[i]))
      throw std::invalid_argument("Grid2D: depth grid has non-positive value at index " +
                                  std::to_string(i));
  }
}

}  // namespace

ValidityMask::ValidityMask(int width, int height, std::vector<std::uint8_t> bits)
    : width_(width), height_(height), bits_(std::move(bits)) {
  check_dims(width, height, bits_.size(), "ValidityMask");
}

ValidityMask ValidityMask::all_valid(int width, int height) {
  return ValidityMask(width, height,
                      std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height, 1));
}

int ValidityMask::count() const {
  return static_cast<int>(std::count_if(bits_.begin(), bits_.end(),
                                        [](std::uint8_t b) { return b != 0; }));
}

std::vector<std::uint32_t> ValidityMask::valid_indices() const {
  std::vector<std::uint32_t> idx;
  idx.reserve(bits_.size());
  for (std::size_t i = 0; i < bits_.size(); ++i)
    if (bits_[i]) idx.push_back(static_cast<std::uint32_t>(i));
  return idx;
}

Grid2D::Grid2D(int width, int height, GridUnit unit, std::vector<double> values)
    : width_(width), height_(height), unit_(unit), values_(std::move(values)) {
  check_dims(width, height, values_.size(), "Grid2D");
  if (unit_ == GridUnit::MetersDepth) check_depth_positive(values_, nullptr);
}

Grid2D::Grid2D(int width, int height, GridUnit unit, std::vector<double> values,
               const ValidityMask& valid)
    : width_(width), height_(height), unit_(unit), values_(std::move(values)) {
  check_dims(width, height, values_.size(), "Grid2D");
  if (valid.width() != width_ || valid.height() != height_)
    throw std::invalid_argument("Grid2D: mask shape does not match grid shape");
  if (unit_ == GridUnit::MetersDepth) check_depth_positive(values_, &valid);
}

Grid2D Grid2D::constant(int width, int height, GridUnit unit, double value) {
  return Grid2D(width, height, unit,
                std::vector<double>(static_cast<std::size_t>(width) * height, value));
}

Grid2D Grid2D::with_unit(GridUnit unit) const {
  return Grid2D(width_, height_, unit, values_);
}

void require_same_shape(const Grid2D& a, const Grid2D& b, const char* where) {
  if (a.width() != b.width() || a.height() != b.height())
    throw std::invalid_argument(std::string(where) + ": grid shapes differ");
}

void require_same_shape(const Grid2D& g, const ValidityMask& m, const char* where) {
  if (g.width() != m.width() || g.height() != m.height())
    throw std::invalid_argument(std::string(where) + ": mask shape does not match grid");
}

}  // namespace gp2
