#include "gp2/geometry.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>

namespace gp2 {

namespace {

void require_unit(const Grid2D& g, GridUnit unit, const char* where) {
  if (g.unit() != unit)
    throw std::invalid_argument(std::string(where) + ": expected " + to_string(unit) +
                                " grid, got " + to_string(g.unit()));
}

double checked_positive(double v, std::size_t idx, const char* where) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw std::invalid_argument(std::string(where) + ": non-positive value at valid pixel " +
                                std::to_string(idx));
  return v;
}

Grid2D reciprocal(const Grid2D& in, const ValidityMask* valid, GridUnit out_unit,
                  const char* where) {
  std::vector<double> out(in.size(), 1.0);
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (valid && !valid->at(i)) continue;
    out[i] = 1.0 / checked_positive(in.at(i), i, where);
  }
  if (valid) return Grid2D(in.width(), in.height(), out_unit, std::move(out), *valid);
  return Grid2D(in.width(), in.height(), out_unit, std::move(out));
}

}  // namespace

DisparityAffine compose(const DisparityAffine& outer, const DisparityAffine& inner) {
  return DisparityAffine(outer.c1 * inner.c1, outer.c1 * inner.c2 + outer.c2);
}

PointCloud unproject(const Grid2D& depth, const ValidityMask& valid, const CameraIntrinsics& cam) {
  require_unit(depth, GridUnit::MetersDepth, "unproject");
  require_same_shape(depth, valid, "unproject");
  std::vector<Vec3> pts;
  std::vector<PointCloud::Pixel> src;
  pts.reserve(valid.count());
  src.reserve(pts.capacity());
  for (int y = 0; y < depth.height(); ++y) {
    for (int x = 0; x < depth.width(); ++x) {
      if (!valid.at(x, y)) continue;
      const double d =
          checked_positive(depth.at(x, y), static_cast<std::size_t>(y) * depth.width() + x,
                           "unproject");
      pts.push_back(Vec3{(x - cam.u0) * d / cam.fx, (y - cam.v0) * d / cam.fy, d});
      src.push_back({x, y});
    }
  }
  return PointCloud(std::move(pts), std::move(src));
}

Grid2D depth_to_disparity(const Grid2D& depth) {
  require_unit(depth, GridUnit::MetersDepth, "depth_to_disparity");
  return reciprocal(depth, nullptr, GridUnit::Disparity, "depth_to_disparity");
}

Grid2D depth_to_disparity(const Grid2D& depth, const ValidityMask& valid) {
  require_unit(depth, GridUnit::MetersDepth, "depth_to_disparity");
  require_same_shape(depth, valid, "depth_to_disparity");
  return reciprocal(depth, &valid, GridUnit::Disparity, "depth_to_disparity");
}

Grid2D disparity_to_depth(const Grid2D& disparity) {
  require_unit(disparity, GridUnit::Disparity, "disparity_to_depth");
  return reciprocal(disparity, nullptr, GridUnit::MetersDepth, "disparity_to_depth");
}

Grid2D disparity_to_depth(const Grid2D& disparity, const ValidityMask& valid) {
  require_unit(disparity, GridUnit::Disparity, "disparity_to_depth");
  require_same_shape(disparity, valid, "disparity_to_depth");
  return reciprocal(disparity, &valid, GridUnit::MetersDepth, "disparity_to_depth");
}

Grid2D apply_disparity_affine(const Grid2D& depth, const DisparityAffine& t) {
  require_unit(depth, GridUnit::MetersDepth, "apply_disparity_affine");
  std::vector<double> out(depth.size());
  for (std::size_t i = 0; i < depth.size(); ++i) {
    const double d = checked_positive(depth.at(i), i, "apply_disparity_affine");
    const double denom = t.c1 + t.c2 * d;  // transformed disparity, scaled by d
    if (!(denom > 0.0))
      throw std::invalid_argument(
          "apply_disparity_affine: transformed disparity is not positive at pixel " +
          std::to_string(i));
    out[i] = d / denom;
  }
  return Grid2D(depth.width(), depth.height(), GridUnit::MetersDepth, std::move(out));
}

double depth_ratio_distortion(double z1, double z2, const DisparityAffine& t) {
  if (!(z1 > 0.0) || !(z2 > 0.0))
    throw std::invalid_argument("depth_ratio_distortion: depths must be positive");
  // (z1'/z2') / (z1/z2) simplifies to (c1 + c2*z2) / (c1 + c2*z1), which makes
  // the zero cases (c2 == 0, z1 == z2) exact in floating point.
  const double n1 = t.c1 + t.c2 * z1;
  const double n2 = t.c1 + t.c2 * z2;
  if (!(n1 > 0.0) || !(n2 > 0.0))
    throw std::invalid_argument("depth_ratio_distortion: transformed disparity is not positive");
  return std::fabs(std::log(n2 / n1));
}

namespace {

double angle_between(const Vec3& a, const Vec3& b, const char* where) {
  const double na = a.norm();
  const double nb = b.norm();
  if (!(na > 1e-12) || !(nb > 1e-12))
    throw std::invalid_argument(std::string(where) + ": degenerate corner edge");
  double c = a.dot(b) / (na * nb);
  c = std::fmin(1.0, std::fmax(-1.0, c));
  return std::acos(c);
}

}  // namespace

double angle_distortion(const Vec3& p, const Vec3& q, const Vec3& r, const DisparityAffine& t,
                        const CameraIntrinsics& cam) {
  const Vec3 in[3] = {p, q, r};
  Vec3 out[3];
  for (int i = 0; i < 3; ++i) {
    const double z = in[i].z;
    if (!(z > 0.0)) throw std::invalid_argument("angle_distortion: point depth must be positive");
    // Project, transform the depth through t, unproject with the same camera.
    const double u = cam.fx * in[i].x / z + cam.u0;
    const double v = cam.fy * in[i].y / z + cam.v0;
    if (!std::isfinite(u) || !std::isfinite(v))
      throw std::invalid_argument("angle_distortion: point projects outside the finite plane");
    const double denom = t.c1 + t.c2 * z;
    if (!(denom > 0.0))
      throw std::invalid_argument("angle_distortion: transformed disparity is not positive");
    const double zt = z / denom;
    out[i] = Vec3{(u - cam.u0) * zt / cam.fx, (v - cam.v0) * zt / cam.fy, zt};
  }
  const double before = angle_between(p - q, r - q, "angle_distortion");
  const double after = angle_between(out[0] - out[1], out[2] - out[1], "angle_distortion");
  return std::fabs(after - before);
}

double collinearity_residual(const PointCloud& points) {
  const std::size_t n = points.size();
  if (n < 3) throw std::invalid_argument("collinearity_residual: need at least 3 points");
  Vec3 c{0, 0, 0};
  for (std::size_t i = 0; i < n; ++i) c = c + points[i];
  c = c * (1.0 / static_cast<double>(n));

  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 d = points[i] - c;
    const Eigen::Vector3d v(d.x, d.y, d.z);
    scatter += v * v.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(scatter);
  const Eigen::Vector3d dir = es.eigenvectors().col(2);  // largest eigenvalue

  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 d = points[i] - c;
    const double along = d.x * dir.x() + d.y * dir.y() + d.z * dir.z();
    sum += std::fmax(0.0, d.dot(d) - along * along);
  }
  return std::sqrt(sum / static_cast<double>(n));
}

PointCloud depth_line_locus(const LineParam& line, const DisparityAffine& t,
                            const CameraIntrinsics& cam,
                            const std::vector<std::array<double, 2>>& samples) {
  std::vector<Vec3> pts;
  pts.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double x = samples[i][0];
    const double y = samples[i][1];
    const double d = line.a * x + line.b * y + line.c;
    if (!(d > 0.0))
      throw std::invalid_argument("depth_line_locus: non-positive depth at sample " +
                                  std::to_string(i));
    const double denom = t.c1 + t.c2 * d;
    if (!(denom > 0.0))
      throw std::invalid_argument(
          "depth_line_locus: transformed disparity is not positive at sample " +
          std::to_string(i));
    const double dt = d / denom;
    pts.push_back(Vec3{(x - cam.u0) * dt / cam.fx, (y - cam.v0) * dt / cam.fy, dt});
  }
  return PointCloud(std::move(pts));
}

}  // namespace gp2
