#pragma once

#include <stdexcept>

namespace gp2 {

// Pinhole intrinsics in pixels. Pixel (x, y) at depth d unprojects to
//   X = (x - u0) * d / fx,  Y = (y - v0) * d / fy,  Z = d.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double u0 = 0.0;
  double v0 = 0.0;

  CameraIntrinsics(double fx_, double fy_, double u0_, double v0_)
      : fx(fx_), fy(fy_), u0(u0_), v0(v0_) {
    if (!(fx > 0.0) || !(fy > 0.0))
      throw std::invalid_argument("CameraIntrinsics: focal lengths must be positive");
  }

  // Principal point at the geometric center of a width x height image
  // (pixel centers at integer coordinates 0..width-1).
  static CameraIntrinsics centered(double fx, double fy, int width, int height) {
    return CameraIntrinsics(fx, fy, 0.5 * (width - 1), 0.5 * (height - 1));
  }
};

}  // namespace gp2
