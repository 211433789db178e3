#pragma once

#include <array>
#include <stdexcept>
#include <vector>

#include "gp2/camera.hpp"
#include "gp2/cloud.hpp"
#include "gp2/grid.hpp"

namespace gp2 {

// Affine map acting on disparity: D' = c1 * D + c2. In depth space this is
// d' = d / (c1 + c2 * d); c2 = 0 is a pure rescaling of the scene, c2 != 0
// bends metric structure. The transformed disparity must stay strictly
// positive wherever the map is applied; this is checked at application time.
struct DisparityAffine {
  double c1 = 1.0;
  double c2 = 0.0;

  DisparityAffine(double c1_, double c2_) : c1(c1_), c2(c2_) {
    if (!(c1 > 0.0)) throw std::invalid_argument("DisparityAffine: c1 must be positive");
  }
};

// outer after inner: D -> outer(inner(D)).
DisparityAffine compose(const DisparityAffine& outer, const DisparityAffine& inner);

// Depth affine in image coordinates: d(x, y) = a*x + b*y + c.
struct LineParam {
  double a = 0.0;
  double b = 0.0;
  double c = 1.0;
};

// Pinhole unprojection of every valid pixel, row-major, with source pixels
// recorded. Rejects non-positive depth at a valid pixel.
PointCloud unproject(const Grid2D& depth, const ValidityMask& valid, const CameraIntrinsics& cam);

// Elementwise reciprocal with unit re-tagging. The masked overloads check and
// transform only valid pixels; invalid payloads become 1.0.
Grid2D depth_to_disparity(const Grid2D& depth);
Grid2D depth_to_disparity(const Grid2D& depth, const ValidityMask& valid);
Grid2D disparity_to_depth(const Grid2D& disparity);
Grid2D disparity_to_depth(const Grid2D& disparity, const ValidityMask& valid);

// d -> d / (c1 + c2*d) on every pixel; rejects the first pixel where the
// transformed disparity would not be strictly positive.
Grid2D apply_disparity_affine(const Grid2D& depth, const DisparityAffine& t);

// |log of the ratio between transformed and original depth ratios| for two
// depths z1, z2 > 0. Exactly zero iff c2 == 0 or z1 == z2.
double depth_ratio_distortion(double z1, double z2, const DisparityAffine& t);

// Absolute change of the angle at vertex q of the corner (p, q, r) when all
// three points are projected, have their depths pushed through t, and are
// unprojected again. Rejects non-positive depths and degenerate edges.
double angle_distortion(const Vec3& p, const Vec3& q, const Vec3& r, const DisparityAffine& t,
                        const CameraIntrinsics& cam);

// RMS distance of >= 3 points to their best-fit 3D line (principal direction
// of the centered points).
double collinearity_residual(const PointCloud& points);

// Samples the locus {unproject(x, y, d') : d = a*x + b*y + c, d' = d/(c1+c2*d)}
// at the given image points. Rejects samples with non-positive d or d'.
PointCloud depth_line_locus(const LineParam& line, const DisparityAffine& t,
                            const CameraIntrinsics& cam,
                            const std::vector<std::array<double, 2>>& samples);

}  // namespace gp2
