#pragma once

#include "gp2/camera.hpp"
#include "gp2/cloud.hpp"
#include "gp2/grid.hpp"

namespace gp2 {

// Headline evaluation numbers for one scale-complete (UTS) evaluation.
// delta_error and rel are error fractions/ratios: lower is better.
struct MetricReport {
  double delta_error = 0.0;      // fraction of pixels with max(p/g, g/p) > threshold
  double rel = 0.0;              // mean |p - g| / g
  double cloud_rmse = 0.0;       // pointwise RMSE between unprojected clouds, meters
  double shift_indicator = 0.0;  // |shift| of the affine disparity fit; ~0 iff shift-correct
};

// Fraction of valid pixels whose depth ratio max(pred/gt, gt/pred) strictly
// exceeds `threshold` (default 1.25). Both grids are depth; gt must be
// positive on the mask.
double delta_error(const Grid2D& pred_depth, const Grid2D& gt_depth, const ValidityMask& valid,
                   double threshold = 1.25);

// Mean |pred - gt| / gt over valid pixels.
double rel_error(const Grid2D& pred_depth, const Grid2D& gt_depth, const ValidityMask& valid);

// Root-mean-square 3D distance between corresponding points. Clouds must have
// equal length; when both carry source pixels they must match pairwise.
double cloud_rmse(const PointCloud& a, const PointCloud& b);

// Scale-only evaluation of an up-to-scale prediction: median-aligns the
// log-depth prediction to ground truth, computes delta/rel on the aligned
// depth, unprojects both with the same intrinsics for cloud_rmse, and reports
// |shift| of the affine fit between the RAW prediction disparity and
// ground-truth disparity as the geometric-correctness indicator.
MetricReport evaluate_uts(const Grid2D& pred_log, const Grid2D& gt_depth,
                          const ValidityMask& valid, const CameraIntrinsics& cam,
                          double delta_threshold = 1.25);

}  // namespace gp2
