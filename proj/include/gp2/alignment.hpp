#pragma once

#include <cstddef>
#include <span>
#include <utility>

#include "gp2/grid.hpp"

namespace gp2 {

// Sufficient statistics of a normalization over valid pixels. std is the
// population standard deviation (divide by N) and is guarded against
// degeneracy: operations reject std < kSigmaEps rather than clamp.
struct AlignmentStats {
  double mean = 0.0;
  double std = 0.0;
  int count = 0;
};

inline constexpr double kSigmaEps = 1e-6;

// Least-squares affine fit scale*x + shift ~ y over valid pixels.
struct ShiftScaleFit {
  double scale = 1.0;
  double shift = 0.0;
  double residual_rms = 0.0;
};

// Median of values; for even counts the mean of the two middle order
// statistics. lo/hi are indices into the input span (equal for odd counts);
// ties are broken by input position so results are deterministic.
struct MedianInfo {
  double value = 0.0;
  std::size_t lo = 0;
  std::size_t hi = 0;
};
MedianInfo median_with_indices(std::span<const double> values);

// (value - mean) / std per valid pixel (invalid payload becomes 0).
// Requires >= 2 valid pixels and a non-degenerate std.
std::pair<Grid2D, AlignmentStats> normalize_meanstd(const Grid2D& g, const ValidityMask& valid);

// Median over valid pixels of (log-prediction - log ground-truth depth): the
// log-scale that best aligns an up-to-scale prediction under the L1 objective.
// Requires >= 1 valid pixel and positive ground truth on the mask.
double median_log_shift(const Grid2D& pred_log, const Grid2D& gt_depth, const ValidityMask& valid);

// exp(log-prediction - median_log_shift): the scale-aligned depth prediction.
Grid2D scale_align_depth(const Grid2D& pred_log, const Grid2D& gt_depth, const ValidityMask& valid);

// Closed-form 2x2 normal equations for min ||scale*pred + shift - gt||^2 over
// valid pixels. |shift| of the fit is the geometric-correctness indicator:
// shift-correct predictions fit ground truth with shift ~ 0. Requires >= 2
// valid pixels and non-constant prediction disparity.
ShiftScaleFit lsq_shift_scale(const Grid2D& pred_disp, const Grid2D& gt_disp,
                              const ValidityMask& valid);

}  // namespace gp2
