#pragma once

#include <functional>
#include <span>
#include <vector>

#include "gp2/grid.hpp"
#include "gp2/rng.hpp"
#include "gp2/supervision.hpp"

namespace gp2 {

// Loss value and its analytic gradient with respect to the log-depth
// prediction, one entry per valid pixel in row-major order. Pixels excluded by
// the mask have no influence on either.
struct LossValueGrad {
  double value = 0.0;
  std::vector<double> grad;
};

// Scale-invariant L1 in log space: residuals r_i = l_i - log(gt_i) are
// median-aligned and the mean absolute deviation is returned. The gradient
// differentiates through the median (subgradient of the order statistic), so
// it is exact almost everywhere; sign(0) = 0 at kinks.
LossValueGrad uts_loss(const Grid2D& pred_log, const Grid2D& gt_depth, const ValidityMask& valid);

// Shift-and-scale-invariant L1 in disparity space: prediction disparity
// exp(-l) and ground-truth disparity are each mean/std-normalized over the
// mask and compared with mean absolute difference. The gradient carries the
// full chain rule through the prediction's mean and std. Requires both sides
// non-constant on the mask (std >= 1e-6).
LossValueGrad utss_loss(const Grid2D& pred_log, const Grid2D& gt_disp, const ValidityMask& valid);

// Supervision-gated sum: scale-complete classes (ABSOLUTE, UTS) contribute
// uts_loss on the depth target plus utss_loss on its disparity; UTSS samples
// contribute utss_loss on the disparity target only. `target` is depth for
// ABSOLUTE/UTS and disparity for UTSS.
LossValueGrad mixture_loss(const Grid2D& pred_log, const Grid2D& target, const ValidityMask& valid,
                           SupervisionClass cls);

// A differentiable-loss evaluation hook plus a genericity margin: roughly the
// distance (in prediction log-depth units) from the evaluation point to the
// nearest kink of the piecewise-smooth loss.
struct LossProbe {
  std::function<LossValueGrad(const Grid2D& pred_log)> loss;
  std::function<double(const Grid2D& pred_log)> margin;
};

LossProbe make_uts_probe(Grid2D gt_depth, ValidityMask valid);
LossProbe make_utss_probe(Grid2D gt_disp, ValidityMask valid);
LossProbe make_mixture_probe(Grid2D target, ValidityMask valid, SupervisionClass cls);

// Central-difference check of the probe's analytic gradient at pred_log,
// reporting the maximum relative deviation over valid pixels. If the point is
// too close to a kink (margin <= 10h) the prediction is jittered and retried,
// up to 10 times; a persistently non-generic point is an error.
double finite_diff_check(const LossProbe& probe, const Grid2D& pred_log, const ValidityMask& valid,
                         double h, Rng& rng);

// Same comparison for an arbitrary scalar function of a parameter vector,
// restricted to the given coordinates (used for losses composed with the
// regressor). No resampling; the caller guarantees genericity.
double finite_diff_check_params(const std::function<double(std::span<const double>)>& f,
                                std::span<const double> at, std::span<const double> analytic_grad,
                                std::span<const std::size_t> coords, double h);

}  // namespace gp2
