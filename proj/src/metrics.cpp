#include "gp2/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "gp2/alignment.hpp"
#include "gp2/geometry.hpp"

namespace gp2 {

namespace {

std::vector<std::uint32_t> paired_depth_valid(const Grid2D& pred, const Grid2D& gt,
                                              const ValidityMask& valid, const char* where) {
  require_same_shape(pred, gt, where);
  require_same_shape(pred, valid, where);
  auto idx = valid.valid_indices();
  if (idx.empty()) throw std::invalid_argument(std::string(where) + ": no valid pixels");
  for (auto i : idx) {
    if (!(gt.at(i) > 0.0) || !(pred.at(i) > 0.0))
      throw std::invalid_argument(std::string(where) + ": non-positive depth at valid pixel " +
                                  std::to_string(i));
  }
  return idx;
}

}  // namespace

double delta_error(const Grid2D& pred_depth, const Grid2D& gt_depth, const ValidityMask& valid,
                   double threshold) {
  const auto idx = paired_depth_valid(pred_depth, gt_depth, valid, "delta_error");
  std::size_t bad = 0;
  for (auto i : idx) {
    const double ratio = std::fmax(pred_depth.at(i) / gt_depth.at(i),
                                   gt_depth.at(i) / pred_depth.at(i));
    if (ratio > threshold) ++bad;
  }
  return static_cast<double>(bad) / static_cast<double>(idx.size());
}

double rel_error(const Grid2D& pred_depth, const Grid2D& gt_depth, const ValidityMask& valid) {
  const auto idx = paired_depth_valid(pred_depth, gt_depth, valid, "rel_error");
  double sum = 0.0;
  for (auto i : idx) sum += std::fabs(pred_depth.at(i) - gt_depth.at(i)) / gt_depth.at(i);
  return sum / static_cast<double>(idx.size());
}

double cloud_rmse(const PointCloud& a, const PointCloud& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("cloud_rmse: clouds have different sizes (" +
                                std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  if (a.size() == 0) throw std::invalid_argument("cloud_rmse: empty clouds");
  if (a.has_source() && b.has_source()) {
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a.source()[i] != b.source()[i])
        throw std::invalid_argument("cloud_rmse: unmatched source pixel at point " +
                                    std::to_string(i));
  }
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Vec3 d = a[i] - b[i];
    ss += d.dot(d);
  }
  return std::sqrt(ss / static_cast<double>(a.size()));
}

MetricReport evaluate_uts(const Grid2D& pred_log, const Grid2D& gt_depth,
                          const ValidityMask& valid, const CameraIntrinsics& cam,
                          double delta_threshold) {
  const Grid2D aligned = scale_align_depth(pred_log, gt_depth, valid);

  MetricReport report;
  report.delta_error = delta_error(aligned, gt_depth, valid, delta_threshold);
  report.rel = rel_error(aligned, gt_depth, valid);
  report.cloud_rmse = cloud_rmse(unproject(aligned, valid, cam), unproject(gt_depth, valid, cam));

  // Shift indicator on the raw (unaligned) disparities: a prediction whose
  // disparity is a pure positive scaling of ground truth fits with shift 0.
  std::vector<double> pd(pred_log.size(), 1.0);
  for (std::size_t i = 0; i < pd.size(); ++i)
    if (valid.at(i)) pd[i] = std::exp(-pred_log.at(i));
  const Grid2D pred_disp(pred_log.width(), pred_log.height(), GridUnit::Disparity, std::move(pd));
  report.shift_indicator =
      std::fabs(lsq_shift_scale(pred_disp, depth_to_disparity(gt_depth, valid), valid).shift);
  return report;
}

}  // namespace gp2
