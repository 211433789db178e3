#include "gp2/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace gp2 {

namespace {

void require_unit(const Grid2D& g, GridUnit unit, const char* where) {
  if (g.unit() != unit)
    throw std::invalid_argument(std::string(where) + ": expected " + to_string(unit) +
                                " grid, got " + to_string(g.unit()));
}

std::vector<std::uint32_t> require_valid(const Grid2D& g, const ValidityMask& valid,
                                         std::size_t min_count, const char* where) {
  require_same_shape(g, valid, where);
  auto idx = valid.valid_indices();
  if (idx.size() < min_count)
    throw std::invalid_argument(std::string(where) + ": needs at least " +
                                std::to_string(min_count) + " valid pixels, got " +
                                std::to_string(idx.size()));
  return idx;
}

AlignmentStats stats_over(const Grid2D& g, const std::vector<std::uint32_t>& idx) {
  double sum = 0.0;
  for (auto i : idx) sum += g.at(i);
  const double mean = sum / static_cast<double>(idx.size());
  double ss = 0.0;
  for (auto i : idx) {
    const double d = g.at(i) - mean;
    ss += d * d;
  }
  return AlignmentStats{mean, std::sqrt(ss / static_cast<double>(idx.size())),
                        static_cast<int>(idx.size())};
}

}  // namespace

MedianInfo median_with_indices(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("median_with_indices: empty input");
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] != values[b] ? values[a] < values[b] : a < b;
  });
  const std::size_t n = values.size();
  if (n % 2 == 1) {
    const std::size_t m = order[n / 2];
    return MedianInfo{values[m], m, m};
  }
  const std::size_t lo = order[n / 2 - 1];
  const std::size_t hi = order[n / 2];
  return MedianInfo{0.5 * (values[lo] + values[hi]), lo, hi};
}

std::pair<Grid2D, AlignmentStats> normalize_meanstd(const Grid2D& g, const ValidityMask& valid) {
  const auto idx = require_valid(g, valid, 2, "normalize_meanstd");
  const AlignmentStats st = stats_over(g, idx);
  if (!(st.std >= kSigmaEps))
    throw std::invalid_argument("normalize_meanstd: degenerate input (std < 1e-6)");
  std::vector<double> out(g.size(), 0.0);
  for (auto i : idx) out[i] = (g.at(i) - st.mean) / st.std;
  return {Grid2D(g.width(), g.height(), GridUnit::Dimensionless, std::move(out)), st};
}

double median_log_shift(const Grid2D& pred_log, const Grid2D& gt_depth,
                        const ValidityMask& valid) {
  require_unit(pred_log, GridUnit::LogDepth, "median_log_shift");
  require_unit(gt_depth, GridUnit::MetersDepth, "median_log_shift");
  require_same_shape(pred_log, gt_depth, "median_log_shift");
  const auto idx = require_valid(pred_log, valid, 1, "median_log_shift");
  std::vector<double> residuals;
  residuals.reserve(idx.size());
  for (auto i : idx) {
    const double d = gt_depth.at(i);
    if (!(d > 0.0))
      throw std::invalid_argument("median_log_shift: non-positive ground truth at valid pixel " +
                                  std::to_string(i));
    residuals.push_back(pred_log.at(i) - std::log(d));
  }
  return median_with_indices(residuals).value;
}

Grid2D scale_align_depth(const Grid2D& pred_log, const Grid2D& gt_depth,
                         const ValidityMask& valid) {
  const double mu = median_log_shift(pred_log, gt_depth, valid);
  std::vector<double> out(pred_log.size(), 1.0);
  for (std::size_t i = 0; i < out.size(); ++i)
    if (valid.at(i)) out[i] = std::exp(pred_log.at(i) - mu);
  return Grid2D(pred_log.width(), pred_log.height(), GridUnit::MetersDepth, std::move(out), valid);
}

ShiftScaleFit lsq_shift_scale(const Grid2D& pred_disp, const Grid2D& gt_disp,
                              const ValidityMask& valid) {
  require_unit(pred_disp, GridUnit::Disparity, "lsq_shift_scale");
  require_unit(gt_disp, GridUnit::Disparity, "lsq_shift_scale");
  require_same_shape(pred_disp, gt_disp, "lsq_shift_scale");
  const auto idx = require_valid(pred_disp, valid, 2, "lsq_shift_scale");
  const double n = static_cast<double>(idx.size());

  double mx = 0.0, my = 0.0;
  for (auto i : idx) {
    mx += pred_disp.at(i);
    my += gt_disp.at(i);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (auto i : idx) {
    const double dx = pred_disp.at(i) - mx;
    sxx += dx * dx;
    sxy += dx * (gt_disp.at(i) - my);
  }
  // Singular normal equations iff the prediction is constant on the mask.
  if (!(sxx / n > 1e-18 * (1.0 + mx * mx)))
    throw std::invalid_argument("lsq_shift_scale: constant prediction disparity (singular fit)");

  ShiftScaleFit fit;
  fit.scale = sxy / sxx;
  fit.shift = my - fit.scale * mx;
  double ss = 0.0;
  for (auto i : idx) {
    const double r = fit.scale * pred_disp.at(i) + fit.shift - gt_disp.at(i);
    ss += r * r;
  }
  fit.residual_rms = std::sqrt(ss / n);
  return fit;
}

}  // namespace gp2
