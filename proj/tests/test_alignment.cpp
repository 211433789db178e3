#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"

#include "gp2/alignment.hpp"
#include "gp2/grid.hpp"
#include "gp2/rng.hpp"

using namespace gp2;

namespace {

Grid2D row(std::vector<double> v, GridUnit unit = GridUnit::Dimensionless) {
  const int n = static_cast<int>(v.size());
  return Grid2D(n, 1, unit, std::move(v));
}

}  // namespace

TEST_CASE("median with indices: odd, even, and tied inputs") {
  {
    const double v[] = {3.0, 1.0, 2.0};
    MedianInfo m = median_with_indices(v);
    CHECK(m.value == 2.0);
    CHECK(m.lo == 2);
    CHECK(m.hi == 2);
  }
  {
    const double v[] = {4.0, 1.0, 3.0, 2.0};
    MedianInfo m = median_with_indices(v);
    CHECK(m.value == 2.5);
    CHECK(m.lo == 3);  // value 2
    CHECK(m.hi == 2);  // value 3
  }
  {
    // Ties resolve by input position, deterministically.
    const double v[] = {1.0, 1.0, 1.0};
    MedianInfo m = median_with_indices(v);
    CHECK(m.value == 1.0);
    CHECK(m.lo == 1);
    CHECK(m.hi == 1);
  }
}

TEST_CASE("mean/std normalization reproduces the frozen example") {
  // [1,2,3,4]: mean 2.5, population std sqrt(1.25).
  auto [normed, stats] = normalize_meanstd(row({1, 2, 3, 4}), ValidityMask::all_valid(4, 1));
  CHECK(stats.mean == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(stats.std == doctest::Approx(1.118033988749895).epsilon(1e-15));
  CHECK(stats.count == 4);
  CHECK(normed.at(0) == doctest::Approx(-1.3416407864998738).epsilon(1e-14));
  CHECK(normed.at(1) == doctest::Approx(-0.4472135954999579).epsilon(1e-14));
  CHECK(normed.at(2) == doctest::Approx(0.4472135954999579).epsilon(1e-14));
  CHECK(normed.at(3) == doctest::Approx(1.3416407864998738).epsilon(1e-14));
}

TEST_CASE("normalization ignores invalid pixels and zeroes their output") {
  ValidityMask m(5, 1, {1, 0, 1, 1, 1});
  auto [normed, stats] = normalize_meanstd(row({1, 999, 2, 3, 4}), m);
  CHECK(stats.mean == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(stats.count == 4);
  CHECK(normed.at(1) == 0.0);
  CHECK(normed.at(0) == doctest::Approx(-1.3416407864998738).epsilon(1e-14));
}

TEST_CASE("normalization rejects degenerate inputs") {
  CHECK_THROWS_AS(normalize_meanstd(row({5, 5, 5}), ValidityMask::all_valid(3, 1)),
                  std::invalid_argument);
  ValidityMask one(3, 1, {0, 1, 0});
  CHECK_THROWS_AS(normalize_meanstd(row({1, 2, 3}), one), std::invalid_argument);
}

TEST_CASE("median log shift aligns an up-to-scale prediction") {
  // pred_log = log(gt) + log(3) at every pixel -> shift is exactly log(3).
  Grid2D gt(2, 2, GridUnit::MetersDepth, {1.0, 2.0, 4.0, 8.0});
  std::vector<double> pl(4);
  for (int i = 0; i < 4; ++i) pl[i] = std::log(gt.at(i)) + std::log(3.0);
  Grid2D pred_log(2, 2, GridUnit::LogDepth, pl);
  ValidityMask valid = ValidityMask::all_valid(2, 2);

  CHECK(median_log_shift(pred_log, gt, valid) == doctest::Approx(std::log(3.0)).epsilon(1e-15));
  Grid2D aligned = scale_align_depth(pred_log, gt, valid);
  CHECK(aligned.unit() == GridUnit::MetersDepth);
  for (int i = 0; i < 4; ++i) CHECK(aligned.at(i) == doctest::Approx(gt.at(i)).epsilon(1e-12));
}

TEST_CASE("least-squares shift/scale fit reproduces the frozen example") {
  // pred [1,2,3] -> gt [1,2,4]: scale 1.5, shift -2/3, rms sqrt(1/18).
  ShiftScaleFit fit = lsq_shift_scale(row({1, 2, 3}, GridUnit::Disparity),
                                      row({1, 2, 4}, GridUnit::Disparity),
                                      ValidityMask::all_valid(3, 1));
  CHECK(fit.scale == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(fit.shift == doctest::Approx(-2.0 / 3.0).epsilon(1e-12));
  CHECK(fit.residual_rms == doctest::Approx(0.23570226039551598).epsilon(1e-12));
}

TEST_CASE("least-squares fit recovers an exact affine relation") {
  Rng rng(3);
  std::vector<double> pred(64), gt(64);
  for (int i = 0; i < 64; ++i) {
    pred[i] = rng.uniform(0.1, 1.0);
    gt[i] = 2.75 * pred[i] + 0.4;
  }
  ShiftScaleFit fit = lsq_shift_scale(row(pred, GridUnit::Disparity),
                                      row(gt, GridUnit::Disparity),
                                      ValidityMask::all_valid(64, 1));
  CHECK(fit.scale == doctest::Approx(2.75).epsilon(1e-12));
  CHECK(fit.shift == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(fit.residual_rms == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("least-squares fit rejects constant predictions") {
  CHECK_THROWS_AS(lsq_shift_scale(row({2, 2, 2}, GridUnit::Disparity),
                                  row({1, 2, 3}, GridUnit::Disparity),
                                  ValidityMask::all_valid(3, 1)),
                  std::invalid_argument);
}
