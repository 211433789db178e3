#include "gp2/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "gp2/alignment.hpp"

namespace gp2 {

namespace {

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

void require_unit(const Grid2D& g, GridUnit unit, const char* where) {
  if (g.unit() != unit)
    throw std::invalid_argument(std::string(where) + ": expected " + to_string(unit) +
                                " grid, got " + to_string(g.unit()));
}

std::vector<std::uint32_t> paired_valid(const Grid2D& pred, const Grid2D& target,
                                        const ValidityMask& valid, const char* where) {
  require_unit(pred, GridUnit::LogDepth, where);
  require_same_shape(pred, target, where);
  require_same_shape(pred, valid, where);
  auto idx = valid.valid_indices();
  if (idx.empty()) throw std::invalid_argument(std::string(where) + ": no valid pixels");
  return idx;
}

// Residuals r_i = l_i - log(gt_i) over the mask.
std::vector<double> log_residuals(const Grid2D& pred_log, const Grid2D& gt_depth,
                                  const std::vector<std::uint32_t>& idx, const char* where) {
  std::vector<double> r;
  r.reserve(idx.size());
  for (auto i : idx) {
    const double d = gt_depth.at(i);
    if (!(d > 0.0))
      throw std::invalid_argument(std::string(where) + ": non-positive ground truth at pixel " +
                                  std::to_string(i));
    r.push_back(pred_log.at(i) - std::log(d));
  }
  return r;
}

struct Normalized {
  std::vector<double> hat;  // (x - mean) / std
  double mean = 0.0;
  double std = 0.0;
};

Normalized normalize_vec(const std::vector<double>& x, const char* where, const char* which) {
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / n);
  if (!(sd >= kSigmaEps))
    throw std::invalid_argument(std::string(where) + ": " + which +
                                " disparity is constant on the mask (std < 1e-6)");
  Normalized out;
  out.mean = mean;
  out.std = sd;
  out.hat.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out.hat[i] = (x[i] - mean) / sd;
  return out;
}

// Disparity of a depth target for the always-on shift-invariant term.
Grid2D depth_to_disparity_for_loss(const Grid2D& depth, const ValidityMask& valid) {
  std::vector<double> out(depth.size(), 1.0);
  for (std::size_t i = 0; i < depth.size(); ++i) {
    if (!valid.at(i)) continue;
    const double d = depth.at(i);
    if (!(d > 0.0))
      throw std::invalid_argument("mixture_loss: non-positive depth target at pixel " +
                                  std::to_string(i));
    out[i] = 1.0 / d;
  }
  return Grid2D(depth.width(), depth.height(), GridUnit::Disparity, std::move(out));
}

}  // namespace

LossValueGrad uts_loss(const Grid2D& pred_log, const Grid2D& gt_depth, const ValidityMask& valid) {
  require_unit(gt_depth, GridUnit::MetersDepth, "uts_loss");
  const auto idx = paired_valid(pred_log, gt_depth, valid, "uts_loss");
  const auto r = log_residuals(pred_log, gt_depth, idx, "uts_loss");
  const std::size_t n = r.size();
  const double inv_n = 1.0 / static_cast<double>(n);

  const MedianInfo med = median_with_indices(r);

  LossValueGrad out;
  out.grad.assign(n, 0.0);
  double sign_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dev = r[i] - med.value;
    out.value += std::fabs(dev) * inv_n;
    const double s = sign(dev);
    out.grad[i] = s * inv_n;
    sign_sum += s;
  }
  // Chain rule through the median: d(median)/d(l_i) is 1 at the middle order
  // statistic (split across the two middles for even counts), and every
  // |r_j - median| term feeds back -sign(r_j - median) through it.
  const double med_grad = -sign_sum * inv_n;
  if (med.lo == med.hi) {
    out.grad[med.lo] += med_grad;
  } else {
    out.grad[med.lo] += 0.5 * med_grad;
    out.grad[med.hi] += 0.5 * med_grad;
  }
  return out;
}

LossValueGrad utss_loss(const Grid2D& pred_log, const Grid2D& gt_disp, const ValidityMask& valid) {
  require_unit(gt_disp, GridUnit::Disparity, "utss_loss");
  const auto idx = paired_valid(pred_log, gt_disp, valid, "utss_loss");
  const std::size_t n = idx.size();
  if (n < 2) throw std::invalid_argument("utss_loss: needs at least 2 valid pixels");
  const double inv_n = 1.0 / static_cast<double>(n);

  std::vector<double> pd(n), gd(n);
  for (std::size_t i = 0; i < n; ++i) {
    pd[i] = std::exp(-pred_log.at(idx[i]));  // prediction disparity
    gd[i] = gt_disp.at(idx[i]);
  }
  const Normalized P = normalize_vec(pd, "utss_loss", "prediction");
  const Normalized G = normalize_vec(gd, "utss_loss", "ground-truth");

  LossValueGrad out;
  out.grad.assign(n, 0.0);
  double e_mean = 0.0, ephat_mean = 0.0;
  std::vector<double> e(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double diff = P.hat[i] - G.hat[i];
    out.value += std::fabs(diff) * inv_n;
    e[i] = sign(diff);
    e_mean += e[i] * inv_n;
    ephat_mean += e[i] * P.hat[i] * inv_n;
  }
  // d value / d D_j = (e_j - mean(e) - mean(e*Phat) * Phat_j) / (N * std),
  // from differentiating (D_j - mean)/std through mean and std, and
  // d D_j / d l_j = -exp(-l_j) = -D_j.
  for (std::size_t j = 0; j < n; ++j) {
    const double dval_dD = (e[j] - e_mean - ephat_mean * P.hat[j]) * inv_n / P.std;
    out.grad[j] = -pd[j] * dval_dD;
  }
  return out;
}

LossValueGrad mixture_loss(const Grid2D& pred_log, const Grid2D& target, const ValidityMask& valid,
                           SupervisionClass cls) {
  if (!uses_uts_term(cls)) {
    require_unit(target, GridUnit::Disparity, "mixture_loss");
    return utss_loss(pred_log, target, valid);
  }
  require_unit(target, GridUnit::MetersDepth, "mixture_loss");
  LossValueGrad uts = uts_loss(pred_log, target, valid);
  const LossValueGrad utss = utss_loss(pred_log, depth_to_disparity_for_loss(target, valid), valid);
  uts.value += utss.value;
  for (std::size_t i = 0; i < uts.grad.size(); ++i) uts.grad[i] += utss.grad[i];
  return uts;
}

// --- probes and finite differences ------------------------------------------

namespace {

// Margin to the nearest kink of the median-aligned L1, in residual units.
// The subgradient changes only when a residual crosses the middle value(s):
// a deviation sign flip (crossing the median) or a change of which elements
// are the middle (crossing r[lo] or r[hi]). Rank swaps strictly on one side
// of the median leave the subgradient untouched and are ignored. For an even
// count the two middle elements crossing each other is itself a kink.
double uts_margin(const std::vector<double>& r) {
  const MedianInfo med = median_with_indices(r);
  const double lo_val = r[med.lo];
  const double hi_val = r[med.hi];
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (i == med.lo || i == med.hi) continue;
    margin = std::min({margin, std::fabs(r[i] - lo_val), std::fabs(r[i] - med.value),
                       std::fabs(r[i] - hi_val)});
  }
  if (med.lo != med.hi) margin = std::min(margin, hi_val - lo_val);
  return margin;
}

double utss_margin(const std::vector<double>& pd, const std::vector<double>& gd) {
  const Normalized P = normalize_vec(pd, "utss margin", "prediction");
  const Normalized G = normalize_vec(gd, "utss margin", "ground-truth");
  double margin_hat = std::numeric_limits<double>::infinity();
  double dmax = 0.0, hat_max = 0.0;
  for (std::size_t i = 0; i < pd.size(); ++i) {
    margin_hat = std::min(margin_hat, std::fabs(P.hat[i] - G.hat[i]));
    dmax = std::max(dmax, pd[i]);
    hat_max = std::max(hat_max, std::fabs(P.hat[i]));
  }
  // A log-depth step of h moves normalized disparities by at most about
  // kappa * h; convert the normalized-space margin into log-depth units.
  const double kappa = (dmax / P.std) * (2.0 + hat_max);
  return margin_hat / kappa;
}

std::vector<double> gather(const Grid2D& g, const std::vector<std::uint32_t>& idx) {
  std::vector<double> v;
  v.reserve(idx.size());
  for (auto i : idx) v.push_back(g.at(i));
  return v;
}

}  // namespace

LossProbe make_uts_probe(Grid2D gt_depth, ValidityMask valid) {
  LossProbe probe;
  probe.loss = [gt_depth, valid](const Grid2D& l) { return uts_loss(l, gt_depth, valid); };
  probe.margin = [gt_depth, valid](const Grid2D& l) {
    const auto idx = valid.valid_indices();
    return uts_margin(log_residuals(l, gt_depth, idx, "uts margin"));
  };
  return probe;
}

LossProbe make_utss_probe(Grid2D gt_disp, ValidityMask valid) {
  LossProbe probe;
  probe.loss = [gt_disp, valid](const Grid2D& l) { return utss_loss(l, gt_disp, valid); };
  probe.margin = [gt_disp, valid](const Grid2D& l) {
    const auto idx = valid.valid_indices();
    std::vector<double> pd(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) pd[i] = std::exp(-l.at(idx[i]));
    return utss_margin(pd, gather(gt_disp, idx));
  };
  return probe;
}

LossProbe make_mixture_probe(Grid2D target, ValidityMask valid, SupervisionClass cls) {
  if (!uses_uts_term(cls)) return make_utss_probe(std::move(target), std::move(valid));
  LossProbe uts = make_uts_probe(target, valid);
  LossProbe utss = make_utss_probe(depth_to_disparity_for_loss(target, valid), valid);
  LossProbe probe;
  probe.loss = [target, valid, cls](const Grid2D& l) { return mixture_loss(l, target, valid, cls); };
  probe.margin = [uts, utss](const Grid2D& l) {
    return std::min(uts.margin(l), utss.margin(l));
  };
  return probe;
}

double finite_diff_check(const LossProbe& probe, const Grid2D& pred_log, const ValidityMask& valid,
                         double h, Rng& rng) {
  const auto idx = valid.valid_indices();
  std::vector<double> values = pred_log.values();
  for (int attempt = 0; attempt < 10; ++attempt) {
    Grid2D l(pred_log.width(), pred_log.height(), GridUnit::LogDepth, values);
    if (probe.margin(l) > 10.0 * h) {
      const LossValueGrad analytic = probe.loss(l);
      double max_rel = 0.0;
      for (std::size_t k = 0; k < idx.size(); ++k) {
        std::vector<double> vp = values, vm = values;
        vp[idx[k]] += h;
        vm[idx[k]] -= h;
        const double fp =
            probe.loss(Grid2D(l.width(), l.height(), GridUnit::LogDepth, std::move(vp))).value;
        const double fm =
            probe.loss(Grid2D(l.width(), l.height(), GridUnit::LogDepth, std::move(vm))).value;
        const double fd = (fp - fm) / (2.0 * h);
        const double an = analytic.grad[k];
        const double rel = std::fabs(fd - an) / std::max({1.0, std::fabs(fd), std::fabs(an)});
        max_rel = std::max(max_rel, rel);
      }
      return max_rel;
    }
    // Too close to a kink: jitter the valid pixels and try again.
    for (auto i : idx) values[i] += rng.uniform(-0.01, 0.01);
  }
  throw std::runtime_error("finite_diff_check: non-generic evaluation point after 10 attempts");
}

double finite_diff_check_params(const std::function<double(std::span<const double>)>& f,
                                std::span<const double> at, std::span<const double> analytic_grad,
                                std::span<const std::size_t> coords, double h) {
  std::vector<double> p(at.begin(), at.end());
  double max_rel = 0.0;
  for (std::size_t c : coords) {
    const double saved = p[c];
    p[c] = saved + h;
    const double fp = f(p);
    p[c] = saved - h;
    const double fm = f(p);
    p[c] = saved;
    const double fd = (fp - fm) / (2.0 * h);
    const double an = analytic_grad[c];
    const double rel = std::fabs(fd - an) / std::max({1.0, std::fabs(fd), std::fabs(an)});
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

}  // namespace gp2
