#include "gp2/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "json.hpp"

#include "gp2/fileio.hpp"
#include "gp2/pfm.hpp"

namespace gp2 {

namespace {

using nlohmann::json;

void require_absolute(const ToyScene& scene, const char* where) {
  if (scene.cls != SupervisionClass::Absolute)
    throw std::invalid_argument(std::string(where) + ": input scene must carry ABSOLUTE ground truth");
}

}  // namespace

ToyScene generate_scene(const SceneConfig& cfg, std::uint64_t seed) {
  if (cfg.width <= 0 || cfg.height <= 0 || cfg.region_grid <= 0)
    throw std::invalid_argument("generate_scene: dimensions and region grid must be positive");
  if (!(cfg.depth_min > 0.0) || !(cfg.depth_max > cfg.depth_min))
    throw std::invalid_argument("generate_scene: depth range must satisfy 0 < min < max");
  if (!(cfg.gamma_min > 0.0) || !(cfg.gamma_max >= cfg.gamma_min))
    throw std::invalid_argument("generate_scene: slope range must satisfy 0 < min <= max");
  if (cfg.gamma_waves < 0.0)
    throw std::invalid_argument("generate_scene: gamma_waves must be non-negative");

  Rng rng(seed);
  const int w = cfg.width, h = cfg.height, r = cfg.region_grid;
  const double disp_lo = 1.0 / cfg.depth_max;
  const double disp_hi = 1.0 / cfg.depth_min;

  // Draw order is part of the format: response index, region planes,
  // channel-0 noise row-major, channel-2 noise row-major.
  const double u = rng.uniform(0.0, 1.0);
  const double t = cfg.gamma_waves > 0.0
                       ? 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * cfg.gamma_waves * u)
                       : u;
  const double gamma = cfg.gamma_min + (cfg.gamma_max - cfg.gamma_min) * t;

  struct Region {
    double base, gx, gy;
  };
  std::vector<Region> regions(static_cast<std::size_t>(r) * r);
  for (auto& reg : regions) {
    reg.base = rng.uniform(disp_lo, disp_hi);
    reg.gx = rng.uniform(-0.25, 0.25) * (disp_hi - disp_lo);
    reg.gy = rng.uniform(-0.25, 0.25) * (disp_hi - disp_lo);
  }

  const std::size_t count = static_cast<std::size_t>(w) * h;
  std::vector<double> depth(count), c0(count), c1(count), c2(count);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const int rx = std::min(x * r / w, r - 1);
      const int ry = std::min(y * r / h, r - 1);
      const Region& reg = regions[static_cast<std::size_t>(ry) * r + rx];
      const double disp = reg.base + reg.gx * (static_cast<double>(x) / w - 0.5) +
                          reg.gy * (static_cast<double>(y) / h - 0.5);
      depth[i] = 1.0 / std::clamp(disp, disp_lo, disp_hi);
      c1[i] = static_cast<double>(x) / w;
      c2[i] = u;
    }
  }
  for (std::size_t i = 0; i < count; ++i)
    c0[i] = gamma * std::log(1.0 / depth[i]) + rng.gaussian(cfg.feature_noise);
  for (std::size_t i = 0; i < count; ++i) c2[i] += rng.gaussian(cfg.feature_noise);

  Grid2D gt(w, h, GridUnit::MetersDepth, std::move(depth));
  return ToyScene{FeatureStack{{Grid2D(w, h, GridUnit::Dimensionless, std::move(c0)),
                                Grid2D(w, h, GridUnit::Dimensionless, std::move(c1)),
                                Grid2D(w, h, GridUnit::Dimensionless, std::move(c2))}},
                  gt,
                  gt,
                  SupervisionClass::Absolute,
                  ValidityMask::all_valid(w, h),
                  seed,
                  CorruptionParams{},
                  gamma};
}

ToyScene make_uts(const ToyScene& scene, std::uint64_t seed) {
  require_absolute(scene, "make_uts");
  Rng rng(seed);
  const double k = rng.log_uniform(0.25, 4.0);
  std::vector<double> target(scene.gt_depth.values());
  for (double& v : target) v *= k;
  ToyScene out = scene;
  out.target = Grid2D(scene.width(), scene.height(), GridUnit::MetersDepth, std::move(target));
  out.cls = SupervisionClass::Uts;
  out.corruption = CorruptionParams{k, 1.0, 0.0};
  return out;
}

ToyScene make_utss(const ToyScene& scene, std::uint64_t seed) {
  require_absolute(scene, "make_utss");
  Rng rng(seed);
  for (int attempt = 0; attempt < 100; ++attempt) {
    const double a = rng.log_uniform(0.25, 4.0);
    const double b = rng.uniform(-0.05, 0.5);
    std::vector<double> target(scene.gt_depth.size());
    double min_target = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < target.size(); ++i) {
      target[i] = a / scene.gt_depth.at(i) + b;
      min_target = std::min(min_target, target[i]);
    }
    if (min_target > 0.01) {
      ToyScene out = scene;
      out.target = Grid2D(scene.width(), scene.height(), GridUnit::Disparity, std::move(target));
      out.cls = SupervisionClass::Utss;
      out.corruption = CorruptionParams{1.0, a, b};
      return out;
    }
  }
  throw std::runtime_error("make_utss: no admissible (a, b) after 100 draws");
}

ValidityMask lr_consistency_mask(const Grid2D& disp_left, const Grid2D& disp_right,
                                 double max_discrepancy) {
  require_same_shape(disp_left, disp_right, "lr_consistency_mask");
  const int w = disp_left.width(), h = disp_left.height();
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(w) * h, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dl = disp_left.at(x, y);
      if (!std::isfinite(dl)) continue;
      const double match = static_cast<double>(x) - std::round(dl);
      if (match < 0.0 || match >= static_cast<double>(w)) continue;
      const double dr = disp_right.at(static_cast<int>(match), y);
      if (std::fabs(dl - dr) < max_discrepancy)
        bits[static_cast<std::size_t>(y) * w + x] = 1;
    }
  }
  return ValidityMask(w, h, std::move(bits));
}

bool accept_stereo_frame(const Grid2D& disp, const ValidityMask& valid, double min_valid_fraction,
                         double min_range) {
  require_same_shape(disp, valid, "accept_stereo_frame");
  const int n = valid.count();
  if (n == 0) return false;
  const double fraction = static_cast<double>(n) / static_cast<double>(valid.size());
  if (!(fraction > min_valid_fraction)) return false;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < disp.size(); ++i) {
    if (!valid.at(i)) continue;
    lo = std::min(lo, disp.at(i));
    hi = std::max(hi, disp.at(i));
  }
  return hi - lo > min_range;
}

MixtureDraw sample_mixture(const MixtureSpec& spec, Rng& rng) {
  if (spec.datasets.empty()) throw std::invalid_argument("sample_mixture: no datasets");
  for (const auto& ds : spec.datasets)
    if (ds.scenes.empty())
      throw std::invalid_argument("sample_mixture: dataset '" + ds.name + "' is empty");
  MixtureDraw draw;
  draw.dataset = static_cast<std::size_t>(rng.next_below(spec.datasets.size()));
  draw.scene = static_cast<std::size_t>(rng.next_below(spec.datasets[draw.dataset].scenes.size()));
  return draw;
}

void save_scene(const ToyScene& scene, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (int c = 0; c < 3; ++c)
    write_file(dir / ("feat" + std::to_string(c) + ".pfm"), write_pfm(scene.features.channels[c]));
  write_file(dir / "gt_depth.pfm", write_pfm(scene.gt_depth));
  write_file(dir / "target.pfm", write_pfm(scene.target));

  json meta;
  meta["cls"] = to_string(scene.cls);
  meta["seed"] = scene.seed;
  meta["width"] = scene.width();
  meta["height"] = scene.height();
  meta["gamma"] = scene.gamma;
  switch (scene.cls) {
    case SupervisionClass::Absolute: meta["corruption"] = nullptr; break;
    case SupervisionClass::Uts: meta["corruption"] = {{"k", scene.corruption.k}}; break;
    case SupervisionClass::Utss:
      meta["corruption"] = {{"a", scene.corruption.a}, {"b", scene.corruption.b}};
      break;
  }
  write_file(dir / "meta.json", meta.dump(2) + "\n");
}

ToyScene load_scene(const std::filesystem::path& dir) {
  const json meta = json::parse(read_file(dir / "meta.json"));
  const SupervisionClass cls = supervision_from_string(meta.at("cls").get<std::string>());

  auto load_grid = [&](const char* name, GridUnit unit) {
    return read_pfm(read_file(dir / name)).grid.with_unit(unit);
  };
  FeatureStack feats{{load_grid("feat0.pfm", GridUnit::Dimensionless),
                      load_grid("feat1.pfm", GridUnit::Dimensionless),
                      load_grid("feat2.pfm", GridUnit::Dimensionless)}};
  Grid2D gt = load_grid("gt_depth.pfm", GridUnit::MetersDepth);
  Grid2D target = load_grid(
      "target.pfm", cls == SupervisionClass::Utss ? GridUnit::Disparity : GridUnit::MetersDepth);

  CorruptionParams corruption;
  if (cls == SupervisionClass::Uts) corruption.k = meta.at("corruption").at("k").get<double>();
  if (cls == SupervisionClass::Utss) {
    corruption.a = meta.at("corruption").at("a").get<double>();
    corruption.b = meta.at("corruption").at("b").get<double>();
  }
  const int w = gt.width(), h = gt.height();
  if (feats.width() != w || feats.height() != h || target.width() != w || target.height() != h)
    throw std::runtime_error("load_scene: inconsistent raster shapes in " + dir.string());
  return ToyScene{std::move(feats),
                  std::move(gt),
                  std::move(target),
                  cls,
                  ValidityMask::all_valid(w, h),
                  meta.at("seed").get<std::uint64_t>(),
                  corruption,
                  meta.at("gamma").get<double>()};
}

}  // namespace gp2
