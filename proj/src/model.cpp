#include "gp2/model.hpp"

#include <algorithm>
#include <cmath>

#include "gp2/losses.hpp"

namespace gp2 {

namespace {

constexpr int kIn = ToyRegressor::kInput;
constexpr int kHid = ToyRegressor::kHidden;

// Flat layout offsets.
constexpr int kW1 = 0;
constexpr int kB1 = kW1 + kHid * kIn;
constexpr int kW2 = kB1 + kHid;
constexpr int kB2 = kW2 + kHid * kHid;
constexpr int kW3 = kB2 + kHid;
constexpr int kB3 = kW3 + kHid;
static_assert(kB3 + 1 == ToyRegressor::kParamCount);

void gather_patch(const FeatureStack& f, int x, int y, double* in) {
  const int w = f.width(), h = f.height();
  for (int c = 0; c < ToyRegressor::kChannels; ++c) {
    const Grid2D& ch = f.channels[c];
    for (int dy = -1; dy <= 1; ++dy) {
      const int yy = std::clamp(y + dy, 0, h - 1);
      for (int dx = -1; dx <= 1; ++dx) {
        const int xx = std::clamp(x + dx, 0, w - 1);
        in[c * 9 + (dy + 1) * 3 + (dx + 1)] = ch.at(xx, yy);
      }
    }
  }
}

struct Activations {
  double in[kIn];
  double a1[kHid];
  double a2[kHid];
};

double forward_pixel(const double* p, Activations& act) {
  for (int j = 0; j < kHid; ++j) {
    const double* row = p + kW1 + j * kIn;
    double z = p[kB1 + j];
    for (int i = 0; i < kIn; ++i) z += row[i] * act.in[i];
    act.a1[j] = std::tanh(z);
  }
  for (int j = 0; j < kHid; ++j) {
    const double* row = p + kW2 + j * kHid;
    double z = p[kB2 + j];
    for (int i = 0; i < kHid; ++i) z += row[i] * act.a1[i];
    act.a2[j] = std::tanh(z);
  }
  double out = p[kB3];
  for (int j = 0; j < kHid; ++j) out += p[kW3 + j] * act.a2[j];
  return out;
}

void backward_pixel(const double* p, const Activations& act, double g, double* grad) {
  double dz2[kHid], da1[kHid];
  for (int j = 0; j < kHid; ++j) {
    grad[kW3 + j] += g * act.a2[j];
    dz2[j] = g * p[kW3 + j] * (1.0 - act.a2[j] * act.a2[j]);
  }
  grad[kB3] += g;
  std::fill(da1, da1 + kHid, 0.0);
  for (int j = 0; j < kHid; ++j) {
    const double* row = p + kW2 + j * kHid;
    double* grow = grad + kW2 + j * kHid;
    for (int i = 0; i < kHid; ++i) {
      grow[i] += dz2[j] * act.a1[i];
      da1[i] += row[i] * dz2[j];
    }
    grad[kB2 + j] += dz2[j];
  }
  for (int i = 0; i < kHid; ++i) {
    const double dz1 = da1[i] * (1.0 - act.a1[i] * act.a1[i]);
    double* grow = grad + kW1 + i * kIn;
    for (int k = 0; k < kIn; ++k) grow[k] += dz1 * act.in[k];
    grad[kB1 + i] += dz1;
  }
}

void require_model(const ToyRegressor& model, const char* where) {
  if (model.params.size() != static_cast<std::size_t>(ToyRegressor::kParamCount))
    throw std::invalid_argument(std::string(where) + ": model has wrong parameter count");
}

}  // namespace

ToyRegressor ToyRegressor::init(std::uint64_t seed) {
  Rng rng(seed);
  ToyRegressor m;
  m.params.resize(kParamCount);
  auto fill = [&](int offset, int count, int fan_in) {
    const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (int i = 0; i < count; ++i) m.params[offset + i] = rng.uniform(-s, s);
  };
  fill(kW1, kHid * kIn, kIn);
  fill(kB1, kHid, kIn);
  fill(kW2, kHid * kHid, kHid);
  fill(kB2, kHid, kHid);
  fill(kW3, kHid, kHid);
  fill(kB3, 1, kHid);
  return m;
}

Grid2D forward(const ToyRegressor& model, const FeatureStack& features) {
  return forward_on(model, features, ValidityMask::all_valid(features.width(), features.height()));
}

Grid2D forward_on(const ToyRegressor& model, const FeatureStack& features,
                  const ValidityMask& valid) {
  require_model(model, "forward_on");
  require_same_shape(features.channels[0], valid, "forward_on");
  const int w = features.width(), h = features.height();
  std::vector<double> out(static_cast<std::size_t>(w) * h, 0.0);
  const double* p = model.params.data();
  Activations act;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!valid.at(x, y)) continue;
      gather_patch(features, x, y, act.in);
      out[static_cast<std::size_t>(y) * w + x] = forward_pixel(p, act);
    }
  }
  return Grid2D(w, h, GridUnit::LogDepth, std::move(out));
}

std::vector<double> backward(const ToyRegressor& model, const FeatureStack& features,
                             const ValidityMask& valid, std::span<const double> dloss_dl) {
  require_model(model, "backward");
  require_same_shape(features.channels[0], valid, "backward");
  const auto idx = valid.valid_indices();
  if (dloss_dl.size() != idx.size())
    throw std::invalid_argument("backward: pixel gradient count does not match valid pixels");

  std::vector<double> grad(ToyRegressor::kParamCount, 0.0);
  const double* p = model.params.data();
  const int w = features.width();
  Activations act;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const int x = static_cast<int>(idx[k] % static_cast<std::uint32_t>(w));
    const int y = static_cast<int>(idx[k] / static_cast<std::uint32_t>(w));
    gather_patch(features, x, y, act.in);
    forward_pixel(p, act);
    backward_pixel(p, act, dloss_dl[k], grad.data());
  }
  return grad;
}

namespace {

// Deterministic subsample of m valid pixels (partial Fisher-Yates over the
// valid index list).
ValidityMask subsample_mask(const ValidityMask& full, int m, Rng& rng) {
  auto idx = full.valid_indices();
  if (static_cast<std::size_t>(m) >= idx.size()) return full;
  for (int i = 0; i < m; ++i) {
    const std::size_t j =
        i + static_cast<std::size_t>(rng.next_below(idx.size() - static_cast<std::size_t>(i)));
    std::swap(idx[i], idx[j]);
  }
  std::vector<std::uint8_t> bits(full.size(), 0);
  for (int i = 0; i < m; ++i) bits[idx[i]] = 1;
  return ValidityMask(full.width(), full.height(), std::move(bits));
}

}  // namespace

std::pair<ToyRegressor, TrainLog> train(const MixtureSpec& data, const TrainConfig& cfg) {
  if (cfg.steps < 1 || cfg.batch_scenes < 1)
    throw std::invalid_argument("train: steps and batch_scenes must be positive");
  if (cfg.pixels_per_scene < 2)
    throw std::invalid_argument("train: pixels_per_scene must be at least 2");
  if (!(cfg.learning_rate > 0.0) || !(cfg.momentum >= 0.0) || !(cfg.momentum < 1.0))
    throw std::invalid_argument("train: bad learning_rate/momentum");

  ToyRegressor model = ToyRegressor::init(Rng::derive(cfg.seed, 0));
  Rng rng(Rng::derive(cfg.seed, 1));
  std::vector<double> velocity(ToyRegressor::kParamCount, 0.0);
  std::vector<double> grad(ToyRegressor::kParamCount);

  TrainLog log;
  log.steps.reserve(cfg.steps);
  const double inv_batch = 1.0 / static_cast<double>(cfg.batch_scenes);

  for (int step = 0; step < cfg.steps; ++step) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0.0;
    int uts_scenes = 0;
    for (int b = 0; b < cfg.batch_scenes; ++b) {
      const ToyScene& scene = scene_at(data, sample_mixture(data, rng));
      const ValidityMask step_mask = subsample_mask(scene.mask, cfg.pixels_per_scene, rng);
      const Grid2D pred = forward_on(model, scene.features, step_mask);
      const LossValueGrad lv = mixture_loss(pred, scene.target, step_mask, scene.cls);
      loss += lv.value * inv_batch;
      if (uses_uts_term(scene.cls)) ++uts_scenes;
      const std::vector<double> g = backward(model, scene.features, step_mask, lv.grad);
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += g[i] * inv_batch;
    }
    if (!std::isfinite(loss))
      throw DivergenceError("train: non-finite loss at step " + std::to_string(step));
    for (std::size_t i = 0; i < velocity.size(); ++i) {
      velocity[i] = cfg.momentum * velocity[i] + grad[i];
      model.params[i] -= cfg.learning_rate * velocity[i];
    }
    log.steps.push_back(
        {step, loss, static_cast<double>(uts_scenes) / static_cast<double>(cfg.batch_scenes)});
  }
  return {std::move(model), std::move(log)};
}

}  // namespace gp2
