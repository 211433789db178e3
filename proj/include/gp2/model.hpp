#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gp2/grid.hpp"
#include "gp2/synthdata.hpp"

namespace gp2 {

// Per-pixel log-depth regressor: a 3x3 patch of the 3 feature channels
// (clamped padding at borders) feeds a 27 -> 32 -> 32 -> 1 tanh MLP.
// Parameters live in one flat vector:
//   W1[32][27] b1[32] W2[32][32] b2[32] W3[1][32] b3[1]   (1985 doubles)
// with matrices row-major over output units. Patch inputs are ordered
// channel-major: index = c*9 + (dy+1)*3 + (dx+1).
struct ToyRegressor {
  static constexpr int kPatch = 3;
  static constexpr int kChannels = 3;
  static constexpr int kInput = kPatch * kPatch * kChannels;  // 27
  static constexpr int kHidden = 32;
  static constexpr int kParamCount =
      kHidden * kInput + kHidden + kHidden * kHidden + kHidden + kHidden + 1;  // 1985

  std::vector<double> params;

  // Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)] per layer, in layout order.
  static ToyRegressor init(std::uint64_t seed);
};

// Log-depth prediction at every pixel.
Grid2D forward(const ToyRegressor& model, const FeatureStack& features);

// Log-depth prediction at valid pixels only (invalid payload 0); the form the
// trainer uses with subsampled step masks.
Grid2D forward_on(const ToyRegressor& model, const FeatureStack& features,
                  const ValidityMask& valid);

// Parameter gradient for a loss whose pixel gradient dloss_dl is given over
// the mask's valid pixels in row-major order (the losses' convention).
std::vector<double> backward(const ToyRegressor& model, const FeatureStack& features,
                             const ValidityMask& valid, std::span<const double> dloss_dl);

struct TrainConfig {
  int steps = 2000;
  double learning_rate = 0.01;
  double momentum = 0.9;
  int batch_scenes = 4;
  int pixels_per_scene = 1024;  // per-scene pixel subsample per step
  std::uint64_t seed = 0;
};

struct StepRecord {
  int step = 0;           // 0-based optimization step
  double loss = 0.0;      // batch-mean mixture loss
  double uts_fraction = 0.0;  // share of batch scenes contributing the UTS term
};

struct TrainLog {
  std::vector<StepRecord> steps;
};

// Loss became non-finite; training aborts rather than continue silently.
struct DivergenceError : std::runtime_error {
  explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

// Deterministic SGD with momentum over mixture draws: each step samples
// batch_scenes scenes, subsamples pixels_per_scene valid pixels per scene,
// averages the mixture loss and its parameter gradient, and updates
//   v = momentum * v + g;  params -= learning_rate * v.
std::pair<ToyRegressor, TrainLog> train(const MixtureSpec& data, const TrainConfig& cfg);

}  // namespace gp2
