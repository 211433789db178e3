#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gp2/grid.hpp"
#include "gp2/rng.hpp"
#include "gp2/supervision.hpp"

namespace gp2 {

// Desk-scale synthetic scene generator configuration.
struct SceneConfig {
  int width = 64;
  int height = 64;
  int region_grid = 4;         // random affine-disparity regions per axis
  double depth_min = 1.0;      // meters
  double depth_max = 10.0;     // meters
  double feature_noise = 0.03; // sigma of the additive Gaussian feature noise
  // The channel-0 response slope gamma * log(1/d) varies per scene: a
  // response index u ~ U[0, 1] is drawn, exposed (noisily) as channel 2, and
  // mapped to gamma = min + (max - min) * (0.5 - 0.5 * cos(2*pi*waves*u)).
  // Inverting the depth cue therefore requires decoding u -> gamma, and with
  // waves > 0 that mapping oscillates: a handful of supervised scenes
  // undersamples it (aliasing), so generalization is limited by the number of
  // scenes whose supervision constrains shape, not by pixel count.  A wrong
  // slope rescales log depth, which is a power-law warp of disparity, so it
  // is visible to shift-and-scale supervision and penalized by the
  // scale-aligned delta metric alike.
  double gamma_min = 0.4;
  double gamma_max = 1.2;
  double gamma_waves = 4.0;    // 0 selects the linear mapping gamma = min + (max-min)*u
};

// Parameters of the supervision corruption applied to a scene's target.
// k is the UTS depth scale; (a, b) the UTSS disparity affine.
struct CorruptionParams {
  double k = 1.0;
  double a = 1.0;
  double b = 0.0;
};

// Three dimensionless feature rasters sharing one shape:
//   channel 0: gamma * log(1/depth) + noise (log-domain depth cue with a
//              per-scene response slope)
//   channel 1: x / width (positional cue)
//   channel 2: the scene's response index u + noise (the cue needed to
//              invert channel 0; see SceneConfig)
struct FeatureStack {
  std::array<Grid2D, 3> channels;

  int width() const { return channels[0].width(); }
  int height() const { return channels[0].height(); }
};

struct ToyScene {
  FeatureStack features;
  Grid2D gt_depth;  // meters, within [depth_min, depth_max]
  Grid2D target;    // depth for ABSOLUTE/UTS, disparity for UTSS
  SupervisionClass cls = SupervisionClass::Absolute;
  ValidityMask mask;
  std::uint64_t seed = 0;
  CorruptionParams corruption;
  double gamma = 0.0;  // channel-0 response slope this scene was rendered with

  int width() const { return gt_depth.width(); }
  int height() const { return gt_depth.height(); }
};

// Deterministic scene from (config, seed): a per-scene response slope,
// then piecewise affine-disparity regions clipped to the configured depth
// range, features as documented on FeatureStack, all pixels valid,
// target = ground truth, class ABSOLUTE.
ToyScene generate_scene(const SceneConfig& cfg, std::uint64_t seed);

// Up-to-scale corruption: target = k * gt_depth with k log-uniform in
// [0.25, 4]. Requires an ABSOLUTE scene.
ToyScene make_uts(const ToyScene& scene, std::uint64_t seed);

// Up-to-shift-and-scale corruption: target disparity = a / gt_depth + b with
// a log-uniform in [0.25, 4] and b uniform in [-0.05, 0.5], redrawn until the
// minimum target exceeds 0.01 (at most 100 draws). Requires an ABSOLUTE scene.
ToyScene make_utss(const ToyScene& scene, std::uint64_t seed);

// Left/right consistency: pixel (x, y) is valid iff its nearest-neighbor
// match x - round(dL) lands in bounds and |dL(x,y) - dR(x - round(dL), y)| is
// strictly below max_discrepancy (pixels).
ValidityMask lr_consistency_mask(const Grid2D& disp_left, const Grid2D& disp_right,
                                 double max_discrepancy = 8.0);

// Frame-level acceptance: valid fraction strictly above min_valid_fraction
// AND disparity range (max - min over valid pixels) strictly above min_range.
bool accept_stereo_frame(const Grid2D& disp, const ValidityMask& valid,
                         double min_valid_fraction = 0.8, double min_range = 8.0);

// A mixture of named datasets. Sampling picks a dataset uniformly, then a
// scene uniformly inside it, so small datasets are not drowned out by large
// ones. Datasets must be non-empty.
struct MixtureSpec {
  struct Dataset {
    std::string name;
    std::vector<ToyScene> scenes;
  };
  std::vector<Dataset> datasets;
};

struct MixtureDraw {
  std::size_t dataset = 0;
  std::size_t scene = 0;
};

MixtureDraw sample_mixture(const MixtureSpec& spec, Rng& rng);

inline const ToyScene& scene_at(const MixtureSpec& spec, const MixtureDraw& draw) {
  return spec.datasets[draw.dataset].scenes[draw.scene];
}

// Scene directory layout: feat0/feat1/feat2.pfm, gt_depth.pfm, target.pfm,
// meta.json {cls, seed, width, height, corruption}. Masks are not persisted
// (generated scenes are fully valid).
void save_scene(const ToyScene& scene, const std::filesystem::path& dir);
ToyScene load_scene(const std::filesystem::path& dir);

}  // namespace gp2
