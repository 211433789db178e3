#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "gp2/model.hpp"

namespace gp2 {

// One row of the supervision-ratio ablation. scheme is GP2 (mixed UTS+UTSS
// training), UTS_ONLY (the UTS subset alone), or UTSS_ONLY (the shift-blind
// control, recorded with uts_ratio 0). Metrics are means over the test split;
// diverged rows carry NaN metrics.
struct AblationResult {
  double uts_ratio = 0.0;
  std::string scheme;
  std::uint64_t seed = 0;
  double delta_error = 0.0;
  double rel = 0.0;
  double shift_indicator = 0.0;
  bool diverged = false;
};

// --- config plumbing ---------------------------------------------------------

// Parses "key.path=json-or-string" and applies it to cfg (dotted paths create
// intermediate objects; values that parse as JSON are stored typed, anything
// else as a string).
void apply_override(nlohmann::json& cfg, const std::string& assignment);

// Optional config file + ordered overrides -> effective config object.
nlohmann::json load_config(const std::string& config_path,
                           const std::vector<std::string>& overrides);

// Minimal structural JSON-schema check: type (possibly a list), required,
// properties, items, enum. Throws std::runtime_error naming the first
// violation. CSV "schemas" are {"type": "csv", "columns": [...]} and validate
// a header line.
void validate_schema(const nlohmann::json& value, const nlohmann::json& schema,
                     const std::string& where);
void validate_csv_header(const std::string& csv_text, const nlohmann::json& schema,
                         const std::string& where);

// --- model/scene persistence shared by commands ------------------------------

void save_checkpoint(const ToyRegressor& model, const std::filesystem::path& path);
ToyRegressor load_checkpoint(const std::filesystem::path& path);

std::string train_log_csv(const TrainLog& log);
std::string ablation_csv(const std::vector<AblationResult>& rows);
nlohmann::json ablation_json(const std::vector<AblationResult>& rows);

// --- commands -----------------------------------------------------------------
// Each command consumes one flat JSON config (seed/out included), writes its
// artifacts under cfg["out"], and returns the JSON summary printed on stdout.
// Invariant violations throw; the CLI maps exceptions to a nonzero exit.

nlohmann::json cmd_gen_data(const nlohmann::json& cfg);
nlohmann::json cmd_train(const nlohmann::json& cfg);
nlohmann::json cmd_eval(const nlohmann::json& cfg);
nlohmann::json cmd_ablate(const nlohmann::json& cfg);
nlohmann::json cmd_gradcheck(const nlohmann::json& cfg);
nlohmann::json cmd_geom_demo(const nlohmann::json& cfg);
nlohmann::json cmd_mask_stereo(const nlohmann::json& cfg);

// Ablation core, reusable by the acceptance suite: corrupts the loaded base
// scenes per (ratio, scheme, seed) cell with ratio-nested UTS subsets, trains,
// and evaluates on the test scenes. Rows come back sorted by
// (uts_ratio, scheme, seed).
std::vector<AblationResult> run_ablation(const std::vector<ToyScene>& train_base,
                                         const std::vector<ToyScene>& test_scenes,
                                         const nlohmann::json& cfg);

}  // namespace gp2
