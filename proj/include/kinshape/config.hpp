#pragma once

#include "kinshape/sim.hpp"
#include "kinshape/sweep.hpp"

#include <json.hpp>

#include <filesystem>
#include <memory>

namespace kinshape {

/// Bad or unknown configuration entry. The message starts with the dotted
/// key path of the offending field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses the TOML subset used by experiment files into a JSON object:
/// [tables], `key = value` with strings, booleans, integers, floats and
/// (nested, possibly multi-line) arrays, and # comments. Inline tables,
/// dates and dotted keys are rejected.
nlohmann::json parse_toml(const std::string& text);

struct ExperimentConfig {
  std::string model_name;  // pendubot | touch | custom
  PendubotParams pendubot;
  TouchParams touch;
  Mat custom_mass, custom_stiffness, custom_input_map;

  PendubotGains pendubot_gains;
  TouchGains touch_gains;
  Mat custom_mass_d, custom_kp, custom_kv;
  Vec custom_q_star;

  SimConfig sim;
  double settle_tol = 0.05;

  std::filesystem::path output_dir = "out";
  bool write_csv = true;
  bool write_json = true;

  StateBox verify_box;
  int verify_samples = 1000;
  std::uint64_t verify_seed = 1;

  std::unique_ptr<MechanicalModel> make_model() const;
  std::unique_ptr<ShapingDesign> make_design(const MechanicalModel& model) const;

  /// Parameters actually used, for result metadata.
  nlohmann::json describe() const;
};

/// Strict loader: unknown keys, wrong types and physically invalid values
/// raise ConfigError.
ExperimentConfig load_config(const nlohmann::json& doc);
ExperimentConfig load_config_file(const std::filesystem::path& path);

}  // namespace kinshape
