#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "kartmpc/gp.hpp"
#include "kartmpc/plant.hpp"

namespace kartmpc {

// Everything a workflow command needs; file paths left empty fall back to
// built-in defaults. Flags override file values which override defaults.
struct RunConfig {
  std::string track_path;
  std::string plant_path;
  std::string ocp_path;
  std::string models_prefix;  // "<prefix>.lateral.gp" / "<prefix>.yaw.gp"
  std::uint64_t seed = 0;
  int laps = 3;
  std::string controller = "nominal";  // nominal | blackbox
  std::string out_dir = ".";

  gp::TrainConfig train;
  double sod_threshold = 1.0;
  int t_nn_lateral = 30;
  int t_nn_yaw = 50;
  bool noise_enabled = false;
  double initial_speed = 5.0;
};

RunConfig load_run_config(const std::string& path);
void save_run_config(const std::string& path, const RunConfig& config);

// Canonicalized key-value rendering; the hash is FNV-1a over this text, so
// formatting of the source file does not matter.
std::string canonical_text(const RunConfig& config);
std::string config_hash(const RunConfig& config);

std::uint64_t fnv1a64(std::string_view data);

PlantParams load_plant_params(const std::string& path);
void save_plant_params(const std::string& path, const PlantParams& params);

}  // namespace kartmpc
