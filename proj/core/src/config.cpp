#include "kartmpc/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace kartmpc {
namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const char c : data) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string canonical_text(const RunConfig& c) {
  std::ostringstream os;
  os << "track_path " << c.track_path << '\n'
     << "plant_path " << c.plant_path << '\n'
     << "ocp_path " << c.ocp_path << '\n'
     << "models_prefix " << c.models_prefix << '\n'
     << "seed " << c.seed << '\n'
     << "laps " << c.laps << '\n'
     << "controller " << c.controller << '\n'
     << "train_batch_size " << c.train.batch_size << '\n'
     << "train_epochs " << c.train.epochs << '\n'
     << "train_learning_rate " << fmt(c.train.learning_rate) << '\n'
     << "train_noise_floor " << fmt(c.train.noise_floor) << '\n'
     << "train_seed " << c.train.seed << '\n'
     << "sod_threshold " << fmt(c.sod_threshold) << '\n'
     << "t_nn_lateral " << c.t_nn_lateral << '\n'
     << "t_nn_yaw " << c.t_nn_yaw << '\n'
     << "noise_enabled " << (c.noise_enabled ? 1 : 0) << '\n'
     << "initial_speed " << fmt(c.initial_speed) << '\n';
  return os.str();
}

std::string config_hash(const RunConfig& config) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical_text(config))));
  return buf;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read run config: " + path);
  RunConfig c;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key == "track_path") ss >> c.track_path;
    else if (key == "plant_path") ss >> c.plant_path;
    else if (key == "ocp_path") ss >> c.ocp_path;
    else if (key == "models_prefix") ss >> c.models_prefix;
    else if (key == "seed") ss >> c.seed;
    else if (key == "laps") ss >> c.laps;
    else if (key == "controller") ss >> c.controller;
    else if (key == "out_dir") ss >> c.out_dir;
    else if (key == "train_batch_size") ss >> c.train.batch_size;
    else if (key == "train_epochs") ss >> c.train.epochs;
    else if (key == "train_learning_rate") ss >> c.train.learning_rate;
    else if (key == "train_noise_floor") ss >> c.train.noise_floor;
    else if (key == "train_seed") ss >> c.train.seed;
    else if (key == "sod_threshold") ss >> c.sod_threshold;
    else if (key == "t_nn_lateral") ss >> c.t_nn_lateral;
    else if (key == "t_nn_yaw") ss >> c.t_nn_yaw;
    else if (key == "noise_enabled") { int v; ss >> v; c.noise_enabled = v != 0; }
    else if (key == "initial_speed") ss >> c.initial_speed;
    else throw std::invalid_argument("run config: unknown key '" + key + "'");
  }
  if (c.controller != "nominal" && c.controller != "blackbox")
    throw std::invalid_argument("run config: controller must be nominal|blackbox");
  return c;
}

void save_run_config(const std::string& path, const RunConfig& config) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write run config: " + path);
  os << canonical_text(config) << "out_dir " << config.out_dir << '\n';
}

PlantParams load_plant_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read plant params: " + path);
  PlantParams p;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key == "mass") ss >> p.mass;
    else if (key == "inertia") ss >> p.inertia;
    else if (key == "lf") ss >> p.lf;
    else if (key == "lr") ss >> p.lr;
    else if (key == "pacejka_b_front") ss >> p.pacejka_b_front;
    else if (key == "pacejka_c_front") ss >> p.pacejka_c_front;
    else if (key == "pacejka_d_front") ss >> p.pacejka_d_front;
    else if (key == "pacejka_b_rear") ss >> p.pacejka_b_rear;
    else if (key == "pacejka_c_rear") ss >> p.pacejka_c_rear;
    else if (key == "pacejka_d_rear") ss >> p.pacejka_d_rear;
    else if (key == "tv_gain") ss >> p.tv_gain;
    else if (key == "gamma_lag") ss >> p.gamma_lag;
    else if (key == "beta_lag") ss >> p.beta_lag;
    else if (key == "combined_slip") { int v; ss >> v; p.combined_slip = v != 0; }
    else if (key == "load_transfer") { int v; ss >> v; p.load_transfer = v != 0; }
    else if (key == "gamma_max") ss >> p.gamma_max;
    else if (key == "load_transfer_gain") ss >> p.load_transfer_gain;
    else throw std::invalid_argument("plant params: unknown key '" + key + "'");
    if (ss.fail())
      throw std::invalid_argument("plant params: bad value for " + key);
  }
  p.validate();
  return p;
}

void save_plant_params(const std::string& path, const PlantParams& p) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write plant params: " + path);
  os << "mass " << fmt(p.mass) << "\ninertia " << fmt(p.inertia) << "\nlf "
     << fmt(p.lf) << "\nlr " << fmt(p.lr) << "\npacejka_b_front "
     << fmt(p.pacejka_b_front) << "\npacejka_c_front " << fmt(p.pacejka_c_front)
     << "\npacejka_d_front " << fmt(p.pacejka_d_front) << "\npacejka_b_rear "
     << fmt(p.pacejka_b_rear) << "\npacejka_c_rear " << fmt(p.pacejka_c_rear)
     << "\npacejka_d_rear " << fmt(p.pacejka_d_rear) << "\ntv_gain "
     << fmt(p.tv_gain) << "\ngamma_lag " << fmt(p.gamma_lag) << "\nbeta_lag "
     << fmt(p.beta_lag) << "\ncombined_slip " << (p.combined_slip ? 1 : 0)
     << "\nload_transfer " << (p.load_transfer ? 1 : 0) << "\ngamma_max "
     << fmt(p.gamma_max) << "\nload_transfer_gain " << fmt(p.load_transfer_gain)
     << '\n';
}

}  // namespace kartmpc
