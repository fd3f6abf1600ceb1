#pragma once

#include <cstdint>
#include <string>

#include "kartmpc/plant.hpp"
#include "kartmpc/runlog.hpp"
#include "kartmpc/sqp.hpp"
#include "kartmpc/track.hpp"

namespace kartmpc::sim {

struct NoiseConfig {
  bool enabled = false;
  double vel_std = 0.02;       // m/s on vx, vy
  double yaw_rate_std = 0.01;  // rad/s
  double e_y_std = 0.01;       // m
  double e_theta_std = 0.005;  // rad
  double acc_std = 0.05;       // m/s^2 on logged accelerations
  std::uint64_t seed = 0;
};

struct SimConfig {
  double control_rate_hz = 20.0;
  double plant_dt = 1.0 / 200.0;
  double log_rate_hz = 100.0;
  int laps = 3;
  double max_time = 600.0;  // s, hard stop
  double initial_speed = 5.0;
  double initial_s = 0.0;
  NoiseConfig noise;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string track_id = "default";

  void validate() const;
};

// Commands at the control rate; implementations keep their own state.
class ControllerBase {
 public:
  virtual ~ControllerBase() = default;
  // measured is the velocity-form Frenet state (command slots carry the
  // previously applied commands); s_now is unwrapped arc length.
  virtual PlantCommands step(const Vec9& measured, double s_now, double t) = 0;
  virtual sqp::Diagnostics last_diagnostics() const { return {}; }
  // one-step-ahead velocity prediction for the coming control period
  virtual bool predict(double& vy_next, double& yaw_rate_next) const {
    (void)vy_next;
    (void)yaw_rate_next;
    return false;
  }
};

// The MPC loop behind ControllerBase: shift + local models + one QP per step.
class MpcController final : public ControllerBase {
 public:
  MpcController(ocp::OcpConfig config, const Track& track,
                sqp::ModelSelection models, sqp::SqpSettings settings);

  PlantCommands step(const Vec9& measured, double s_now, double t) override;
  sqp::Diagnostics last_diagnostics() const override { return ctrl_.diag; }
  bool predict(double& vy_next, double& yaw_rate_next) const override;

  const sqp::ControllerState& state() const { return ctrl_; }

 private:
  const Track& track_;
  sqp::ModelSelection models_;
  sqp::SqpSettings settings_;
  sqp::ControllerState ctrl_;
  bool have_pred_ = false;
  double pred_vy_ = 0.0, pred_yaw_rate_ = 0.0;
};

// Deterministic excitation driver: centerline-following steering plus
// sinusoidal steering/torque-vectoring perturbations and speed sweeps, to
// cover the regressor space without a human driver.
class ScriptedExcitation final : public ControllerBase {
 public:
  explicit ScriptedExcitation(const Track& track, double base_speed = 5.5,
                              double speed_amplitude = 1.5);
  PlantCommands step(const Vec9& measured, double s_now, double t) override;

 private:
  const Track& track_;
  double base_speed_;
  double speed_amplitude_;
};

// 20 Hz control / 200 Hz plant closed loop, logged at 100 Hz. Failures
// (stall, localization, controller safe-stop) terminate the run gracefully
// with the reason recorded in the log metadata.
RunLog closed_loop_simulate(ControllerBase& controller,
                            const PlantParams& plant_params, const Track& track,
                            const SimConfig& config);

}  // namespace kartmpc::sim
