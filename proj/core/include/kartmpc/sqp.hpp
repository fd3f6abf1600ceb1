#pragma once

#include <memory>
#include <vector>

#include "kartmpc/accel_model.hpp"
#include "kartmpc/ocp.hpp"
#include "kartmpc/qp.hpp"
#include "kartmpc/reduce.hpp"
#include "kartmpc/track.hpp"

namespace kartmpc::sqp {

// Command states sent to the vehicle: the velocity-form makes these plain
// state entries of the first shooting node.
struct Commands {
  double gamma = 0.0;
  double beta = 0.0;
  double tau_v = 0.0;
};

struct Diagnostics {
  double solve_time_ms = 0.0;
  double kkt_stationarity = 0.0;
  int qp_iterations = 0;
  bool degraded = false;   // QP failed, previous commands reused
  bool safe_stop = false;  // singularity or failure budget exhausted
  bool late = false;       // step exceeded the control period
  double eta_first = 0.0;
  double eta_terminal = 0.0;
};

// Where the horizon's acceleration channels come from. Either a fixed pair
// of models for every interval, or per-node nearest-neighbor local models
// rebuilt from the SoD sets each step.
struct ModelSelection {
  const AccelModel* lateral = nullptr;
  const AccelModel* yaw = nullptr;

  const gp::SodSet* lateral_sod = nullptr;
  const gp::GpDataset* lateral_data = nullptr;
  int lateral_t_nn = 30;
  const gp::SodSet* yaw_sod = nullptr;
  const gp::GpDataset* yaw_data = nullptr;
  int yaw_t_nn = 50;

  bool use_nn() const { return lateral_sod != nullptr && yaw_sod != nullptr; }
  void validate() const;
};

struct SqpSettings {
  enum class Mode { Rti, Converged };
  Mode mode = Mode::Rti;
  int max_iterations = 50;      // converged mode only; rti always does 1
  double tolerance = 1e-6;      // converged stop: max(step inf-norm, KKT)
  double qp_tolerance = 1e-6;
  int qp_max_iterations = 100;
  double armijo_c = 1e-4;       // merit sufficient-decrease constant
  // l1 penalty floor; raised to 10x the largest dual each iteration. Keep the
  // floor near the dual scale: an oversized floor magnifies the quadratic
  // linearization defect of large steps and collapses the line search.
  double merit_penalty = 1.0;
  double control_period = 0.05;  // s, for the late flag

  void validate() const;
};

struct ControllerState {
  ocp::OcpConfig config;
  ocp::NlpIterate iterate;
  bool initialized = false;
  Commands last_commands;
  int consecutive_failures = 0;
  Diagnostics diag;  // last step

  static constexpr int kFailureBudget = 5;
};

// Centerline rollout at clamped constant speed, zero commands.
ocp::NlpIterate cold_start(const Vec9& measured, double s_now,
                           const Track& track, const ocp::OcpConfig& config);

// Re-anchor the previous iterate at s_now: linear re-interpolation of states
// and controls in s, hold-extrapolated at both ends; time-to-go re-zeroed at
// the first node.
ocp::NlpIterate warm_start_shift(const ocp::OcpConfig& config,
                                 const ocp::NlpIterate& prev, double s_now);

// One real-time iteration: shift, select local models, linearize, solve one
// QP, take the full step, emit the first node's command states. Failures
// degrade to the previous commands; a budget of consecutive failures or a
// dynamics singularity produces a safe-stop command.
Commands rti_step(ControllerState& ctrl, const Vec9& measured, double s_now,
                  const Track& track, const ModelSelection& models,
                  const SqpSettings& settings);

struct SqpResult {
  ocp::NlpIterate iterate;
  bool converged = false;
  int iterations = 0;
  double kkt_stationarity = 0.0;
  double step_norm = 0.0;
};

// Offline fully-converged SQP with Armijo backtracking on an l1 merit.
SqpResult sqp_solve(const ocp::OcpConfig& config, const Track& track,
                    const ModelSelection& models,
                    const ocp::NlpIterate& initial, const SqpSettings& settings);

}  // namespace kartmpc::sqp
