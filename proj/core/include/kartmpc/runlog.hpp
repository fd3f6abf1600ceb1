#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace kartmpc {

// One resampled time-series row. Controller diagnostics hold the values of
// the most recent control step; prediction fields are populated only on the
// sample where a solve happened (has_pred).
struct RunSample {
  double t = 0.0;
  double x = 0.0, y = 0.0, psi = 0.0;
  double vx = 0.0, vy = 0.0, yaw_rate = 0.0;
  double gamma_cmd = 0.0, beta_cmd = 0.0, tau_v_cmd = 0.0;
  double gamma_act = 0.0, beta_act = 0.0, tau_v_act = 0.0;
  double vy_dot = 0.0, yaw_acc = 0.0;
  double s = 0.0, e_y = 0.0, e_theta = 0.0;
  double solve_time_ms = 0.0, kkt_stationarity = 0.0;
  int qp_iters = 0;
  int degraded = 0;
  double eta = 0.0;
  int has_pred = 0;
  double pred_vy = 0.0, pred_yaw_rate = 0.0;
};

struct RunMeta {
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string track_id;
  double sample_rate_hz = 100.0;
  std::string termination = "completed";
  std::vector<double> lap_times;  // s
};

struct RunLog {
  std::vector<RunSample> samples;
  RunMeta meta;

  // strictly increasing, gap-free timestamps at the declared rate
  void validate() const;
  double duration() const;
};

// CSV with a fixed header row; metadata goes to <path>.meta.json.
void save_runlog(const std::string& path, const RunLog& log);
RunLog load_runlog(const std::string& path);

// long-format export for external plotting: variable,t,value,run_id
void save_runlog_long(const std::string& path, const RunLog& log,
                      const std::string& run_id);

}  // namespace kartmpc
