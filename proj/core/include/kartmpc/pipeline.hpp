#pragma once

#include <string>
#include <utility>
#include <vector>

#include "kartmpc/gp.hpp"
#include "kartmpc/reduce.hpp"
#include "kartmpc/runlog.hpp"
#include "kartmpc/simulate.hpp"

namespace kartmpc::pipe {

enum class DriverKind { NominalController, ScriptedExcitation };

// Closed-loop data acquisition with the chosen driver; deterministic under
// the config seed.
RunLog record_run(DriverKind kind, const PlantParams& plant_params,
                  const Track& track, const ocp::OcpConfig& ocp_config,
                  const sim::SimConfig& sim_config);

// Per-sample lap indices (0-based), derived from arc-length wrap crossings.
std::vector<int> lap_indices(const RunLog& log, const Track& track);

// Whole-lap train/held-out split; the last holdout_laps complete laps go to
// the second log. Never splits within a lap.
std::pair<RunLog, RunLog> split_by_laps(const RunLog& log, const Track& track,
                                        int holdout_laps);

struct AssembleOptions {
  bool smooth = false;          // Kalman-smooth velocities, differentiate
  double process_noise = 50.0;  // smoother white-acceleration density
  double meas_noise = 0.02;     // smoother measurement std
  int max_points = 5000;        // decimation target before reduction
};

struct DatasetPair {
  gp::GpDataset lateral;  // targets dv_y/dt
  gp::GpDataset yaw;      // targets d2theta/dt2
};

DatasetPair assemble_dataset(const RunLog& log, const AssembleOptions& options);

// Training orchestration: hyperparameters per channel, full fit, SoD.
struct TrainedModels {
  gp::GpModel lateral;
  gp::GpModel yaw;
  gp::SodSet lateral_sod;
  gp::SodSet yaw_sod;
  bool lateral_diverged = false;
  bool yaw_diverged = false;
};

TrainedModels train_models(const DatasetPair& data,
                           const gp::TrainConfig& config,
                           double sod_threshold_factor = 1.0);

// Flat metric table: (metric, variant) -> value.
struct EvalEntry {
  std::string metric;
  std::string variant;
  double value = 0.0;
};

struct EvalReport {
  std::vector<EvalEntry> entries;
  void add(const std::string& metric, const std::string& variant, double value);
  bool has(const std::string& metric, const std::string& variant) const;
  double get(const std::string& metric, const std::string& variant) const;
};

void save_eval_report(const std::string& csv_path,
                      const std::string& summary_path,
                      const EvalReport& report);

// Acceleration RMSEs on a dataset for one channel.
double rmse_model(const AccelModel& model, const gp::GpDataset& data);
double rmse_gp(const gp::GpModel& model, const gp::GpDataset& data);
// NN variant: per-sample neighbor selection against the SoD set, local
// models cached by neighbor index set.
double rmse_nn(const gp::SodSet& sod, const gp::GpDataset& source,
               const gp::GpDataset& eval, int t_nn);

// rmse_vy_dot / rmse_yaw_acc rows for every available variant
// (nominal, gp-full, gp-sod, gp-nn) evaluated on the held-out datasets.
EvalReport rmse_report(const TrainedModels* models, const AccelModel* nominal_lat,
                       const AccelModel* nominal_yaw,
                       const DatasetPair& heldout, int t_nn_lateral = 30,
                       int t_nn_yaw = 50);

// One-step-ahead velocity prediction errors of a closed-loop log:
// (RMSE v_y, RMSE yaw rate) over samples carrying predictions.
std::pair<double, double> one_step_errors(const RunLog& log);
EvalReport one_step_prediction_report(const RunLog& log,
                                      const std::string& variant);

struct BoundStats {
  int samples = 0;
  int soft_exceed = 0;      // |e_y| beyond the reduced bound
  int hard_cross = 0;       // |e_y| beyond the raw half-width
  int eta_sign_errors = 0;  // soft exceedances without restoring slack
  double max_eta = 0.0;
  double max_abs_e_y = 0.0;
};

BoundStats bound_stats(const RunLog& log, const Track& track, double reduction);

}  // namespace kartmpc::pipe
