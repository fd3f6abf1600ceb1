#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "kartmpc/errors.hpp"

namespace kartmpc::gp {

// Squared-exponential kernel hyperparameters: unit amplitude, per-dimension
// lengthscales, observation noise. The exponent carries no 1/2 factor:
//   k(a,b) = exp(-sum_m ((a_m-b_m)/l_m)^2)
struct KernelParams {
  Eigen::VectorXd lengthscales;  // one per input dimension, > 0
  double noise_std = 0.15;
  double jitter = 1e-9;

  void validate(double noise_floor = 0.0) const;
};

// Training data for one scalar acceleration channel, stored standardized.
// Queries arrive in physical units and are mapped through the standardizers.
struct GpDataset {
  Eigen::MatrixXd inputs;   // T x d, standardized columns
  Eigen::VectorXd targets;  // T, standardized
  Eigen::VectorXd input_shift;  // d
  Eigen::VectorXd input_scale;  // d, > 0
  double target_shift = 0.0;
  double target_scale = 1.0;

  // Fits per-column standardizers (zero mean, unit std; constant columns get
  // scale 1) and stores the standardized data.
  static GpDataset from_raw(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

  // Wraps already-standardized data with identity standardizers.
  static GpDataset pre_standardized(Eigen::MatrixXd X, Eigen::VectorXd y);

  Eigen::Index size() const { return inputs.rows(); }
  Eigen::Index dim() const { return inputs.cols(); }

  Eigen::VectorXd standardize_input(const Eigen::VectorXd& x_raw) const;
  Eigen::VectorXd raw_input_row(Eigen::Index i) const;
  double raw_target(Eigen::Index i) const;

  GpDataset subset(const std::vector<Eigen::Index>& rows) const;
  void validate() const;
};

// Fitted GP: Cholesky factor of K + sigma_n^2 I (plus the jitter that made it
// succeed) and the solve vector alpha. Immutable after fit.
struct GpModel {
  KernelParams params;
  GpDataset dataset;
  Eigen::VectorXd alpha;
  Eigen::MatrixXd chol;  // lower triangular
  double jitter_used = 0.0;
};

double kernel_eval(const KernelParams& params, const Eigen::VectorXd& a,
                   const Eigen::VectorXd& b);

Eigen::MatrixXd gram_matrix(const KernelParams& params,
                            const Eigen::MatrixXd& X);

GpModel fit(const KernelParams& params, const GpDataset& dataset);

// Posterior mean in physical target units.
double posterior_mean(const GpModel& model, const Eigen::VectorXd& x_raw);
// Posterior variance in standardized target space (prior variance = 1).
double posterior_variance(const GpModel& model, const Eigen::VectorXd& x_raw);

// Standardized-space variants; used by the reduction loop which works on
// dataset rows directly.
double posterior_mean_std(const GpModel& model, const Eigen::VectorXd& x_std);
double posterior_variance_std(const GpModel& model,
                              const Eigen::VectorXd& x_std);

// Log evidence of the fitted model and its gradient over
// [log l_1, ..., log l_d, log sigma_n].
std::pair<double, Eigen::VectorXd> log_marginal_likelihood(const GpModel& model);

// Gradient of posterior_mean w.r.t. the physical-units query.
Eigen::VectorXd mean_gradient(const GpModel& model, const Eigen::VectorXd& x_raw);
Eigen::VectorXd mean_gradient_std(const GpModel& model,
                                  const Eigen::VectorXd& x_std);

struct TrainConfig {
  int batch_size = 100;
  int epochs = 400;
  double learning_rate = 1e-3;
  double noise_floor = 0.15;
  std::uint64_t seed = 0;
};

struct TrainResult {
  KernelParams params;
  bool diverged = false;
  int epochs_run = 0;
};

// Minibatch gradient ascent (Adam) on the log marginal likelihood over
// log-hyperparameters; sigma_n projected to the floor after every step.
TrainResult train_hyperparams(const GpDataset& dataset, const TrainConfig& config);

}  // namespace kartmpc::gp
