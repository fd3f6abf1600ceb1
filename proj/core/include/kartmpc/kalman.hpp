#pragma once

#include <Eigen/Dense>

namespace kartmpc {

struct SmoothedSeries {
  Eigen::VectorXd value;
  Eigen::VectorXd rate;
};

// Forward Kalman filter + Rauch-Tung-Striebel backward pass on a
// constant-acceleration kinematic model (state = [value, rate]) with a
// near-diffuse initial prior. process_noise is the white-acceleration
// spectral density, meas_noise the measurement standard deviation.
SmoothedSeries kalman_smooth(const Eigen::VectorXd& series, double dt,
                             double process_noise, double meas_noise);

// Timestamped variant; rejects non-uniform spacing.
SmoothedSeries kalman_smooth(const Eigen::VectorXd& timestamps,
                             const Eigen::VectorXd& series,
                             double process_noise, double meas_noise);

// Forward-only (causal) estimate, used as the comparison baseline for the
// smoother's accuracy.
SmoothedSeries kalman_filter_forward(const Eigen::VectorXd& series, double dt,
                                     double process_noise, double meas_noise);

}  // namespace kartmpc
