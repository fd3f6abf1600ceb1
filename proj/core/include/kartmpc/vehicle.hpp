#pragma once

#include <Eigen/Dense>

namespace kartmpc {

using Vec9 = Eigen::Matrix<double, 9, 1>;
using Vec4 = Eigen::Matrix<double, 4, 1>;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat9 = Eigen::Matrix<double, 9, 9>;
using Mat94 = Eigen::Matrix<double, 9, 4>;

// Velocity-form prediction state. The actual kart commands (gamma, beta,
// tau_v) are states; the optimizer drives their rates.
struct VehicleState {
  double vx = 0.0;        // m/s
  double vy = 0.0;        // m/s
  double yaw_rate = 0.0;  // rad/s
  double e_theta = 0.0;   // rad
  double e_y = 0.0;       // m
  double gamma = 0.0;     // m/s^2, longitudinal acceleration command
  double beta = 0.0;      // rad, steering command
  double tau_v = 0.0;     // normalized torque vectoring, [-1.7, 1.7]
  double t = 0.0;         // s

  Vec9 to_vector() const {
    Vec9 v;
    v << vx, vy, yaw_rate, e_theta, e_y, gamma, beta, tau_v, t;
    return v;
  }
  static VehicleState from_vector(const Vec9& v) {
    return {v(0), v(1), v(2), v(3), v(4), v(5), v(6), v(7), v(8)};
  }
};

// state vector slot names
enum StateIndex {
  kVx = 0, kVy, kYawRate, kETheta, kEY, kGamma, kBeta, kTauV, kTime
};

struct ControlInput {
  double gamma_rate = 0.0;  // m/s^3
  double beta_rate = 0.0;   // rad/s
  double tau_v_rate = 0.0;  // 1/s
  double eta = 0.0;         // m, soft-constraint slack

  Vec4 to_vector() const {
    Vec4 v;
    v << gamma_rate, beta_rate, tau_v_rate, eta;
    return v;
  }
  static ControlInput from_vector(const Vec4& v) {
    return {v(0), v(1), v(2), v(3)};
  }
};

enum ControlIndex { kGammaRate = 0, kBetaRate, kTauVRate, kEta };

// GP regressor vector [vx, vy, yaw_rate, gamma, beta, tau_v]
inline Vec6 gp_input_from_state(const VehicleState& x) {
  Vec6 v;
  v << x.vx, x.vy, x.yaw_rate, x.gamma, x.beta, x.tau_v;
  return v;
}

// state-vector slots the GP input reads, in GP input order
inline constexpr int kGpInputStateSlots[6] = {kVx, kVy, kYawRate,
                                              kGamma, kBeta, kTauV};

}  // namespace kartmpc
