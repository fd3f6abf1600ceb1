#pragma once

#include "kartmpc/track.hpp"
#include "kartmpc/vehicle.hpp"

namespace kartmpc {

// Ground-truth simulation parameters: dynamic bicycle with Pacejka lateral
// tires, torque-vectoring yaw moment and first-order actuator lags. Defaults
// are kart-like and self-consistent, not identified from any vehicle.
struct PlantParams {
  double mass = 190.0;      // kg
  double inertia = 18.0;    // kg m^2
  double lf = 0.55;         // m
  double lr = 0.65;         // m
  double pacejka_b_front = 9.0;
  double pacejka_c_front = 1.4;
  double pacejka_d_front = 807.0;  // N
  double pacejka_b_rear = 9.0;
  double pacejka_c_rear = 1.4;
  double pacejka_d_rear = 683.0;  // N
  double tv_gain = 150.0;    // N m per unit tau_v
  double gamma_lag = 0.08;   // s
  double beta_lag = 0.12;    // s
  bool combined_slip = true;
  bool load_transfer = true;
  double gamma_max = 4.2;            // m/s^2, scales the adherence ellipse
  double load_transfer_gain = 0.03;  // axle-load shift per m/s^2

  void validate() const;
};

struct PlantState {
  double x = 0.0;
  double y = 0.0;
  double psi = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  double yaw_rate = 0.0;
  double gamma_act = 0.0;
  double beta_act = 0.0;
  double tau_v_act = 0.0;
};

struct PlantCommands {
  double gamma = 0.0;
  double beta = 0.0;
  double tau_v = 0.0;
};

// Front/rear lateral tire forces and their partials w.r.t.
// (vx, vy, yaw_rate, gamma, beta). Shared between the plant and the nominal
// prediction model so both see identical tire behavior.
struct AxleForces {
  double front = 0.0;
  double rear = 0.0;
  Eigen::Matrix<double, 2, 5> jac;  // rows (front, rear)
};

AxleForces axle_lateral_forces(const PlantParams& p, double vx, double vy,
                               double yaw_rate, double gamma, double beta,
                               bool with_jacobian);

// Instantaneous lateral and yaw accelerations of the plant at a state;
// ground truth for model training and evaluation.
void plant_accelerations(const PlantState& state, const PlantParams& params,
                         double& vy_dot, double& yaw_acc);

// One RK4 substep of the rigid-body plant, dt in (0, 0.02] s.
PlantState plant_step(const PlantState& state, const PlantCommands& commands,
                      const PlantParams& params, double dt);

inline FrenetPose global_to_frenet(const PlantState& st, const Track& track) {
  return global_to_frenet(track, st.x, st.y, st.psi);
}

}  // namespace kartmpc
