#pragma once

#include "kartmpc/accel_model.hpp"
#include "kartmpc/track.hpp"
#include "kartmpc/vehicle.hpp"

namespace kartmpc::dyn {

inline constexpr double kMinSDot = 0.1;  // m/s, spatial-domain guard

struct FrenetRates {
  double s_dot = 0.0;      // m/s
  double e_theta_dot = 0.0;  // rad/s
  double e_y_dot = 0.0;    // m/s
};

FrenetRates frenet_rates(const VehicleState& x, double zeta);

// dx/dt = [gamma, psi_lat, psi_yaw, de_theta, de_y, u_rates..., 1]
Vec9 time_dynamics(const VehicleState& x, const ControlInput& u, double zeta,
                   const AccelerationModels& models);

// dx/ds = time_dynamics / s_dot, valid while s_dot > kMinSDot
Vec9 spatial_dynamics(const VehicleState& x, const ControlInput& u, double zeta,
                      const AccelerationModels& models);

// analytic Jacobians of spatial_dynamics at fixed zeta
void spatial_jacobians(const VehicleState& x, const ControlInput& u,
                       double zeta, const AccelerationModels& models, Mat9& jx,
                       Mat94& ju);

// Classical RK4 with the control held constant; generic in the dynamics
// callable f(x, u) -> xdot.
template <typename F, typename VecX, typename VecU>
VecX rk4_step(const F& f, const VecX& x, const VecU& u, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("rk4_step: h must be positive");
  const VecX k1 = f(x, u);
  const VecX k2 = f(x + (h / 2.0) * k1, u);
  const VecX k3 = f(x + (h / 2.0) * k2, u);
  const VecX k4 = f(x + h * k3, u);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Integrates the spatial dynamics from s_from to s_to in `substeps` equal RK4
// steps; curvature is sampled at each substep's start abscissa and held.
Vec9 integrate_interval(const Vec9& x, const Vec4& u, double s_from,
                        double s_to, const AccelerationModels& models,
                        const Track& track, int substeps);

struct IntervalSensitivity {
  Vec9 x_next;
  Mat9 a;   // d x_next / d x
  Mat94 b;  // d x_next / d u
};

// Forward sensitivity propagation through every RK4 stage, using analytic
// stage Jacobians.
IntervalSensitivity sensitivities(const Vec9& x, const Vec4& u, double s_from,
                                  double s_to, const AccelerationModels& models,
                                  const Track& track, int substeps);

}  // namespace kartmpc::dyn
