#include "kartmpc/dynamics.hpp"

#include <cmath>

namespace kartmpc::dyn {

FrenetRates frenet_rates(const VehicleState& x, double zeta) {
  const double w = 1.0 - zeta * x.e_y;
  if (std::abs(w) < 1e-6)
    throw SingularityError("frenet_rates: 1 - zeta*e_y vanishes");
  const double c = std::cos(x.e_theta), s = std::sin(x.e_theta);
  FrenetRates r;
  r.s_dot = (x.vx * c - x.vy * s) / w;
  r.e_theta_dot = x.yaw_rate - zeta * r.s_dot;
  r.e_y_dot = x.vx * s + x.vy * c;
  return r;
}

Vec9 time_dynamics(const VehicleState& x, const ControlInput& u, double zeta,
                   const AccelerationModels& models) {
  const Vec6 xgp = gp_input_from_state(x);
  const FrenetRates fr = frenet_rates(x, zeta);
  Vec9 dx;
  dx(kVx) = x.gamma;
  dx(kVy) = models.lateral->mean(xgp);
  dx(kYawRate) = models.yaw->mean(xgp);
  dx(kETheta) = fr.e_theta_dot;
  dx(kEY) = fr.e_y_dot;
  dx(kGamma) = u.gamma_rate;
  dx(kBeta) = u.beta_rate;
  dx(kTauV) = u.tau_v_rate;
  dx(kTime) = 1.0;
  return dx;
}

namespace {

Vec9 time_dynamics_zeta(const VehicleState& x, const ControlInput& u,
                        double zeta, const AccelerationModels& models,
                        double& s_dot) {
  s_dot = frenet_rates(x, zeta).s_dot;
  return time_dynamics(x, u, zeta, models);
}

}  // namespace

Vec9 spatial_dynamics(const VehicleState& x, const ControlInput& u, double zeta,
                      const AccelerationModels& models) {
  double s_dot = 0.0;
  const Vec9 dxdt = time_dynamics_zeta(x, u, zeta, models, s_dot);
  if (s_dot <= kMinSDot)
    throw SingularityError("spatial_dynamics: s_dot below guard");
  return dxdt / s_dot;
}

void spatial_jacobians(const VehicleState& x, const ControlInput& u,
                       double zeta, const AccelerationModels& models, Mat9& jx,
                       Mat94& ju) {
  double s_dot = 0.0;
  const Vec9 g = time_dynamics_zeta(x, u, zeta, models, s_dot);
  if (s_dot <= kMinSDot)
    throw SingularityError("spatial_jacobians: s_dot below guard");

  const double w = 1.0 - zeta * x.e_y;
  const double c = std::cos(x.e_theta), s = std::sin(x.e_theta);

  // gradient of s_dot over the state
  Vec9 ds = Vec9::Zero();
  ds(kVx) = c / w;
  ds(kVy) = -s / w;
  ds(kETheta) = (-x.vx * s - x.vy * c) / w;
  ds(kEY) = s_dot * zeta / w;

  // Jacobian of the time-domain dynamics
  Mat9 jg = Mat9::Zero();
  jg(kVx, kGamma) = 1.0;
  const Vec6 xgp = gp_input_from_state(x);
  const Vec6 glat = models.lateral->gradient(xgp);
  const Vec6 gyaw = models.yaw->gradient(xgp);
  for (int m = 0; m < 6; ++m) {
    jg(kVy, kGpInputStateSlots[m]) = glat(m);
    jg(kYawRate, kGpInputStateSlots[m]) = gyaw(m);
  }
  jg.row(kETheta) = -zeta * ds.transpose();
  jg(kETheta, kYawRate) += 1.0;
  jg(kEY, kVx) = s;
  jg(kEY, kVy) = c;
  jg(kEY, kETheta) = x.vx * c - x.vy * s;

  Mat94 jgu = Mat94::Zero();
  jgu(kGamma, kGammaRate) = 1.0;
  jgu(kBeta, kBetaRate) = 1.0;
  jgu(kTauV, kTauVRate) = 1.0;

  // chain rule for f = g / s_dot
  jx = jg / s_dot - g * ds.transpose() / (s_dot * s_dot);
  ju = jgu / s_dot;
}

Vec9 integrate_interval(const Vec9& x, const Vec4& u, double s_from,
                        double s_to, const AccelerationModels& models,
                        const Track& track, int substeps) {
  if (!(s_to > s_from))
    throw std::invalid_argument("integrate_interval: s_to must exceed s_from");
  if (substeps < 1)
    throw std::invalid_argument("integrate_interval: substeps must be >= 1");

  const double h = (s_to - s_from) / static_cast<double>(substeps);
  Vec9 xk = x;
  for (int k = 0; k < substeps; ++k) {
    const double zeta = track.curvature_at(s_from + k * h);
    auto f = [&](const Vec9& xs, const Vec4& us) {
      return spatial_dynamics(VehicleState::from_vector(xs),
                              ControlInput::from_vector(us), zeta, models);
    };
    xk = rk4_step(f, xk, u, h);
  }
  return xk;
}

IntervalSensitivity sensitivities(const Vec9& x, const Vec4& u, double s_from,
                                  double s_to, const AccelerationModels& models,
                                  const Track& track, int substeps) {
  if (!(s_to > s_from))
    throw std::invalid_argument("sensitivities: s_to must exceed s_from");
  if (substeps < 1)
    throw std::invalid_argument("sensitivities: substeps must be >= 1");

  const double h = (s_to - s_from) / static_cast<double>(substeps);
  IntervalSensitivity out;
  out.x_next = x;
  out.a.setIdentity();
  out.b.setZero();

  const ControlInput uc = ControlInput::from_vector(u);
  for (int k = 0; k < substeps; ++k) {
    const double zeta = track.curvature_at(s_from + k * h);

    auto eval = [&](const Vec9& xs, Vec9& fval, Mat9& fjx, Mat94& fju) {
      const VehicleState st = VehicleState::from_vector(xs);
      fval = spatial_dynamics(st, uc, zeta, models);
      spatial_jacobians(st, uc, zeta, models, fjx, fju);
    };

    Vec9 k1, k2, k3, k4;
    Mat9 j1x, j2x, j3x, j4x;
    Mat94 j1u, j2u, j3u, j4u;
    const Vec9 x1 = out.x_next;
    eval(x1, k1, j1x, j1u);
    eval(x1 + (h / 2.0) * k1, k2, j2x, j2u);
    eval(x1 + (h / 2.0) * k2, k3, j3x, j3u);
    eval(x1 + h * k3, k4, j4x, j4u);

    // stage sensitivities dk_i/dx, dk_i/du
    const Mat9 dk1x = j1x;
    const Mat94 dk1u = j1u;
    const Mat9 dk2x = j2x * (Mat9::Identity() + (h / 2.0) * dk1x);
    const Mat94 dk2u = j2u + j2x * ((h / 2.0) * dk1u);
    const Mat9 dk3x = j3x * (Mat9::Identity() + (h / 2.0) * dk2x);
    const Mat94 dk3u = j3u + j3x * ((h / 2.0) * dk2u);
    const Mat9 dk4x = j4x * (Mat9::Identity() + h * dk3x);
    const Mat94 dk4u = j4u + j4x * (h * dk3u);

    const Mat9 a_sub = Mat9::Identity() +
                       (h / 6.0) * (dk1x + 2.0 * dk2x + 2.0 * dk3x + dk4x);
    const Mat94 b_sub = (h / 6.0) * (dk1u + 2.0 * dk2u + 2.0 * dk3u + dk4u);

    out.x_next = x1 + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    out.b = a_sub * out.b + b_sub;
    out.a = a_sub * out.a;
  }
  return out;
}

}  // namespace kartmpc::dyn
