#include "kartmpc/plant.hpp"

#include <cmath>

namespace kartmpc {

void PlantParams::validate() const {
  if (mass <= 0 || inertia <= 0 || lf <= 0 || lr <= 0 || tv_gain <= 0 ||
      gamma_lag <= 0 || beta_lag <= 0 || gamma_max <= 0 ||
      pacejka_b_front <= 0 || pacejka_c_front <= 0 || pacejka_d_front <= 0 ||
      pacejka_b_rear <= 0 || pacejka_c_rear <= 0 || pacejka_d_rear <= 0)
    throw std::invalid_argument("plant params must be positive");
}

namespace {

// magic formula value and d/dalpha
inline void pacejka(double b, double c, double d, double alpha, double& f,
                    double& df) {
  const double ba = b * alpha;
  const double inner = std::atan(ba);
  f = d * std::sin(c * inner);
  df = d * std::cos(c * inner) * c * b / (1.0 + ba * ba);
}

}  // namespace

AxleForces axle_lateral_forces(const PlantParams& p, double vx, double vy,
                               double yaw_rate, double gamma, double beta,
                               bool with_jacobian) {
  const double nf = vy + p.lf * yaw_rate;
  const double nr = vy - p.lr * yaw_rate;
  const double qf = vx * vx + nf * nf;
  const double qr = vx * vx + nr * nr;
  const double alpha_f = beta - std::atan2(nf, vx);
  const double alpha_r = -std::atan2(nr, vx);

  // static longitudinal load transfer: D shifts between axles with gamma
  double scale_f = 1.0, scale_r = 1.0;
  double dscale_f = 0.0, dscale_r = 0.0;
  if (p.load_transfer) {
    scale_f = std::max(0.0, 1.0 - p.load_transfer_gain * gamma);
    scale_r = std::max(0.0, 1.0 + p.load_transfer_gain * gamma);
    dscale_f = scale_f > 0.0 ? -p.load_transfer_gain : 0.0;
    dscale_r = scale_r > 0.0 ? p.load_transfer_gain : 0.0;
  }
  // adherence-ellipse approximation: lateral capacity shrinks with |gamma|
  double derate = 1.0, dderate = 0.0;
  if (p.combined_slip) {
    const double r = gamma / p.gamma_max;
    const double u = r * r;
    if (u < 0.9) {
      derate = std::sqrt(1.0 - u);
      dderate = -r / (p.gamma_max * derate);
    } else {
      derate = std::sqrt(0.1);
    }
  }

  double pf, dpf, pr, dpr;
  pacejka(p.pacejka_b_front, p.pacejka_c_front, p.pacejka_d_front, alpha_f, pf, dpf);
  pacejka(p.pacejka_b_rear, p.pacejka_c_rear, p.pacejka_d_rear, alpha_r, pr, dpr);

  AxleForces out;
  out.front = scale_f * derate * pf;
  out.rear = scale_r * derate * pr;
  out.jac.setZero();
  if (with_jacobian) {
    // slip-angle partials over (vx, vy, yaw_rate, gamma, beta)
    Eigen::Matrix<double, 1, 5> daf, dar;
    daf << nf / qf, -vx / qf, -p.lf * vx / qf, 0.0, 1.0;
    dar << nr / qr, -vx / qr, p.lr * vx / qr, 0.0, 0.0;
    out.jac.row(0) = scale_f * derate * dpf * daf;
    out.jac.row(1) = scale_r * derate * dpr * dar;
    out.jac(0, 3) = (dscale_f * derate + scale_f * dderate) * pf;
    out.jac(1, 3) = (dscale_r * derate + scale_r * dderate) * pr;
  }
  return out;
}

namespace {

struct PlantDeriv {
  double dx, dy, dpsi, dvx, dvy, dyaw, dgamma, dbeta;
};

PlantDeriv plant_ode(const PlantState& s, const PlantCommands& cmd,
                     const PlantParams& p) {
  const AxleForces f = axle_lateral_forces(p, s.vx, s.vy, s.yaw_rate,
                                           s.gamma_act, s.beta_act, false);
  const double cb = std::cos(s.beta_act), sb = std::sin(s.beta_act);
  PlantDeriv d;
  d.dx = s.vx * std::cos(s.psi) - s.vy * std::sin(s.psi);
  d.dy = s.vx * std::sin(s.psi) + s.vy * std::cos(s.psi);
  d.dpsi = s.yaw_rate;
  d.dvx = s.gamma_act + s.yaw_rate * s.vy - f.front * sb / p.mass;
  d.dvy = (f.front * cb + f.rear) / p.mass - s.yaw_rate * s.vx;
  d.dyaw = (p.lf * f.front * cb - p.lr * f.rear + p.tv_gain * s.tau_v_act) /
           p.inertia;
  d.dgamma = (cmd.gamma - s.gamma_act) / p.gamma_lag;
  d.dbeta = (cmd.beta - s.beta_act) / p.beta_lag;
  return d;
}

PlantState advance(const PlantState& s, const PlantDeriv& d, double h) {
  PlantState r = s;
  r.x += h * d.dx;
  r.y += h * d.dy;
  r.psi += h * d.dpsi;
  r.vx += h * d.dvx;
  r.vy += h * d.dvy;
  r.yaw_rate += h * d.dyaw;
  r.gamma_act += h * d.dgamma;
  r.beta_act += h * d.dbeta;
  return r;
}

}  // namespace

void plant_accelerations(const PlantState& state, const PlantParams& params,
                         double& vy_dot, double& yaw_acc) {
  const PlantDeriv d = plant_ode(state, PlantCommands{}, params);
  vy_dot = d.dvy;
  yaw_acc = d.dyaw;
}

PlantState plant_step(const PlantState& state, const PlantCommands& commands,
                      const PlantParams& params, double dt) {
  if (!(dt > 0.0) || dt > 0.02)
    throw std::invalid_argument("plant_step: dt must be in (0, 0.02]");
  if (state.vx <= 0.1) throw PlantStallError("plant_step: vx <= 0.1 m/s");

  PlantState s0 = state;
  s0.tau_v_act = commands.tau_v;  // torque vectoring has no modeled lag

  const PlantDeriv k1 = plant_ode(s0, commands, params);
  const PlantDeriv k2 = plant_ode(advance(s0, k1, dt / 2.0), commands, params);
  const PlantDeriv k3 = plant_ode(advance(s0, k2, dt / 2.0), commands, params);
  const PlantDeriv k4 = plant_ode(advance(s0, k3, dt), commands, params);

  PlantState r = s0;
  auto mix = [&](double a, double b, double c, double d) {
    return dt / 6.0 * (a + 2.0 * b + 2.0 * c + d);
  };
  r.x += mix(k1.dx, k2.dx, k3.dx, k4.dx);
  r.y += mix(k1.dy, k2.dy, k3.dy, k4.dy);
  r.psi += mix(k1.dpsi, k2.dpsi, k3.dpsi, k4.dpsi);
  r.vx += mix(k1.dvx, k2.dvx, k3.dvx, k4.dvx);
  r.vy += mix(k1.dvy, k2.dvy, k3.dvy, k4.dvy);
  r.yaw_rate += mix(k1.dyaw, k2.dyaw, k3.dyaw, k4.dyaw);
  r.gamma_act += mix(k1.dgamma, k2.dgamma, k3.dgamma, k4.dgamma);
  r.beta_act += mix(k1.dbeta, k2.dbeta, k3.dbeta, k4.dbeta);

  if (r.vx <= 0.1) throw PlantStallError("plant_step: vx <= 0.1 m/s after step");
  return r;
}

}  // namespace kartmpc
