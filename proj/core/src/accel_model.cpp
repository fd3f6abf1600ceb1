#include "kartmpc/accel_model.hpp"

#include <cmath>

namespace kartmpc {

double GpAccelModel::mean(const Vec6& x_gp) const {
  return gp::posterior_mean(*model_, x_gp);
}

Vec6 GpAccelModel::gradient(const Vec6& x_gp) const {
  return gp::mean_gradient(*model_, x_gp);
}

namespace {

struct NominalEval {
  double value;
  Vec6 grad;
};

NominalEval eval_nominal(const PlantParams& p,
                         NominalAccelModel::Channel channel, const Vec6& x,
                         bool with_grad) {
  const double vx = x(0), vy = x(1), yr = x(2), gamma = x(3), beta = x(4),
               tau_v = x(5);
  const AxleForces f =
      axle_lateral_forces(p, vx, vy, yr, gamma, beta, with_grad);
  const double cb = std::cos(beta), sb = std::sin(beta);

  NominalEval out;
  out.grad.setZero();
  if (channel == NominalAccelModel::Channel::Lateral) {
    out.value = (f.front * cb + f.rear) / p.mass - yr * vx;
    if (with_grad) {
      Eigen::Matrix<double, 1, 5> g =
          (cb * f.jac.row(0) + f.jac.row(1)) / p.mass;
      out.grad.head<5>() = g.transpose();
      out.grad(4) += -f.front * sb / p.mass;
      out.grad(0) += -yr;
      out.grad(2) += -vx;
    }
  } else {
    out.value =
        (p.lf * f.front * cb - p.lr * f.rear + p.tv_gain * tau_v) / p.inertia;
    if (with_grad) {
      Eigen::Matrix<double, 1, 5> g =
          (p.lf * cb * f.jac.row(0) - p.lr * f.jac.row(1)) / p.inertia;
      out.grad.head<5>() = g.transpose();
      out.grad(4) += -p.lf * f.front * sb / p.inertia;
      out.grad(5) = p.tv_gain / p.inertia;
    }
  }
  return out;
}

}  // namespace

double NominalAccelModel::mean(const Vec6& x_gp) const {
  return eval_nominal(params_, channel_, x_gp, false).value;
}

Vec6 NominalAccelModel::gradient(const Vec6& x_gp) const {
  return eval_nominal(params_, channel_, x_gp, true).grad;
}

}  // namespace kartmpc
