#include "kartmpc/kalman.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace kartmpc {
namespace {

using Mat2 = Eigen::Matrix2d;
using Vec2 = Eigen::Vector2d;

constexpr double kDiffuse = 1e12;

void check_args(Eigen::Index n, double dt, double q, double r) {
  if (n < 1) throw std::invalid_argument("kalman_smooth: empty series");
  if (!(dt > 0.0)) throw std::invalid_argument("kalman_smooth: dt must be > 0");
  if (!(q > 0.0) || !(r > 0.0))
    throw std::invalid_argument("kalman_smooth: noise terms must be > 0");
}

struct ForwardPass {
  std::vector<Vec2> x_pred, x_filt;
  std::vector<Mat2> p_pred, p_filt;
};

ForwardPass run_forward(const Eigen::VectorXd& z, double dt, double q,
                        double r) {
  const Eigen::Index n = z.size();
  Mat2 f;
  f << 1.0, dt, 0.0, 1.0;
  Mat2 qm;
  qm << q * dt * dt * dt / 3.0, q * dt * dt / 2.0,  //
      q * dt * dt / 2.0, q * dt;
  const double rr = r * r;

  ForwardPass fp;
  fp.x_pred.resize(n);
  fp.x_filt.resize(n);
  fp.p_pred.resize(n);
  fp.p_filt.resize(n);

  Vec2 x(z(0), 0.0);
  Mat2 p = kDiffuse * Mat2::Identity();
  for (Eigen::Index k = 0; k < n; ++k) {
    if (k > 0) {
      x = f * x;
      p = f * p * f.transpose() + qm;
    }
    fp.x_pred[k] = x;
    fp.p_pred[k] = p;

    const double s = p(0, 0) + rr;
    const Vec2 gain = p.col(0) / s;
    x += gain * (z(k) - x(0));
    p -= gain * p.row(0);
    p = 0.5 * (p + p.transpose());
    fp.x_filt[k] = x;
    fp.p_filt[k] = p;
  }
  return fp;
}

}  // namespace

SmoothedSeries kalman_filter_forward(const Eigen::VectorXd& series, double dt,
                                     double process_noise, double meas_noise) {
  check_args(series.size(), dt, process_noise, meas_noise);
  const ForwardPass fp = run_forward(series, dt, process_noise, meas_noise);
  SmoothedSeries out;
  const Eigen::Index n = series.size();
  out.value.resize(n);
  out.rate.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.value(k) = fp.x_filt[k](0);
    out.rate(k) = fp.x_filt[k](1);
  }
  return out;
}

SmoothedSeries kalman_smooth(const Eigen::VectorXd& series, double dt,
                             double process_noise, double meas_noise) {
  check_args(series.size(), dt, process_noise, meas_noise);
  const Eigen::Index n = series.size();
  const ForwardPass fp = run_forward(series, dt, process_noise, meas_noise);

  Mat2 f;
  f << 1.0, dt, 0.0, 1.0;

  SmoothedSeries out;
  out.value.resize(n);
  out.rate.resize(n);
  Vec2 xs = fp.x_filt[n - 1];
  Mat2 ps = fp.p_filt[n - 1];
  out.value(n - 1) = xs(0);
  out.rate(n - 1) = xs(1);
  for (Eigen::Index k = n - 2; k >= 0; --k) {
    const Mat2 gain =
        fp.p_filt[k] * f.transpose() * fp.p_pred[k + 1].inverse();
    xs = fp.x_filt[k] + gain * (xs - fp.x_pred[k + 1]);
    ps = fp.p_filt[k] + gain * (ps - fp.p_pred[k + 1]) * gain.transpose();
    out.value(k) = xs(0);
    out.rate(k) = xs(1);
  }
  return out;
}

SmoothedSeries kalman_smooth(const Eigen::VectorXd& timestamps,
                             const Eigen::VectorXd& series,
                             double process_noise, double meas_noise) {
  if (timestamps.size() != series.size())
    throw std::invalid_argument("kalman_smooth: size mismatch");
  if (timestamps.size() < 2)
    throw std::invalid_argument("kalman_smooth: need at least two samples");
  const double dt = timestamps(1) - timestamps(0);
  for (Eigen::Index k = 1; k < timestamps.size(); ++k)
    if (std::abs(timestamps(k) - timestamps(k - 1) - dt) > 1e-9)
      throw std::invalid_argument("kalman_smooth: non-uniform timestamps");
  return kalman_smooth(series, dt, process_noise, meas_noise);
}

}  // namespace kartmpc
