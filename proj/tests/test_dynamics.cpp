#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <random>
#include <unsupported/Eigen/MatrixFunctions>

#include "doctest.h"
#include "kartmpc/accel_model.hpp"
#include "kartmpc/dynamics.hpp"
#include "kartmpc/errors.hpp"
#include "kartmpc/track.hpp"

using namespace kartmpc;
using namespace kartmpc::dyn;

namespace {

// Small GP channels fitted around the operating envelope; nontrivial means
// and gradients without being a full training pipeline.
struct GpFixture {
  std::shared_ptr<const gp::GpModel> lat_gp, yaw_gp;
  std::unique_ptr<GpAccelModel> lat, yaw;
  AccelerationModels models;

  explicit GpFixture(std::uint64_t seed, double target_scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd x(40, 6);
    Eigen::VectorXd yl(40), yy(40);
    for (int i = 0; i < 40; ++i) {
      x(i, 0) = 5.0 + 2.0 * nd(rng);
      x(i, 1) = 0.3 * nd(rng);
      x(i, 2) = 0.4 * nd(rng);
      x(i, 3) = nd(rng);
      x(i, 4) = 0.2 * nd(rng);
      x(i, 5) = 0.5 * nd(rng);
      yl(i) = target_scale * nd(rng);
      yy(i) = target_scale * nd(rng);
    }
    gp::KernelParams p;
    p.lengthscales = Eigen::VectorXd::Constant(6, 2.0);
    p.noise_std = 0.2;
    lat_gp = std::make_shared<gp::GpModel>(
        gp::fit(p, gp::GpDataset::from_raw(x, yl)));
    yaw_gp = std::make_shared<gp::GpModel>(
        gp::fit(p, gp::GpDataset::from_raw(x, yy)));
    lat = std::make_unique<GpAccelModel>(lat_gp);
    yaw = std::make_unique<GpAccelModel>(yaw_gp);
    models = {lat.get(), yaw.get()};
  }
};

// channels that are identically zero (training data far from any query)
struct ZeroFixture {
  std::shared_ptr<const gp::GpModel> zero_gp;
  std::unique_ptr<GpAccelModel> zero;
  AccelerationModels models;

  ZeroFixture() {
    Eigen::MatrixXd x = Eigen::MatrixXd::Constant(2, 6, 1e6);
    x.row(1).array() += 1.0;
    Eigen::VectorXd y(2);
    y << 1.0, -1.0;
    gp::KernelParams p;
    p.lengthscales = Eigen::VectorXd::Ones(6);
    p.noise_std = 0.2;
    zero_gp = std::make_shared<gp::GpModel>(
        gp::fit(p, gp::GpDataset::pre_standardized(x, y)));
    zero = std::make_unique<GpAccelModel>(zero_gp);
    models = {zero.get(), zero.get()};
  }
};

VehicleState random_state(std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  VehicleState x;
  x.vx = 5.0 + 1.5 * nd(rng);
  x.vy = 0.3 * nd(rng);
  x.yaw_rate = 0.3 * nd(rng);
  x.e_theta = 0.2 * nd(rng);
  x.e_y = 0.5 * nd(rng);
  x.gamma = 0.8 * nd(rng);
  x.beta = 0.15 * nd(rng);
  x.tau_v = 0.4 * nd(rng);
  x.t = std::abs(nd(rng));
  return x;
}

ControlInput random_input(std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  return {nd(rng), 0.3 * nd(rng), 0.5 * nd(rng), 0.2 * nd(rng)};
}

Track circle_track(double radius) {
  TrackSpec spec;
  spec.segments = {TrackSegment::arc(radius, 2.0 * M_PI)};
  return make_synthetic_track(spec);
}

}  // namespace

TEST_CASE("gp_input_from_state: projection slots") {
  VehicleState x;
  CHECK(gp_input_from_state(x).norm() == 0.0);
  x.vx = 5.0;
  Vec6 v = gp_input_from_state(x);
  CHECK(v(0) == 5.0);
  CHECK(v.tail(5).norm() == 0.0);

  std::mt19937_64 rng(3);
  const VehicleState r = random_state(rng);
  v = gp_input_from_state(r);
  CHECK(v(0) == r.vx);
  CHECK(v(1) == r.vy);
  CHECK(v(2) == r.yaw_rate);
  CHECK(v(3) == r.gamma);
  CHECK(v(4) == r.beta);
  CHECK(v(5) == r.tau_v);
}

TEST_CASE("time_dynamics: quiescent state with zero-mean channels") {
  ZeroFixture zf;
  VehicleState x;
  x.vx = 5.0;
  x.e_theta = 0.1;
  x.e_y = 0.2;
  const Vec9 dx = time_dynamics(x, ControlInput{}, 0.0, zf.models);
  CHECK(std::abs(dx(kVx)) < 1e-9);       // gamma = 0
  CHECK(std::abs(dx(kVy)) < 1e-9);       // zero GP mean
  CHECK(std::abs(dx(kYawRate)) < 1e-9);
  CHECK(std::abs(dx(kGamma)) < 1e-15);
  CHECK(std::abs(dx(kBeta)) < 1e-15);
  CHECK(std::abs(dx(kTauV)) < 1e-15);
  CHECK(dx(kTime) == 1.0);
}

TEST_CASE("time_dynamics: time slot is one and GP slots match direct calls") {
  GpFixture gf(7);
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 10; ++rep) {
    const VehicleState x = random_state(rng);
    const ControlInput u = random_input(rng);
    const Vec9 dx = time_dynamics(x, u, 0.03, gf.models);
    CHECK(dx(kTime) == 1.0);
    CHECK(dx(kVx) == x.gamma);
    const Vec6 xg = gp_input_from_state(x);
    CHECK(dx(kVy) == gp::posterior_mean(*gf.lat_gp, xg));
    CHECK(dx(kYawRate) == gp::posterior_mean(*gf.yaw_gp, xg));
    CHECK(dx(kGamma) == u.gamma_rate);
    CHECK(dx(kBeta) == u.beta_rate);
    CHECK(dx(kTauV) == u.tau_v_rate);
  }
}

TEST_CASE("frenet_rates: centerline alignment and straight segments") {
  VehicleState x;
  x.vx = 4.0;
  x.yaw_rate = 0.7;
  FrenetRates fr = frenet_rates(x, 0.2);
  CHECK(fr.s_dot == doctest::Approx(4.0));
  CHECK(fr.e_y_dot == doctest::Approx(0.0));
  fr = frenet_rates(x, 0.0);
  CHECK(fr.e_theta_dot == doctest::Approx(0.7));
}

TEST_CASE("frenet_rates: hand-evaluated formula") {
  VehicleState x;
  x.vx = 5.0;
  x.vy = 0.5;
  x.e_theta = 0.1;
  x.e_y = 0.3;
  const double zeta = 0.05;
  const FrenetRates fr = frenet_rates(x, zeta);
  const double s_dot = (5.0 * std::cos(0.1) - 0.5 * std::sin(0.1)) /
                       (1.0 - zeta * 0.3);
  CHECK(fr.s_dot == doctest::Approx(s_dot).epsilon(1e-12));
  CHECK(fr.e_theta_dot ==
        doctest::Approx(x.yaw_rate - zeta * s_dot).epsilon(1e-12));
  CHECK(fr.e_y_dot ==
        doctest::Approx(5.0 * std::sin(0.1) + 0.5 * std::cos(0.1))
            .epsilon(1e-12));
}

TEST_CASE("frenet_rates: curvature singularity guarded") {
  VehicleState x;
  x.vx = 5.0;
  x.e_y = 10.0;
  CHECK_THROWS_AS(frenet_rates(x, 0.1), SingularityError);
}

TEST_CASE("spatial_dynamics: straight cruise leaves only the time slot") {
  ZeroFixture zf;
  VehicleState x;
  x.vx = 5.0;
  const Vec9 dxds = spatial_dynamics(x, ControlInput{}, 0.0, zf.models);
  for (int i = 0; i < 8; ++i) CHECK(std::abs(dxds(i)) < 1e-9);
  CHECK(dxds(kTime) == doctest::Approx(1.0 / 5.0).epsilon(1e-12));
}

TEST_CASE("spatial_dynamics: equals time_dynamics over s_dot elementwise") {
  GpFixture gf(13);
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 20; ++rep) {
    const VehicleState x = random_state(rng);
    const ControlInput u = random_input(rng);
    const double zeta = 0.04;
    const FrenetRates fr = frenet_rates(x, zeta);
    if (fr.s_dot <= kMinSDot) continue;
    const Vec9 dt = time_dynamics(x, u, zeta, gf.models);
    const Vec9 ds = spatial_dynamics(x, u, zeta, gf.models);
    CHECK((ds * fr.s_dot - dt).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(ds(kTime) == doctest::Approx(1.0 / fr.s_dot).epsilon(1e-12));
  }
}

TEST_CASE("spatial_dynamics: slow progress rejected") {
  ZeroFixture zf;
  VehicleState x;
  x.vx = 0.05;
  CHECK_THROWS_AS(spatial_dynamics(x, ControlInput{}, 0.0, zf.models),
                  SingularityError);
}

TEST_CASE("rk4_step: matrix-exponential oracle and fourth-order decay") {
  // closed-form 2-state LTI test system
  Eigen::Matrix2d a;
  a << 0.0, 1.0, -4.0, -0.5;
  auto f = [&](const Eigen::Vector2d& x, const Eigen::Vector2d&) {
    return Eigen::Vector2d(a * x);
  };
  const Eigen::Vector2d x0(1.0, 0.0);
  const Eigen::Vector2d u = Eigen::Vector2d::Zero();
  const double total = 1.0;
  const Eigen::Vector2d exact = (a * total).exp() * x0;

  auto integrate = [&](int n) {
    Eigen::Vector2d x = x0;
    for (int i = 0; i < n; ++i) x = rk4_step(f, x, u, total / n);
    return x;
  };
  const double e1 = (integrate(8) - exact).norm();
  const double e2 = (integrate(16) - exact).norm();
  const double e3 = (integrate(32) - exact).norm();
  CHECK(e1 / e2 > 12.0);
  CHECK(e1 / e2 < 40.0);
  CHECK(e2 / e3 > 12.0);
  CHECK(e2 / e3 < 40.0);
}

TEST_CASE("rk4_step: consistency as h shrinks") {
  auto f = [](const Eigen::Vector2d& x, const Eigen::Vector2d&) {
    return Eigen::Vector2d(std::sin(x(1)), std::cos(x(0)));
  };
  const Eigen::Vector2d x0(0.3, 0.7);
  const Eigen::Vector2d u = Eigen::Vector2d::Zero();
  const double h = 1e-4;
  const Eigen::Vector2d one = rk4_step(f, x0, u, h);
  const Eigen::Vector2d euler = x0 + h * f(x0, u);
  CHECK((one - euler).norm() < 10.0 * h * h);
  CHECK_THROWS_AS(rk4_step(f, x0, u, 0.0), std::invalid_argument);
}

TEST_CASE("rk4_step: constant integrand accumulates exactly") {
  // t' = 1/s_dot constant along a straight cruise
  ZeroFixture zf;
  VehicleState x;
  x.vx = 5.0;
  Vec9 v = x.to_vector();
  const ControlInput u;
  auto f = [&](const Vec9& xv, const Vec4&) {
    return spatial_dynamics(VehicleState::from_vector(xv), u, 0.0, zf.models);
  };
  const double lap = 120.0;
  const int n = 400;
  for (int i = 0; i < n; ++i) v = rk4_step(f, v, u.to_vector(), lap / n);
  CHECK(v(kTime) == doctest::Approx(lap / 5.0).epsilon(1e-9));
}

TEST_CASE("spatial_jacobians: match finite differences") {
  GpFixture gf(19);
  std::mt19937_64 rng(23);
  const double h = 1e-6;
  int checked = 0;
  while (checked < 10) {
    const VehicleState x = random_state(rng);
    const ControlInput u = random_input(rng);
    const double zeta = 0.03;
    if (frenet_rates(x, zeta).s_dot <= kMinSDot + 0.5) continue;
    ++checked;
    Mat9 jx;
    Mat94 ju;
    spatial_jacobians(x, u, zeta, gf.models, jx, ju);
    const Vec9 xv = x.to_vector();
    const Vec4 uv = u.to_vector();
    for (int j = 0; j < 9; ++j) {
      Vec9 xp = xv, xm = xv;
      xp(j) += h;
      xm(j) -= h;
      const Vec9 fd =
          (spatial_dynamics(VehicleState::from_vector(xp), u, zeta, gf.models) -
           spatial_dynamics(VehicleState::from_vector(xm), u, zeta,
                            gf.models)) /
          (2 * h);
      for (int i = 0; i < 9; ++i)
        CHECK(std::abs(jx(i, j) - fd(i)) / std::max(1.0, std::abs(fd(i))) <
              1e-4);
    }
    for (int j = 0; j < 4; ++j) {
      Vec4 up = uv, um = uv;
      up(j) += h;
      um(j) -= h;
      const Vec9 fd = (spatial_dynamics(x, ControlInput::from_vector(up), zeta,
                                        gf.models) -
                       spatial_dynamics(x, ControlInput::from_vector(um), zeta,
                                        gf.models)) /
                      (2 * h);
      for (int i = 0; i < 9; ++i)
        CHECK(std::abs(ju(i, j) - fd(i)) / std::max(1.0, std::abs(fd(i))) <
              1e-4);
    }
  }
}

TEST_CASE("integrate_interval: composition and preconditions") {
  GpFixture gf(29);
  const Track track = circle_track(20.0);
  std::mt19937_64 rng(31);
  const VehicleState x = random_state(rng);
  const Vec4 u = random_input(rng).to_vector();
  const Vec9 xv = x.to_vector();

  // one cell = one plain rk4 step at the start curvature
  const double s0 = 3.0, ts = 0.3;
  const Vec9 one = integrate_interval(xv, u, s0, s0 + ts, gf.models, track, 1);
  const ControlInput ui = ControlInput::from_vector(u);
  auto f = [&](const Vec9& q, const Vec4&) {
    return spatial_dynamics(VehicleState::from_vector(q), ui,
                            track.curvature_at(s0), gf.models);
  };
  CHECK((one - rk4_step(f, xv, u, ts)).cwiseAbs().maxCoeff() < 1e-14);

  // three cells chain through intermediate states
  const Vec9 chained =
      integrate_interval(xv, u, s0, s0 + 3 * ts, gf.models, track, 3);
  Vec9 manual = xv;
  for (int i = 0; i < 3; ++i)
    manual = integrate_interval(manual, u, s0 + i * ts, s0 + (i + 1) * ts,
                                gf.models, track, 1);
  CHECK((chained - manual).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(integrate_interval(xv, u, s0, s0, gf.models, track, 1),
                  std::invalid_argument);
}

TEST_CASE("sensitivities: structure, accuracy and determinism") {
  GpFixture gf(37);
  const Track track = circle_track(25.0);
  std::mt19937_64 rng(41);
  const double h = 1e-6;
  int checked = 0;
  while (checked < 10) {
    VehicleState x = random_state(rng);
    x.e_y *= 0.3;
    const Vec4 u = random_input(rng).to_vector();
    const Vec9 xv = x.to_vector();
    const double s0 = 5.0, s1 = 5.9;  // three cells
    if (frenet_rates(x, track.curvature_at(s0)).s_dot < 2.0) continue;
    ++checked;
    const IntervalSensitivity sens =
        sensitivities(xv, u, s0, s1, gf.models, track, 3);

    // integration endpoint agrees with integrate_interval
    const Vec9 ref = integrate_interval(xv, u, s0, s1, gf.models, track, 3);
    CHECK((sens.x_next - ref).cwiseAbs().maxCoeff() < 1e-12);

    // nothing depends on t, and t maps through unchanged
    for (int i = 0; i < 9; ++i)
      CHECK(sens.a(i, kTime) == (i == kTime ? 1.0 : 0.0));
    // slack drives no dynamics slot
    CHECK(sens.b.col(kEta).cwiseAbs().maxCoeff() == 0.0);

    for (int j = 0; j < 9; ++j) {
      Vec9 xp = xv, xm = xv;
      xp(j) += h;
      xm(j) -= h;
      const Vec9 fd = (integrate_interval(xp, u, s0, s1, gf.models, track, 3) -
                       integrate_interval(xm, u, s0, s1, gf.models, track, 3)) /
                      (2 * h);
      for (int i = 0; i < 9; ++i)
        CHECK(std::abs(sens.a(i, j) - fd(i)) / std::max(1.0, std::abs(fd(i))) <
              1e-4);
    }
    for (int j = 0; j < 4; ++j) {
      Vec4 up = u, um = u;
      up(j) += h;
      um(j) -= h;
      const Vec9 fd = (integrate_interval(xv, up, s0, s1, gf.models, track, 3) -
                       integrate_interval(xv, um, s0, s1, gf.models, track, 3)) /
                      (2 * h);
      for (int i = 0; i < 9; ++i)
        CHECK(std::abs(sens.b(i, j) - fd(i)) / std::max(1.0, std::abs(fd(i))) <
              1e-4);
    }

    // frozen models: repeated evaluation is bit-identical
    const IntervalSensitivity again =
        sensitivities(xv, u, s0, s1, gf.models, track, 3);
    CHECK((sens.a - again.a).cwiseAbs().maxCoeff() == 0.0);
    CHECK((sens.b - again.b).cwiseAbs().maxCoeff() == 0.0);
  }
}
