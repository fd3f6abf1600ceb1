#include <benchmark/benchmark.h>

#include <Eigen/Dense>
#include <random>

#include "kartmpc/accel_model.hpp"
#include "kartmpc/gp.hpp"
#include "kartmpc/ocp.hpp"
#include "kartmpc/qp.hpp"
#include "kartmpc/reduce.hpp"
#include "kartmpc/sqp.hpp"
#include "kartmpc/track.hpp"

using namespace kartmpc;

namespace {

gp::GpModel make_model(int t) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd x(t, 6);
  Eigen::VectorXd y(t);
  for (int i = 0; i < t; ++i) {
    for (int j = 0; j < 6; ++j) x(i, j) = nd(rng);
    y(i) = nd(rng);
  }
  gp::KernelParams p;
  p.lengthscales = Eigen::VectorXd::Constant(6, 1.0);
  p.noise_std = 0.2;
  return gp::fit(p, gp::GpDataset::pre_standardized(x, y));
}

void bm_gp_posterior_mean(benchmark::State& state) {
  const gp::GpModel m = make_model(static_cast<int>(state.range(0)));
  Eigen::VectorXd q = Eigen::VectorXd::Constant(6, 0.3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(gp::posterior_mean(m, q));
    q(0) += 1e-9;  // defeat caching across iterations
  }
}

struct RtiSetup {
  Track track = make_synthetic_track(default_track_spec());
  PlantParams plant;
  NominalAccelModel lat{plant, NominalAccelModel::Channel::Lateral};
  NominalAccelModel yaw{plant, NominalAccelModel::Channel::Yaw};
  ocp::OcpConfig cfg;
  sqp::ModelSelection sel;
  sqp::SqpSettings settings;
  sqp::ControllerState ctrl;
  Eigen::VectorXd measured = Eigen::VectorXd::Zero(9);
  RtiSetup() {
    sel.lateral = &lat;
    sel.yaw = &yaw;
    measured(kVx) = 6.0;
    measured(kYawRate) = 6.0 * track.curvature_at(0.0);
    ctrl.config = cfg;
    ctrl.iterate = sqp::cold_start(measured, 0.0, track, cfg);
    ctrl.initialized = true;
  }
};

void bm_qp_solve(benchmark::State& state) {
  RtiSetup s;
  // one RTI step to produce a realistic linearization
  sqp::rti_step(s.ctrl, s.measured, 0.0, s.track, s.sel, s.settings);
  const ocp::QpProblem qp_prob = ocp::linearize(
      s.cfg, s.track, AccelerationModels{&s.lat, &s.yaw}, s.ctrl.iterate);
  for (auto _ : state)
    benchmark::DoNotOptimize(qp::solve(qp_prob, 1e-8, 100));
}

void bm_rti_step(benchmark::State& state) {
  RtiSetup s;
  for (auto _ : state)
    benchmark::DoNotOptimize(
        sqp::rti_step(s.ctrl, s.measured, 0.0, s.track, s.sel, s.settings));
}

}  // namespace

BENCHMARK(bm_gp_posterior_mean)->Arg(100)->Arg(400)->Arg(1600);
BENCHMARK(bm_qp_solve)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_rti_step)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
