#include "kartmpc/sqp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "kartmpc/dynamics.hpp"
#include "kartmpc/errors.hpp"

namespace kartmpc::sqp {
namespace {

// linear interpolation over ascending knots, hold-extrapolated at both ends;
// exact at the knots
double interp(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys, double x) {
  const Eigen::Index n = xs.size();
  if (x <= xs(0)) return ys(0);
  if (x >= xs(n - 1)) return ys(n - 1);
  Eigen::Index lo = 0, hi = n - 1;
  while (hi - lo > 1) {
    const Eigen::Index mid = (lo + hi) / 2;
    (xs(mid) <= x ? lo : hi) = mid;
  }
  const double w = (x - xs(lo)) / (xs(hi) - xs(lo));
  return ys(lo) + w * (ys(hi) - ys(lo));
}

struct HorizonModels {
  std::vector<AccelerationModels> models;
  std::vector<std::shared_ptr<GpAccelModel>> keep;  // ownership for NN locals
};

HorizonModels build_horizon(const ModelSelection& sel,
                            const ocp::NlpIterate& iterate, int n) {
  HorizonModels out;
  if (!sel.use_nn()) {
    out.models.push_back({sel.lateral, sel.yaw});
    return out;
  }
  std::vector<Eigen::VectorXd> anchors;
  anchors.reserve(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j)
    anchors.push_back(
        gp_input_from_state(VehicleState::from_vector(iterate.states.col(j))));
  const auto lat = gp::select_along_horizon(*sel.lateral_sod, *sel.lateral_data,
                                            anchors, sel.lateral_t_nn);
  const auto yaw = gp::select_along_horizon(*sel.yaw_sod, *sel.yaw_data,
                                            anchors, sel.yaw_t_nn);
  for (int j = 0; j < n; ++j) {
    out.keep.push_back(std::make_shared<GpAccelModel>(lat[static_cast<std::size_t>(j)]));
    out.keep.push_back(std::make_shared<GpAccelModel>(yaw[static_cast<std::size_t>(j)]));
    out.models.push_back({out.keep[2 * static_cast<std::size_t>(j)].get(),
                          out.keep[2 * static_cast<std::size_t>(j) + 1].get()});
  }
  return out;
}

double nlp_objective(const ocp::OcpConfig& config,
                     const ocp::NlpIterate& iterate) {
  double f = 0.0;
  for (int j = 0; j < config.num_intervals(); ++j) {
    const Eigen::Vector4d h =
        ocp::stage_residual(iterate.states.col(j), iterate.controls.col(j));
    f += 0.5 * h.dot(config.stage_weights.cwiseProduct(h));
  }
  const Eigen::Vector3d hn =
      ocp::terminal_residual(iterate.states.col(config.num_intervals()), config);
  f += 0.5 * hn.dot(config.terminal_weights.cwiseProduct(hn));
  return f;
}

double nlp_violation(const ocp::OcpConfig& config, const Track& track,
                     const std::vector<AccelerationModels>& models,
                     const ocp::NlpIterate& iterate) {
  double v = (iterate.measured - Vec9(iterate.states.col(0))).lpNorm<1>();
  for (const Vec9& r : ocp::transcribe(config, track, models, iterate))
    v += r.lpNorm<1>();
  for (int j = 0; j < config.num_intervals(); ++j) {
    Eigen::Matrix<double, ocp::kStageRows, 1> lb, ub;
    ocp::stage_bounds(config, track, iterate.node_s(j), lb, ub);
    const auto r = ocp::stage_constraint(iterate.states.col(j),
                                         iterate.controls.col(j));
    v += (lb - r).cwiseMax(0.0).sum() + (r - ub).cwiseMax(0.0).sum();
  }
  {
    const int n = config.num_intervals();
    Eigen::Matrix<double, ocp::kTerminalRows, 1> lb, ub;
    ocp::terminal_bounds(config, track, iterate.node_s(n), lb, ub);
    const auto r = ocp::terminal_constraint(iterate.states.col(n),
                                            iterate.controls.col(n - 1));
    v += (lb - r).cwiseMax(0.0).sum() + (r - ub).cwiseMax(0.0).sum();
  }
  return v;
}

double max_dual(const qp::QpSolution& sol) {
  double m = sol.embed_dual.lpNorm<Eigen::Infinity>();
  if (sol.continuity_duals.size() > 0)
    m = std::max(m, sol.continuity_duals.cwiseAbs().maxCoeff());
  for (const auto& d : sol.stage_lower_duals)
    if (d.size() > 0) m = std::max(m, d.lpNorm<Eigen::Infinity>());
  for (const auto& d : sol.stage_upper_duals)
    if (d.size() > 0) m = std::max(m, d.lpNorm<Eigen::Infinity>());
  if (sol.term_lower_duals.size() > 0)
    m = std::max(m, sol.term_lower_duals.lpNorm<Eigen::Infinity>());
  if (sol.term_upper_duals.size() > 0)
    m = std::max(m, sol.term_upper_duals.lpNorm<Eigen::Infinity>());
  return m;
}

}  // namespace

void ModelSelection::validate() const {
  if (use_nn()) {
    if (!lateral_data || !yaw_data || lateral_t_nn < 1 || yaw_t_nn < 1)
      throw std::invalid_argument("sqp: incomplete local-model selection");
  } else if (!lateral || !yaw) {
    throw std::invalid_argument("sqp: acceleration models missing");
  }
}

void SqpSettings::validate() const {
  if (max_iterations < 1)
    throw std::invalid_argument("sqp: max_iterations must be >= 1");
  if (!(tolerance > 0.0) || !(qp_tolerance > 0.0))
    throw std::invalid_argument("sqp: tolerances must be positive");
  if (!(armijo_c > 0.0 && armijo_c < 1.0))
    throw std::invalid_argument("sqp: armijo_c must be in (0, 1)");
  if (!(merit_penalty > 0.0) || !(control_period > 0.0))
    throw std::invalid_argument("sqp: penalty and period must be positive");
}

ocp::NlpIterate cold_start(const Vec9& measured, double s_now,
                           const Track& track, const ocp::OcpConfig& config) {
  config.validate();
  const int nodes = config.num_nodes();
  const double vx =
      std::clamp(measured(kVx), config.stage_lower(0), config.stage_upper(0));

  ocp::NlpIterate it;
  it.states = Eigen::MatrixXd::Zero(9, nodes);
  it.controls = Eigen::MatrixXd::Zero(4, nodes - 1);
  it.node_s.resize(nodes);
  double t_accum = 0.0;
  for (int j = 0; j < nodes; ++j) {
    const double s = s_now + config.node_offset(j);
    it.node_s(j) = s;
    // follow the curvature-aware speed cap so the guess already brakes for
    // corners instead of carrying the measured speed through them
    const double vj = std::min(vx, ocp::speed_limit(config, track, s));
    if (j > 0)
      t_accum += (it.node_s(j) - it.node_s(j - 1)) /
                 (0.5 * (vj + it.states(kVx, j - 1)));
    it.states(kVx, j) = vj;
    it.states(kYawRate, j) = track.curvature_at(s) * vj;
    it.states(kTime, j) = t_accum;
  }
  it.measured = measured;
  it.measured(kTime) = 0.0;
  return it;
}

ocp::NlpIterate warm_start_shift(const ocp::OcpConfig& config,
                                 const ocp::NlpIterate& prev, double s_now) {
  prev.validate(config);
  const int nodes = config.num_nodes();

  ocp::NlpIterate out;
  out.states.resize(9, nodes);
  out.controls.resize(4, nodes - 1);
  out.node_s.resize(nodes);
  out.measured = prev.measured;

  for (int j = 0; j < nodes; ++j)
    out.node_s(j) = s_now + config.node_offset(j);

  const Eigen::VectorXd ctrl_s = prev.node_s.head(nodes - 1);
  for (int j = 0; j < nodes; ++j) {
    for (int r = 0; r < 9; ++r)
      out.states(r, j) =
          interp(prev.node_s, prev.states.row(r).transpose(), out.node_s(j));
    if (j < nodes - 1)
      for (int r = 0; r < 4; ++r)
        out.controls(r, j) =
            interp(ctrl_s, prev.controls.row(r).transpose(), out.node_s(j));
  }
  // time-to-go counts from the new anchor
  out.states.row(kTime).array() -= out.states(kTime, 0);
  return out;
}

Commands rti_step(ControllerState& ctrl, const Vec9& measured, double s_now,
                  const Track& track, const ModelSelection& models,
                  const SqpSettings& settings) {
  settings.validate();
  models.validate();
  if (!measured.allFinite())
    throw std::invalid_argument("rti_step: non-finite measurement");

  const auto t0 = std::chrono::steady_clock::now();
  Diagnostics diag;
  Commands cmd = ctrl.last_commands;

  try {
    const bool regressed =
        ctrl.initialized &&
        s_now < ctrl.iterate.node_s(0) - 0.5 * track.length;
    const bool warm = ctrl.initialized && !regressed;
    if (warm)
      ctrl.iterate = warm_start_shift(ctrl.config, ctrl.iterate, s_now);
    else
      ctrl.iterate = cold_start(measured, s_now, track, ctrl.config);
    ctrl.iterate.measured = measured;
    ctrl.iterate.measured(kTime) = 0.0;
    ctrl.initialized = true;

    ocp::QpProblem qpp;
    for (int attempt = 0;; ++attempt) {
      try {
        const HorizonModels horizon =
            build_horizon(models, ctrl.iterate, ctrl.config.num_intervals());
        qpp = ocp::linearize(ctrl.config, track, horizon.models, ctrl.iterate);
        break;
      } catch (const SingularityError&) {
        // a full Newton step from the previous period can leave the shifted
        // guess outside the spatial domain's validity region; rebuild the
        // guess from the measurement before giving up
        if (!warm || attempt > 0) throw;
        ctrl.iterate = cold_start(measured, s_now, track, ctrl.config);
        ctrl.iterate.measured = measured;
        ctrl.iterate.measured(kTime) = 0.0;
      }
    }

    qp::QpSolution sol;
    bool solve_failed = false;
    try {
      sol = qp::solve(qpp, settings.qp_tolerance, settings.qp_max_iterations);
    } catch (const NumericalError&) {
      solve_failed = true;
      ctrl.initialized = false;  // restart from the measurement next period
    }
    diag.qp_iterations = sol.iterations;

    if (!solve_failed && sol.status == qp::QpSolution::Status::Optimal) {
      ctrl.iterate.states += sol.dx;
      ctrl.iterate.controls += sol.du;
      // project the bounded state rows back into their box: an aggressive
      // full step (e.g. when a corner first enters the horizon) can leave
      // the guess far outside it, which makes the next linearization and
      // its QP ill posed
      const int bounded_rows[5] = {kVx, kETheta, kGamma, kBeta, kTauV};
      for (int r = 0; r < 5; ++r) {
        const int si = bounded_rows[r];
        ctrl.iterate.states.row(si) =
            ctrl.iterate.states.row(si)
                .cwiseMax(ctrl.config.stage_lower(r))
                .cwiseMin(ctrl.config.stage_upper(r));
      }
      diag.kkt_stationarity = qp::kkt_residuals(qpp, sol).stationarity;
      // node 0 is pinned to the measurement (which echoes the previous
      // command), so the fresh command is the state after the first interval
      cmd.gamma = ctrl.iterate.states(kGamma, 1);
      cmd.beta = ctrl.iterate.states(kBeta, 1);
      cmd.tau_v = ctrl.iterate.states(kTauV, 1);
      diag.eta_first = ctrl.iterate.controls(kEta, 0);
      diag.eta_terminal =
          ctrl.iterate.controls(kEta, ctrl.config.num_intervals() - 1);
      ctrl.last_commands = cmd;
      ctrl.consecutive_failures = 0;
    } else {
      diag.degraded = true;
      ctrl.initialized = false;  // rebuild the guess from the measurement
      ++ctrl.consecutive_failures;
      if (ctrl.consecutive_failures >= ControllerState::kFailureBudget) {
        cmd = {ctrl.config.stage_lower(2), 0.0, 0.0};
        diag.safe_stop = true;
        ctrl.last_commands = cmd;
        ctrl.initialized = false;
      }
    }
  } catch (const SingularityError&) {
    cmd = {ctrl.config.stage_lower(2), 0.0, 0.0};
    diag.safe_stop = true;
    ++ctrl.consecutive_failures;
    ctrl.last_commands = cmd;
    ctrl.initialized = false;
  }

  diag.solve_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                t0)
          .count();
  diag.late = diag.solve_time_ms > 1e3 * settings.control_period;
  ctrl.diag = diag;
  return cmd;
}

SqpResult sqp_solve(const ocp::OcpConfig& config, const Track& track,
                    const ModelSelection& models,
                    const ocp::NlpIterate& initial,
                    const SqpSettings& settings) {
  settings.validate();
  models.validate();
  if (settings.mode != SqpSettings::Mode::Converged)
    throw std::invalid_argument("sqp_solve: requires converged mode");

  SqpResult res;
  res.iterate = initial;
  res.iterate.validate(config);

  // local models frozen at the initial anchors so the linearization target
  // does not switch between iterations
  const HorizonModels horizon =
      build_horizon(models, res.iterate, config.num_intervals());

  for (int it = 0; it < settings.max_iterations; ++it) {
    const ocp::QpProblem qpp =
        ocp::linearize(config, track, horizon.models, res.iterate);
    const qp::QpSolution sol =
        qp::solve(qpp, settings.qp_tolerance, settings.qp_max_iterations);
    res.iterations = it + 1;
    if (sol.status != qp::QpSolution::Status::Optimal) break;

    res.kkt_stationarity = qp::kkt_residuals(qpp, sol).stationarity;
    res.step_norm = std::max(sol.dx.cwiseAbs().maxCoeff(),
                             sol.du.cwiseAbs().maxCoeff());
    if (std::max(res.step_norm, res.kkt_stationarity) <= settings.tolerance) {
      res.converged = true;
      break;
    }

    const double penalty =
        std::max(settings.merit_penalty, 10.0 * max_dual(sol));
    const double f0 = nlp_objective(config, res.iterate);
    const double v0 = nlp_violation(config, track, horizon.models, res.iterate);
    const double merit0 = f0 + penalty * v0;

    // directional derivative of the merit along the full step
    double df = 0.0;
    for (int j = 0; j < config.num_intervals(); ++j) {
      Eigen::VectorXd z(13);
      z << sol.dx.col(j), sol.du.col(j);
      df += qpp.g[j].dot(z);
    }
    df += qpp.g_n.dot(sol.dx.col(config.num_intervals()));
    const double dd = df - penalty * v0;

    double beta = 1.0;
    ocp::NlpIterate trial = res.iterate;
    for (int bt = 0; bt < 30; ++bt) {
      trial.states = res.iterate.states + beta * sol.dx;
      trial.controls = res.iterate.controls + beta * sol.du;
      const double merit = nlp_objective(config, trial) +
                           penalty * nlp_violation(config, track,
                                                   horizon.models, trial);
      if (merit <= merit0 + settings.armijo_c * beta * dd) break;
      beta *= 0.5;
    }
    res.iterate = trial;
  }
  return res;
}

}  // namespace kartmpc::sqp
