#include "kartmpc/simulate.hpp"

#include <cmath>

#include "kartmpc/dynamics.hpp"
#include "kartmpc/errors.hpp"
#include "kartmpc/rng.hpp"

namespace kartmpc::sim {

void SimConfig::validate() const {
  if (!(plant_dt > 0.0) || plant_dt > 0.02)
    throw std::invalid_argument("sim: plant_dt must be in (0, 0.02]");
  if (!(control_rate_hz > 0.0) || !(log_rate_hz > 0.0))
    throw std::invalid_argument("sim: rates must be positive");
  const double per_ctrl = 1.0 / (control_rate_hz * plant_dt);
  const double per_log = 1.0 / (log_rate_hz * plant_dt);
  if (std::abs(per_ctrl - std::round(per_ctrl)) > 1e-9 ||
      std::abs(per_log - std::round(per_log)) > 1e-9)
    throw std::invalid_argument("sim: rates must divide the plant rate");
  if (laps < 0 || max_time < 0.0)
    throw std::invalid_argument("sim: negative duration");
  if (!(initial_speed > 0.1))
    throw std::invalid_argument("sim: initial speed too low");
}

MpcController::MpcController(ocp::OcpConfig config, const Track& track,
                             sqp::ModelSelection models,
                             sqp::SqpSettings settings)
    : track_(track), models_(models), settings_(settings) {
  config.validate();
  models_.validate();
  settings_.validate();
  ctrl_.config = std::move(config);
}

PlantCommands MpcController::step(const Vec9& measured, double s_now,
                                  double t) {
  (void)t;
  const sqp::Commands cmd =
      sqp::rti_step(ctrl_, measured, s_now, track_, models_, settings_);

  have_pred_ = false;
  if (!ctrl_.diag.degraded && !ctrl_.diag.safe_stop) {
    const Vec9 x0 = ctrl_.iterate.states.col(0);
    const Vec4 u0 = ctrl_.iterate.controls.col(0);
    const double zeta = track_.curvature_at(s_now);

    AccelerationModels m;
    std::shared_ptr<GpAccelModel> keep_lat, keep_yaw;
    if (models_.use_nn()) {
      const Vec6 anchor =
          gp_input_from_state(VehicleState::from_vector(x0));
      const auto il = gp::nn_select(*models_.lateral_sod, *models_.lateral_data,
                                    anchor, models_.lateral_t_nn);
      const auto iy = gp::nn_select(*models_.yaw_sod, *models_.yaw_data, anchor,
                                    models_.yaw_t_nn);
      keep_lat = std::make_shared<GpAccelModel>(
          std::make_shared<gp::LocalModel>(gp::build_local_model(
              *models_.lateral_data, models_.lateral_sod->params, il)));
      keep_yaw = std::make_shared<GpAccelModel>(
          std::make_shared<gp::LocalModel>(gp::build_local_model(
              *models_.yaw_data, models_.yaw_sod->params, iy)));
      m = {keep_lat.get(), keep_yaw.get()};
    } else {
      m = {models_.lateral, models_.yaw};
    }

    auto f = [&](const Vec9& xs, const Vec4& us) {
      return dyn::time_dynamics(VehicleState::from_vector(xs),
                                ControlInput::from_vector(us), zeta, m);
    };
    try {
      const Vec9 xn = dyn::rk4_step(f, x0, u0, settings_.control_period);
      pred_vy_ = xn(kVy);
      pred_yaw_rate_ = xn(kYawRate);
      have_pred_ = true;
    } catch (const SingularityError&) {
    }
  }
  return {cmd.gamma, cmd.beta, cmd.tau_v};
}

bool MpcController::predict(double& vy_next, double& yaw_rate_next) const {
  if (!have_pred_) return false;
  vy_next = pred_vy_;
  yaw_rate_next = pred_yaw_rate_;
  return true;
}

ScriptedExcitation::ScriptedExcitation(const Track& track, double base_speed,
                                       double speed_amplitude)
    : track_(track), base_speed_(base_speed), speed_amplitude_(speed_amplitude) {}

PlantCommands ScriptedExcitation::step(const Vec9& measured, double s_now,
                                       double t) {
  const double vx = measured(kVx);
  const double e_y = measured(kEY);
  const double e_theta = measured(kETheta);

  // slow speed sweep plus steering/torque sinusoids near the force peak
  const double target =
      base_speed_ + speed_amplitude_ * std::sin(2.0 * M_PI * t / 25.0);
  PlantCommands cmd;
  cmd.gamma = std::clamp(0.8 * (target - vx), -3.0, 1.8);

  const double wheelbase = 1.2;
  const double zeta = track_.curvature_at(s_now + 1.0);  // small preview
  double beta = std::atan(wheelbase * zeta) - 0.35 * e_y - 0.9 * e_theta +
                0.10 * std::sin(2.0 * M_PI * 0.45 * t);
  cmd.beta = std::clamp(beta, -0.8, 0.8);
  cmd.tau_v = 0.8 * std::sin(2.0 * M_PI * 0.3 * t + 0.5);
  return cmd;
}

RunLog closed_loop_simulate(ControllerBase& controller,
                            const PlantParams& plant_params, const Track& track,
                            const SimConfig& config) {
  config.validate();
  plant_params.validate();

  const double dt = config.plant_dt;
  const int per_ctrl =
      static_cast<int>(std::lround(1.0 / (config.control_rate_hz * dt)));
  const int per_log =
      static_cast<int>(std::lround(1.0 / (config.log_rate_hz * dt)));

  RunLog log;
  log.meta.seed = config.seed;
  log.meta.config_hash = config.config_hash;
  log.meta.track_id = config.track_id;
  log.meta.sample_rate_hz = config.log_rate_hz;

  PlantState ps;
  {
    FrenetPose start{track.wrap_s(config.initial_s), 0.0, 0.0};
    frenet_to_global(track, start, ps.x, ps.y, ps.psi);
    ps.vx = config.initial_speed;
  }

  GaussianRng rng(config.noise.seed);
  const NoiseConfig& nz = config.noise;
  auto noisy = [&](double v, double std_dev) {
    return nz.enabled ? v + std_dev * rng.gaussian() : v;
  };

  double t = 0.0;
  double s_un = config.initial_s;
  double prev_s_wrap = track.wrap_s(config.initial_s);
  double next_lap_s = config.initial_s + track.length;
  double last_cross_t = 0.0;
  int laps_done = 0;

  PlantCommands cmd;
  sqp::Diagnostics diag;
  int has_pred = 0;
  double pred_vy = 0.0, pred_yaw = 0.0;

  log.meta.termination = "time-limit";
  try {
    for (long k = 0;; ++k) {
      if (t >= config.max_time) break;
      if (config.laps > 0 && laps_done >= config.laps) {
        log.meta.termination = "completed";
        break;
      }

      const FrenetPose fp = global_to_frenet(ps, track);
      const double delta =
          track.wrap_s(fp.s - prev_s_wrap + 0.5 * track.length) -
          0.5 * track.length;
      prev_s_wrap = fp.s;
      const double s_prev_un = s_un;
      s_un += delta;
      while (s_un >= next_lap_s && delta > 0.0) {
        const double frac = (next_lap_s - s_prev_un) / delta;
        const double t_cross = (t - dt) + frac * dt;
        log.meta.lap_times.push_back(t_cross - last_cross_t);
        last_cross_t = t_cross;
        next_lap_s += track.length;
        ++laps_done;
      }
      if (config.laps > 0 && laps_done >= config.laps) {
        log.meta.termination = "completed";
        break;
      }

      if (k % per_ctrl == 0) {
        Vec9 measured;
        measured << noisy(ps.vx, nz.vel_std), noisy(ps.vy, nz.vel_std),
            noisy(ps.yaw_rate, nz.yaw_rate_std),
            noisy(fp.e_theta, nz.e_theta_std), noisy(fp.e_y, nz.e_y_std),
            cmd.gamma, cmd.beta, cmd.tau_v, 0.0;
        cmd = controller.step(measured, s_un, t);
        diag = controller.last_diagnostics();
        has_pred = controller.predict(pred_vy, pred_yaw) ? 1 : 0;
        if (diag.safe_stop) {
          log.meta.termination = "controller-safe-stop";
          break;
        }
      }

      if (k % per_log == 0) {
        RunSample r;
        r.t = t;
        r.x = ps.x;
        r.y = ps.y;
        r.psi = ps.psi;
        r.vx = ps.vx;
        r.vy = ps.vy;
        r.yaw_rate = ps.yaw_rate;
        r.gamma_cmd = cmd.gamma;
        r.beta_cmd = cmd.beta;
        r.tau_v_cmd = cmd.tau_v;
        r.gamma_act = ps.gamma_act;
        r.beta_act = ps.beta_act;
        r.tau_v_act = ps.tau_v_act;
        plant_accelerations(ps, plant_params, r.vy_dot, r.yaw_acc);
        r.vy_dot = noisy(r.vy_dot, nz.acc_std);
        r.yaw_acc = noisy(r.yaw_acc, nz.acc_std);
        r.s = fp.s;
        r.e_y = fp.e_y;
        r.e_theta = fp.e_theta;
        r.solve_time_ms = diag.solve_time_ms;
        r.kkt_stationarity = diag.kkt_stationarity;
        r.qp_iters = diag.qp_iterations;
        r.degraded = diag.degraded ? 1 : 0;
        r.eta = diag.eta_first;
        r.has_pred = (k % per_ctrl == 0) ? has_pred : 0;
        r.pred_vy = pred_vy;
        r.pred_yaw_rate = pred_yaw;
        log.samples.push_back(r);
      }

      ps = plant_step(ps, cmd, plant_params, dt);
      t += dt;
    }
  } catch (const PlantStallError&) {
    log.meta.termination = "plant-stall";
  } catch (const LocalizationError&) {
    log.meta.termination = "localization-error";
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "DEBUG numerical-error: %s at t=%.3f samples=%zu\n", e.what(), t, log.samples.size());
    log.meta.termination = "numerical-error";
  }
  return log;
}

}  // namespace kartmpc::sim
