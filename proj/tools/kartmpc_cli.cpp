// Single-binary workflow driver: generate-track, record, train, reduce,
// simulate, evaluate. Exit codes: 0 success, 1 runtime failure (diagnostic
// file written), 2 usage/parse error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "kartmpc/accel_model.hpp"
#include "kartmpc/config.hpp"
#include "kartmpc/gp_io.hpp"
#include "kartmpc/pipeline.hpp"
#include "kartmpc/simulate.hpp"
#include "kartmpc/track.hpp"

namespace fs = std::filesystem;
using namespace kartmpc;

namespace {

struct Environment {
  Track track;
  PlantParams plant;
  ocp::OcpConfig ocp;
};

Environment load_environment(const RunConfig& rc) {
  Environment env;
  env.track = rc.track_path.empty()
                  ? make_synthetic_track(default_track_spec())
                  : load_track(rc.track_path);
  if (!rc.plant_path.empty()) env.plant = load_plant_params(rc.plant_path);
  if (!rc.ocp_path.empty()) env.ocp = ocp::load_ocp_config(rc.ocp_path);
  return env;
}

void write_sidecar(const fs::path& path, const RunConfig& rc,
                   const std::string& command) {
  nlohmann::json j;
  j["command"] = command;
  j["seed"] = rc.seed;
  j["config_hash"] = config_hash(rc);
  std::ofstream os(path);
  os << j.dump(2) << '\n';
}

TrackSpec parse_track_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read track spec: " + path);
  TrackSpec spec;
  spec.segments.clear();
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string kind;
    ss >> kind;
    if (kind == "straight") {
      double len;
      ss >> len;
      spec.segments.push_back(TrackSegment::straight(len));
    } else if (kind == "arc") {
      double radius, angle;
      ss >> radius >> angle;
      spec.segments.push_back(TrackSegment::arc(radius, angle));
    } else if (kind == "width") {
      ss >> spec.w_left >> spec.w_right;
    } else if (kind == "resample") {
      ss >> spec.resample_ds;
    } else {
      throw std::invalid_argument("track spec: unknown directive '" + kind + "'");
    }
    if (ss.fail()) throw std::invalid_argument("track spec: bad line: " + line);
  }
  return spec;
}

sim::SimConfig make_sim_config(const RunConfig& rc, const std::string& track_id) {
  sim::SimConfig sc;
  sc.laps = rc.laps;
  sc.seed = rc.seed;
  sc.initial_speed = rc.initial_speed;
  sc.config_hash = config_hash(rc);
  sc.track_id = track_id;
  sc.noise.enabled = rc.noise_enabled;
  sc.noise.seed = rc.seed;
  return sc;
}

std::string log_stem(const std::string& path) {
  return fs::path(path).stem().string();
}

// Keeps the loaded models and whatever the selection points at alive.
struct BlackboxModels {
  gp::ModelFile lateral;
  gp::ModelFile yaw;
  std::shared_ptr<GpAccelModel> lateral_direct, yaw_direct;
  sqp::ModelSelection selection;
};

BlackboxModels load_blackbox(const std::string& prefix, const RunConfig& rc) {
  BlackboxModels bb;
  bb.lateral = gp::load_model(prefix + ".lateral.gp");
  bb.yaw = gp::load_model(prefix + ".yaw.gp");
  if (bb.lateral.sod && bb.yaw.sod) {
    bb.selection.lateral_sod = &*bb.lateral.sod;
    bb.selection.lateral_data = &bb.lateral.model.dataset;
    bb.selection.lateral_t_nn = rc.t_nn_lateral;
    bb.selection.yaw_sod = &*bb.yaw.sod;
    bb.selection.yaw_data = &bb.yaw.model.dataset;
    bb.selection.yaw_t_nn = rc.t_nn_yaw;
  } else {
    bb.lateral_direct = std::make_shared<GpAccelModel>(
        std::make_shared<gp::GpModel>(bb.lateral.model));
    bb.yaw_direct = std::make_shared<GpAccelModel>(
        std::make_shared<gp::GpModel>(bb.yaw.model));
    bb.selection.lateral = bb.lateral_direct.get();
    bb.selection.yaw = bb.yaw_direct.get();
  }
  return bb;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"learning-based MPC toolkit for a simulated go-kart"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".", controller, spec_path, log_path;
  std::string models_prefix;
  std::vector<std::string> eval_logs;
  std::uint64_t seed = 0;
  int laps = 0;
  double threshold = 1.0;
  std::string driver = "nominal";
  bool with_noise = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "random seed");
    cmd->add_option("--config", config_path, "run configuration file");
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--laps", laps, "lap count");
    cmd->add_option("--controller", controller, "nominal|blackbox");
  };

  CLI::App* c_track = app.add_subcommand("generate-track", "write a track file");
  add_common(c_track);
  c_track->add_option("--spec", spec_path, "segment-list spec file");

  CLI::App* c_record = app.add_subcommand("record", "record a driven run");
  add_common(c_record);
  c_record->add_option("--driver", driver, "nominal|scripted");
  c_record->add_flag("--noise", with_noise, "measurement noise");

  CLI::App* c_train = app.add_subcommand("train", "train GP models from a log");
  add_common(c_train);
  c_train->add_option("--log", log_path, "run log CSV")->required();

  CLI::App* c_reduce = app.add_subcommand("reduce", "SoD-reduce trained models");
  add_common(c_reduce);
  c_reduce->add_option("--models", models_prefix, "model file prefix")->required();
  c_reduce->add_option("--threshold", threshold, "variance threshold factor");

  CLI::App* c_sim = app.add_subcommand("simulate", "closed-loop simulation");
  add_common(c_sim);
  c_sim->add_option("--models", models_prefix, "model file prefix (blackbox)");
  c_sim->add_flag("--noise", with_noise, "measurement noise");

  CLI::App* c_eval = app.add_subcommand("evaluate", "metrics from logs");
  add_common(c_eval);
  c_eval->add_option("--log", eval_logs, "run log CSV (repeatable)")->required();
  c_eval->add_option("--models", models_prefix, "model file prefix");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    RunConfig rc;
    if (!config_path.empty()) rc = load_run_config(config_path);
    auto given = [](CLI::App* sub, const std::string& name) {
      const CLI::Option* o = sub->get_option_no_throw(name);
      return o != nullptr && o->count() > 0;
    };
    for (CLI::App* sub : app.get_subcommands()) {  // flags override file values
      if (given(sub, "--seed")) rc.seed = seed;
      if (given(sub, "--laps")) rc.laps = laps;
      if (given(sub, "--controller")) rc.controller = controller;
      if (given(sub, "--out")) rc.out_dir = out_dir;
      if (given(sub, "--models")) rc.models_prefix = models_prefix;
      if (given(sub, "--noise")) rc.noise_enabled = with_noise;
    }
    fs::create_directories(rc.out_dir);
    const fs::path out(rc.out_dir);

    if (*c_track) {
      const TrackSpec spec =
          spec_path.empty() ? default_track_spec() : parse_track_spec(spec_path);
      const Track track = make_synthetic_track(spec);
      save_track((out / "track.txt").string(), track);
      write_sidecar(out / "track.txt.meta.json", rc, "generate-track");
      std::cout << "track length " << track.length << " m, "
                << track.samples.size() << " samples\n";
    } else if (*c_record) {
      const Environment env = load_environment(rc);
      if (rc.laps <= 0) rc.laps = 10;
      sim::SimConfig sc = make_sim_config(rc, "default");
      const pipe::DriverKind kind = driver == "scripted"
                                        ? pipe::DriverKind::ScriptedExcitation
                                        : pipe::DriverKind::NominalController;
      if (driver != "scripted" && driver != "nominal")
        throw std::invalid_argument("record: driver must be nominal|scripted");
      const RunLog log = pipe::record_run(kind, env.plant, env.track, env.ocp, sc);
      save_runlog((out / "record.csv").string(), log);
      write_sidecar(out / "record.meta.json", rc, "record");
      std::cout << "recorded " << log.samples.size() << " samples, "
                << log.meta.lap_times.size() << " laps, termination "
                << log.meta.termination << "\n";
    } else if (*c_train) {
      const RunLog log = load_runlog(log_path);
      pipe::AssembleOptions opts;
      opts.smooth = rc.noise_enabled;
      const pipe::DatasetPair data = pipe::assemble_dataset(log, opts);
      gp::TrainConfig tc = rc.train;
      tc.seed = rc.seed;
      const gp::TrainResult lat = gp::train_hyperparams(data.lateral, tc);
      const gp::TrainResult yaw = gp::train_hyperparams(data.yaw, tc);
      gp::save_model((out / "models.lateral.gp").string(),
                     {gp::fit(lat.params, data.lateral), std::nullopt});
      gp::save_model((out / "models.yaw.gp").string(),
                     {gp::fit(yaw.params, data.yaw), std::nullopt});
      nlohmann::json j;
      j["lateral_diverged"] = lat.diverged;
      j["yaw_diverged"] = yaw.diverged;
      j["lateral_epochs"] = lat.epochs_run;
      j["yaw_epochs"] = yaw.epochs_run;
      j["points"] = data.lateral.size();
      j["config_hash"] = config_hash(rc);
      std::ofstream(out / "train.meta.json") << j.dump(2) << '\n';
      std::cout << "trained on " << data.lateral.size() << " points\n";
    } else if (*c_reduce) {
      gp::ModelFile lat = gp::load_model(rc.models_prefix + ".lateral.gp");
      gp::ModelFile yaw = gp::load_model(rc.models_prefix + ".yaw.gp");
      lat.sod = gp::sod_reduce(lat.model.params, lat.model.dataset, threshold);
      yaw.sod = gp::sod_reduce(yaw.model.params, yaw.model.dataset, threshold);
      gp::save_model((out / "models.lateral.gp").string(), lat);
      gp::save_model((out / "models.yaw.gp").string(), yaw);
      write_sidecar(out / "reduce.meta.json", rc, "reduce");
      std::cout << "SoD sizes: lateral " << lat.sod->indices.size() << ", yaw "
                << yaw.sod->indices.size() << "\n";
    } else if (*c_sim) {
      const Environment env = load_environment(rc);
      if (rc.laps <= 0) rc.laps = 3;
      sim::SimConfig sc = make_sim_config(rc, "default");
      sqp::SqpSettings settings;
      settings.control_period = 1.0 / sc.control_rate_hz;

      RunLog log;
      if (rc.controller == "blackbox") {
        const BlackboxModels bb = load_blackbox(rc.models_prefix, rc);
        sim::MpcController ctrl(env.ocp, env.track, bb.selection, settings);
        log = sim::closed_loop_simulate(ctrl, env.plant, env.track, sc);
      } else {
        const NominalAccelModel lat(env.plant,
                                    NominalAccelModel::Channel::Lateral);
        const NominalAccelModel yaw(env.plant, NominalAccelModel::Channel::Yaw);
        sqp::ModelSelection sel;
        sel.lateral = &lat;
        sel.yaw = &yaw;
        sim::MpcController ctrl(env.ocp, env.track, sel, settings);
        log = sim::closed_loop_simulate(ctrl, env.plant, env.track, sc);
      }
      save_runlog((out / "simulate.csv").string(), log);
      save_runlog_long((out / "simulate_long.csv").string(), log,
                       rc.controller);
      write_sidecar(out / "simulate.meta.json", rc, "simulate");
      std::cout << "termination " << log.meta.termination << ", laps";
      for (double lt : log.meta.lap_times) std::cout << ' ' << lt;
      std::cout << "\n";
    } else if (*c_eval) {
      const Environment env = load_environment(rc);
      pipe::EvalReport report;
      for (const std::string& path : eval_logs) {
        const RunLog log = load_runlog(path);
        const std::string name = log_stem(path);
        for (std::size_t i = 0; i < log.meta.lap_times.size(); ++i)
          report.add("lap_time_" + std::to_string(i + 1), name,
                     log.meta.lap_times[i]);
        const pipe::EvalReport one = pipe::one_step_prediction_report(log, name);
        report.entries.insert(report.entries.end(), one.entries.begin(),
                              one.entries.end());
        const pipe::BoundStats bs =
            pipe::bound_stats(log, env.track, env.ocp.bound_reduction);
        report.add("soft_exceed", name, bs.soft_exceed);
        report.add("hard_cross", name, bs.hard_cross);
        report.add("max_eta", name, bs.max_eta);
        report.add("max_abs_e_y", name, bs.max_abs_e_y);
      }
      if (!rc.models_prefix.empty()) {
        const BlackboxModels bb = load_blackbox(rc.models_prefix, rc);
        pipe::TrainedModels tm;
        tm.lateral = bb.lateral.model;
        tm.yaw = bb.yaw.model;
        if (bb.lateral.sod) tm.lateral_sod = *bb.lateral.sod;
        if (bb.yaw.sod) tm.yaw_sod = *bb.yaw.sod;
        const RunLog first = load_runlog(eval_logs.front());
        const pipe::DatasetPair data =
            pipe::assemble_dataset(first, pipe::AssembleOptions{});
        const NominalAccelModel nlat(env.plant,
                                     NominalAccelModel::Channel::Lateral);
        const NominalAccelModel nyaw(env.plant, NominalAccelModel::Channel::Yaw);
        const pipe::TrainedModels* tmp = bb.lateral.sod ? &tm : nullptr;
        pipe::EvalReport rmse = pipe::rmse_report(
            tmp, &nlat, &nyaw, data, rc.t_nn_lateral, rc.t_nn_yaw);
        if (!bb.lateral.sod) {
          rmse.add("rmse_vy_dot", "gp-full", pipe::rmse_gp(tm.lateral, data.lateral));
          rmse.add("rmse_yaw_acc", "gp-full", pipe::rmse_gp(tm.yaw, data.yaw));
        }
        report.entries.insert(report.entries.end(), rmse.entries.begin(),
                              rmse.entries.end());
      }
      pipe::save_eval_report((out / "report.csv").string(),
                             (out / "report.txt").string(), report);
      write_sidecar(out / "report.meta.json", rc, "evaluate");
      std::cout << "wrote " << report.entries.size() << " metrics\n";
    }
  } catch (const std::exception& e) {
    const fs::path diag = fs::path(out_dir) / "error.txt";
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    std::ofstream(diag) << e.what() << '\n';
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
