#include "kartmpc/runlog.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace kartmpc {
namespace {

constexpr const char* kHeader =
    "t,x,y,psi,vx,vy,yaw_rate,gamma_cmd,beta_cmd,tau_v_cmd,"
    "gamma_act,beta_act,tau_v_act,vy_dot,yaw_acc,s,e_y,e_theta,"
    "solve_time_ms,kkt_stationarity,qp_iters,degraded,eta,"
    "has_pred,pred_vy,pred_yaw_rate";

}  // namespace

void RunLog::validate() const {
  if (samples.empty()) return;
  const double dt = 1.0 / meta.sample_rate_hz;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    const double gap = samples[i].t - samples[i - 1].t;
    if (gap <= 0.0) throw std::invalid_argument("runlog: non-increasing time");
    if (std::abs(gap - dt) > 1e-9)
      throw std::invalid_argument("runlog: gap in resampled series");
  }
}

double RunLog::duration() const {
  return samples.empty() ? 0.0 : samples.back().t - samples.front().t;
}

void save_runlog(const std::string& path, const RunLog& log) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("save_runlog: cannot open " + path);
  std::fprintf(f, "%s\n", kHeader);
  for (const RunSample& r : log.samples) {
    std::fprintf(
        f,
        "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
        "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
        "%.17g,%.17g,%d,%d,%.17g,%d,%.17g,%.17g\n",
        r.t, r.x, r.y, r.psi, r.vx, r.vy, r.yaw_rate, r.gamma_cmd, r.beta_cmd,
        r.tau_v_cmd, r.gamma_act, r.beta_act, r.tau_v_act, r.vy_dot, r.yaw_acc,
        r.s, r.e_y, r.e_theta, r.solve_time_ms, r.kkt_stationarity, r.qp_iters,
        r.degraded, r.eta, r.has_pred, r.pred_vy, r.pred_yaw_rate);
  }
  std::fclose(f);

  nlohmann::json meta;
  meta["seed"] = log.meta.seed;
  meta["config_hash"] = log.meta.config_hash;
  meta["track_id"] = log.meta.track_id;
  meta["sample_rate_hz"] = log.meta.sample_rate_hz;
  meta["termination"] = log.meta.termination;
  meta["lap_times"] = log.meta.lap_times;
  std::ofstream ms(path + ".meta.json");
  if (!ms) throw std::runtime_error("save_runlog: cannot open sidecar");
  ms << meta.dump(2) << '\n';
}

RunLog load_runlog(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_runlog: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != kHeader)
    throw std::runtime_error("load_runlog: bad header in " + path);

  RunLog log;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    RunSample r;
    const int n = std::sscanf(
        line.c_str(),
        "%lg,%lg,%lg,%lg,%lg,%lg,%lg,%lg,%lg,%lg,%lg,%lg,%lg,%lg,%lg,%lg,%lg,"
        "%lg,%lg,%lg,%d,%d,%lg,%d,%lg,%lg",
        &r.t, &r.x, &r.y, &r.psi, &r.vx, &r.vy, &r.yaw_rate, &r.gamma_cmd,
        &r.beta_cmd, &r.tau_v_cmd, &r.gamma_act, &r.beta_act, &r.tau_v_act,
        &r.vy_dot, &r.yaw_acc, &r.s, &r.e_y, &r.e_theta, &r.solve_time_ms,
        &r.kkt_stationarity, &r.qp_iters, &r.degraded, &r.eta, &r.has_pred,
        &r.pred_vy, &r.pred_yaw_rate);
    if (n != 26) throw std::runtime_error("load_runlog: malformed row");
    log.samples.push_back(r);
  }

  std::ifstream ms(path + ".meta.json");
  if (ms) {
    nlohmann::json meta = nlohmann::json::parse(ms);
    log.meta.seed = meta.value("seed", std::uint64_t{0});
    log.meta.config_hash = meta.value("config_hash", std::string{});
    log.meta.track_id = meta.value("track_id", std::string{});
    log.meta.sample_rate_hz = meta.value("sample_rate_hz", 100.0);
    log.meta.termination = meta.value("termination", std::string{"completed"});
    log.meta.lap_times = meta.value("lap_times", std::vector<double>{});
  }
  return log;
}

void save_runlog_long(const std::string& path, const RunLog& log,
                      const std::string& run_id) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("save_runlog_long: cannot open " + path);
  std::fprintf(f, "variable,t,value,run_id\n");
  const std::pair<const char*, double RunSample::*> cols[] = {
      {"vx", &RunSample::vx},         {"vy", &RunSample::vy},
      {"yaw_rate", &RunSample::yaw_rate}, {"s", &RunSample::s},
      {"e_y", &RunSample::e_y},       {"e_theta", &RunSample::e_theta},
      {"gamma_cmd", &RunSample::gamma_cmd}, {"beta_cmd", &RunSample::beta_cmd},
      {"tau_v_cmd", &RunSample::tau_v_cmd}, {"eta", &RunSample::eta}};
  for (const RunSample& r : log.samples)
    for (const auto& [name, member] : cols)
      std::fprintf(f, "%s,%.17g,%.17g,%s\n", name, r.t, r.*member,
                   run_id.c_str());
  std::fclose(f);
}

}  // namespace kartmpc
