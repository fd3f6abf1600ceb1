#include "kartmpc/ocp.hpp"

#include <fstream>
#include <sstream>

namespace kartmpc::ocp {

void OcpConfig::validate() const {
  if (n_cells < 1 || ts <= 0.0) throw std::invalid_argument("ocp: bad cell grid");
  if (grid.size() < 2 || grid.front() != 1 || grid.back() != n_cells)
    throw std::invalid_argument("ocp: grid must run from 1 to n_cells");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (grid[i] <= grid[i - 1])
      throw std::invalid_argument("ocp: grid must be strictly increasing");
  if ((stage_weights.array() < 0.0).any() || (terminal_weights.array() < 0.0).any())
    throw std::invalid_argument("ocp: weights must be non-negative");
  if ((stage_lower.array() > stage_upper.array()).any())
    throw std::invalid_argument("ocp: lower bounds exceed upper bounds");
  if (bound_reduction < 0.0)
    throw std::invalid_argument("ocp: bound reduction must be >= 0");
  if (substeps_per_cell < 1)
    throw std::invalid_argument("ocp: substeps_per_cell must be >= 1");
  if (!(a_brake_ref > 0.0))
    throw std::invalid_argument("ocp: a_brake_ref must be > 0");
}

void NlpIterate::validate(const OcpConfig& config) const {
  const int nodes = config.num_nodes();
  if (states.rows() != 9 || states.cols() != nodes)
    throw std::invalid_argument("iterate: bad state trajectory shape");
  if (controls.rows() != 4 || controls.cols() != nodes - 1)
    throw std::invalid_argument("iterate: bad control trajectory shape");
  if (node_s.size() != nodes)
    throw std::invalid_argument("iterate: bad node abscissae");
  if (!states.allFinite() || !controls.allFinite() || !node_s.allFinite() ||
      !measured.allFinite())
    throw std::invalid_argument("iterate: non-finite entries");
}

Eigen::Vector4d stage_residual(const Vec9& x, const Vec4& u) {
  (void)x;
  return {u(kGammaRate), u(kTauVRate), u(kBetaRate), u(kEta)};
}

Eigen::Vector3d terminal_residual(const Vec9& x, const OcpConfig& config) {
  return {x(kTime), x(kETheta) - config.terminal_ref_e_theta,
          x(kEY) - config.terminal_ref_e_y};
}

Eigen::Matrix<double, kStageRows, 1> stage_constraint(const Vec9& x,
                                                      const Vec4& u) {
  Eigen::Matrix<double, kStageRows, 1> r;
  r << x(kVx), x(kETheta), x(kGamma), x(kBeta), x(kTauV), u(kGammaRate),
      u(kTauVRate), u(kBetaRate), u(kEta), x(kEY) + u(kEta);
  return r;
}

Eigen::Matrix<double, kTerminalRows, 1> terminal_constraint(const Vec9& x,
                                                            const Vec4& u_last) {
  Eigen::Matrix<double, kTerminalRows, 1> r;
  r << x(kVx), x(kETheta), x(kGamma), x(kBeta), x(kTauV), x(kEY) + u_last(kEta);
  return r;
}

Eigen::Matrix<double, kStageRows, 9> stage_constraint_jac_x() {
  Eigen::Matrix<double, kStageRows, 9> c = Eigen::Matrix<double, kStageRows, 9>::Zero();
  c(0, kVx) = 1.0;
  c(1, kETheta) = 1.0;
  c(2, kGamma) = 1.0;
  c(3, kBeta) = 1.0;
  c(4, kTauV) = 1.0;
  c(9, kEY) = 1.0;
  return c;
}

Eigen::Matrix<double, kStageRows, 4> stage_constraint_jac_u() {
  Eigen::Matrix<double, kStageRows, 4> d = Eigen::Matrix<double, kStageRows, 4>::Zero();
  d(5, kGammaRate) = 1.0;
  d(6, kTauVRate) = 1.0;
  d(7, kBetaRate) = 1.0;
  d(8, kEta) = 1.0;
  d(9, kEta) = 1.0;
  return d;
}

Eigen::Matrix<double, kTerminalRows, 9> terminal_constraint_jac_x() {
  Eigen::Matrix<double, kTerminalRows, 9> c =
      Eigen::Matrix<double, kTerminalRows, 9>::Zero();
  c(0, kVx) = 1.0;
  c(1, kETheta) = 1.0;
  c(2, kGamma) = 1.0;
  c(3, kBeta) = 1.0;
  c(4, kTauV) = 1.0;
  c(5, kEY) = 1.0;
  return c;
}

Eigen::Matrix<double, kTerminalRows, 4> terminal_constraint_jac_u() {
  Eigen::Matrix<double, kTerminalRows, 4> d =
      Eigen::Matrix<double, kTerminalRows, 4>::Zero();
  d(5, kEta) = 1.0;
  return d;
}

double speed_limit(const OcpConfig& config, const Track& track, double s) {
  const double vmax = config.stage_upper(0);
  if (!(config.a_lat_max > 0.0)) return vmax;
  double lim = vmax;
  const double look = vmax * vmax / (2.0 * config.a_brake_ref);
  for (double d = 0.0; d <= look; d += config.ts) {
    const double zeta = std::abs(track.curvature_at(s + d));
    if (zeta < 1e-6) continue;
    const double vc2 = config.a_lat_max / zeta;
    const double reach2 = vc2 + 2.0 * config.a_brake_ref * d;
    if (reach2 < lim * lim) lim = std::sqrt(reach2);
  }
  return std::max(lim, config.stage_lower(0));
}

void stage_bounds(const OcpConfig& config, const Track& track, double s,
                  Eigen::Matrix<double, kStageRows, 1>& lb,
                  Eigen::Matrix<double, kStageRows, 1>& ub) {
  auto [ey_lb, ey_ub] = track.bounds_at(s);
  lb.head<9>() = config.stage_lower;
  ub.head<9>() = config.stage_upper;
  ub(0) = speed_limit(config, track, s);
  lb(9) = ey_lb + config.bound_reduction;
  ub(9) = ey_ub - config.bound_reduction;
}

void terminal_bounds(const OcpConfig& config, const Track& track, double s,
                     Eigen::Matrix<double, kTerminalRows, 1>& lb,
                     Eigen::Matrix<double, kTerminalRows, 1>& ub) {
  auto [ey_lb, ey_ub] = track.bounds_at(s);
  lb.head<5>() = config.stage_lower.head<5>();
  ub.head<5>() = config.stage_upper.head<5>();
  ub(0) = speed_limit(config, track, s);
  lb(5) = ey_lb + config.bound_reduction;
  ub(5) = ey_ub - config.bound_reduction;
}

namespace {

const AccelerationModels& models_at(const std::vector<AccelerationModels>& m,
                                    int j) {
  return m.size() == 1 ? m.front() : m[static_cast<std::size_t>(j)];
}

void check_model_count(const OcpConfig& config,
                       const std::vector<AccelerationModels>& m) {
  if (m.size() != 1 && static_cast<int>(m.size()) != config.num_intervals())
    throw std::invalid_argument("ocp: need 1 or num_intervals model pairs");
}

}  // namespace

std::vector<Vec9> transcribe(const OcpConfig& config, const Track& track,
                             const std::vector<AccelerationModels>& models,
                             const NlpIterate& iterate) {
  iterate.validate(config);
  check_model_count(config, models);
  std::vector<Vec9> res(config.num_intervals());
  for (int j = 0; j < config.num_intervals(); ++j) {
    const Vec9 next = dyn::integrate_interval(
        iterate.states.col(j), iterate.controls.col(j), iterate.node_s(j),
        iterate.node_s(j + 1), models_at(models, j), track,
        config.interval_cells(j));
    res[static_cast<std::size_t>(j)] = next - Vec9(iterate.states.col(j + 1));
  }
  return res;
}

std::vector<Vec9> transcribe(const OcpConfig& config, const Track& track,
                             const AccelerationModels& models,
                             const NlpIterate& iterate) {
  return transcribe(config, track, std::vector<AccelerationModels>{models},
                    iterate);
}

void QpProblem::validate() const {
  const int n = num_intervals();
  if (n < 1) throw std::invalid_argument("qp: no intervals");
  auto chk = [&](std::size_t sz, const char* what) {
    if (static_cast<int>(sz) != n)
      throw std::invalid_argument(std::string("qp: inconsistent ") + what);
  };
  chk(h.size(), "hessians");
  chk(g.size(), "gradients");
  chk(b.size(), "b blocks");
  chk(a_res.size(), "residuals");
  chk(c.size(), "c blocks");
  chk(d.size(), "d blocks");
  chk(c_lb.size(), "lower bounds");
  chk(c_ub.size(), "upper bounds");
  if (h_n.rows() != nx || g_n.size() != nx || dx0.size() != nx)
    throw std::invalid_argument("qp: bad terminal/embedding dimensions");
}

QpProblem linearize(const OcpConfig& config, const Track& track,
                    const AccelerationModels& models,
                    const NlpIterate& iterate) {
  return linearize(config, track, std::vector<AccelerationModels>{models},
                   iterate);
}

QpProblem linearize(const OcpConfig& config, const Track& track,
                    const std::vector<AccelerationModels>& models,
                    const NlpIterate& iterate) {
  iterate.validate(config);
  check_model_count(config, models);
  const int n = config.num_intervals();

  QpProblem qp;
  qp.nx = 9;
  qp.nu = 4;
  qp.h.resize(n);
  qp.g.resize(n);
  qp.a.resize(n);
  qp.b.resize(n);
  qp.a_res.resize(n);
  qp.c.resize(n);
  qp.d.resize(n);
  qp.c_lb.resize(n);
  qp.c_ub.resize(n);

  // stage cost: h = [u0, u2, u1, u3]; J_h selects control slots
  Eigen::Matrix<double, 4, 13> jh = Eigen::Matrix<double, 4, 13>::Zero();
  jh(0, 9 + kGammaRate) = 1.0;
  jh(1, 9 + kTauVRate) = 1.0;
  jh(2, 9 + kBetaRate) = 1.0;
  jh(3, 9 + kEta) = 1.0;
  const Eigen::Matrix<double, 13, 13> h_stage =
      jh.transpose() * config.stage_weights.asDiagonal() * jh +
      config.gn_regularization * Eigen::Matrix<double, 13, 13>::Identity();

  const auto cx = stage_constraint_jac_x();
  const auto du = stage_constraint_jac_u();

  for (int j = 0; j < n; ++j) {
    const Vec9 xj = iterate.states.col(j);
    const Vec4 uj = iterate.controls.col(j);

    qp.h[j] = h_stage;
    qp.g[j] = jh.transpose() * config.stage_weights.asDiagonal() *
              stage_residual(xj, uj);

    const dyn::IntervalSensitivity sens = dyn::sensitivities(
        xj, uj, iterate.node_s(j), iterate.node_s(j + 1), models_at(models, j),
        track, config.interval_cells(j));
    qp.a[j] = sens.a;
    qp.b[j] = sens.b;
    qp.a_res[j] = sens.x_next - Vec9(iterate.states.col(j + 1));

    qp.c[j] = cx;
    qp.d[j] = du;
    Eigen::Matrix<double, kStageRows, 1> lb, ub;
    stage_bounds(config, track, iterate.node_s(j), lb, ub);
    // if the vehicle is above the speed envelope (noise, actuator lag), a cap
    // below what max braking can reach would make the whole QP infeasible;
    // floor it at the physically reachable speed plus a small transient margin
    const double vx_meas = iterate.measured(kVx);
    const double t_j = iterate.states(kTime, j);
    ub(0) = std::max(
        ub(0), vx_meas + config.stage_lower(2) * std::max(t_j, 0.0) + 0.05);
    const auto r = stage_constraint(xj, uj);
    qp.c_lb[j] = lb - r;
    qp.c_ub[j] = ub - r;
  }

  // terminal cost
  const Vec9 xn = iterate.states.col(n);
  Eigen::Matrix<double, 3, 9> jn = Eigen::Matrix<double, 3, 9>::Zero();
  jn(0, kTime) = 1.0;
  jn(1, kETheta) = 1.0;
  jn(2, kEY) = 1.0;
  qp.h_n = jn.transpose() * config.terminal_weights.asDiagonal() * jn +
           config.gn_regularization * Mat9::Identity();
  qp.g_n = jn.transpose() * config.terminal_weights.asDiagonal() *
           terminal_residual(xn, config);

  qp.c_n = terminal_constraint_jac_x();
  qp.d_n = terminal_constraint_jac_u();
  Eigen::Matrix<double, kTerminalRows, 1> tlb, tub;
  terminal_bounds(config, track, iterate.node_s(n), tlb, tub);
  tub(0) = std::max(tub(0), iterate.measured(kVx) +
                                config.stage_lower(2) *
                                    std::max(xn(kTime), 0.0) +
                                0.05);
  const auto rn = terminal_constraint(xn, iterate.controls.col(n - 1));
  qp.cn_lb = tlb - rn;
  qp.cn_ub = tub - rn;

  qp.dx0 = iterate.measured - Vec9(iterate.states.col(0));
  return qp;
}

namespace {

template <typename Derived>
void write_row(std::ostream& os, const std::string& key,
               const Eigen::MatrixBase<Derived>& v) {
  os << key;
  char buf[40];
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof(buf), " %.17g",
                  v(i / v.cols(), i % v.cols()));
    os << buf;
  }
  os << '\n';
}

}  // namespace

OcpConfig load_ocp_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read ocp config: " + path);
  OcpConfig cfg;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    auto read_vec = [&](Eigen::Index n) {
      Eigen::VectorXd v(n);
      for (Eigen::Index i = 0; i < n; ++i)
        if (!(ss >> v(i)))
          throw std::invalid_argument("ocp config: bad values for " + key);
      return v;
    };
    if (key == "n_cells") ss >> cfg.n_cells;
    else if (key == "ts") ss >> cfg.ts;
    else if (key == "grid") {
      cfg.grid.clear();
      int v;
      while (ss >> v) cfg.grid.push_back(v);
    } else if (key == "stage_weights") cfg.stage_weights = read_vec(4);
    else if (key == "terminal_weights") cfg.terminal_weights = read_vec(3);
    else if (key == "terminal_ref")
      ss >> cfg.terminal_ref_e_theta >> cfg.terminal_ref_e_y;
    else if (key == "stage_lower") cfg.stage_lower = read_vec(9);
    else if (key == "stage_upper") cfg.stage_upper = read_vec(9);
    else if (key == "bound_reduction") ss >> cfg.bound_reduction;
    else if (key == "gn_regularization") ss >> cfg.gn_regularization;
    else if (key == "substeps_per_cell") ss >> cfg.substeps_per_cell;
    else if (key == "a_lat_max") ss >> cfg.a_lat_max;
    else if (key == "a_brake_ref") ss >> cfg.a_brake_ref;
    else throw std::invalid_argument("ocp config: unknown key '" + key + "'");
    if (ss.fail() && key != "grid")
      throw std::invalid_argument("ocp config: bad values for " + key);
  }
  cfg.validate();
  return cfg;
}

void save_ocp_config(const std::string& path, const OcpConfig& cfg) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write ocp config: " + path);
  os << "n_cells " << cfg.n_cells << "\nts " << cfg.ts << "\ngrid";
  for (int g : cfg.grid) os << ' ' << g;
  os << '\n';
  write_row(os, "stage_weights", cfg.stage_weights.transpose());
  write_row(os, "terminal_weights", cfg.terminal_weights.transpose());
  os << "terminal_ref " << cfg.terminal_ref_e_theta << ' '
     << cfg.terminal_ref_e_y << '\n';
  write_row(os, "stage_lower", cfg.stage_lower.transpose());
  write_row(os, "stage_upper", cfg.stage_upper.transpose());
  os << "bound_reduction " << cfg.bound_reduction << "\ngn_regularization "
     << cfg.gn_regularization << "\nsubsteps_per_cell " << cfg.substeps_per_cell
     << '\n';
}

}  // namespace kartmpc::ocp
