#pragma once

#include <vector>

#include "kartmpc/dynamics.hpp"
#include "kartmpc/track.hpp"
#include "kartmpc/vehicle.hpp"

namespace kartmpc::ocp {

// Horizon, grid and tuning. Defaults reproduce the shipped controller:
// 80 cells of 0.3 m (24 m lookahead) with 33 shooting nodes packed densely at
// the start of the horizon.
struct OcpConfig {
  int n_cells = 80;
  double ts = 0.3;  // m
  std::vector<int> grid = {1,  2,  3,  4,  5,  6,  8,  10, 12, 14, 16,
                           18, 20, 23, 26, 29, 32, 35, 38, 41, 44, 47,
                           50, 53, 56, 59, 62, 65, 68, 71, 74, 77, 80};

  // stage cost weights over [gamma_rate, tau_v_rate, beta_rate, eta]
  Eigen::Vector4d stage_weights{2e-3, 5e-2, 1e-2, 5e1};
  // terminal cost weights over [t, e_theta - ref, e_y - ref]
  Eigen::Vector3d terminal_weights{1e-1, 1e3, 1e2};
  double terminal_ref_e_theta = 0.0;  // centerline reference
  double terminal_ref_e_y = 0.0;

  // fixed bounds for the first nine stage rows
  // [vx, e_theta, gamma, beta, tau_v, gamma_rate, tau_v_rate, beta_rate, eta]
  Eigen::Matrix<double, 9, 1> stage_lower{
      (Eigen::Matrix<double, 9, 1>() << 2.5, -M_PI / 2, -4.2, -M_PI / 2, -1.7,
       -1e3, -1e2, -1e1, -5.0).finished()};
  Eigen::Matrix<double, 9, 1> stage_upper{
      (Eigen::Matrix<double, 9, 1>() << 15.0, M_PI / 2, 2.0, M_PI / 2, 1.7,
       1e3, 1e2, 1e1, 5.0).finished()};

  double bound_reduction = 0.5;     // m taken off the raw track half-widths
  // curvature-aware speed cap: at every node vx is additionally bounded by
  // the speed from which the slowest upcoming corner is still reachable
  // with a_brake_ref of braking, where corner speed is sqrt(a_lat_max/|zeta|).
  // The horizon alone is too short to see a fast corner early enough.
  double a_lat_max = 6.5;    // m/s^2 lateral budget; <= 0 disables the cap
  double a_brake_ref = 3.5;  // m/s^2 braking assumed for the envelope
  double gn_regularization = 1e-8;  // Levenberg term on the GN Hessian
  // RK4 steps per Ts cell; the tire stiffness makes the spatial dynamics
  // stiff enough at low speed that one step per 0.3 m cell is unstable
  int substeps_per_cell = 6;

  void validate() const;
  int num_nodes() const { return static_cast<int>(grid.size()); }
  int num_intervals() const { return num_nodes() - 1; }
  // node abscissa offset from the current position, metres
  double node_offset(int j) const { return (grid[j] - 1) * ts; }
  int interval_cells(int j) const {
    return (grid[j + 1] - grid[j]) * substeps_per_cell;
  }
  double horizon_length() const { return n_cells * ts; }
};

// Current multiple-shooting guess. States are columns (9 x nodes), controls
// are columns (4 x intervals), node_s holds unwrapped abscissae.
struct NlpIterate {
  Eigen::MatrixXd states;
  Eigen::MatrixXd controls;
  Eigen::VectorXd node_s;
  Vec9 measured = Vec9::Zero();

  void validate(const OcpConfig& config) const;
};

inline constexpr int kStageRows = 10;
inline constexpr int kTerminalRows = 6;

// h_j = [gamma_rate, tau_v_rate, beta_rate, eta]
Eigen::Vector4d stage_residual(const Vec9& x, const Vec4& u);
// h_N = [t, e_theta - ref, e_y - ref]
Eigen::Vector3d terminal_residual(const Vec9& x, const OcpConfig& config);

// r_j = [vx, e_theta, gamma, beta, tau_v, gamma_rate, tau_v_rate, beta_rate,
//        eta, e_y + eta]
Eigen::Matrix<double, kStageRows, 1> stage_constraint(const Vec9& x,
                                                      const Vec4& u);
// r_N = [vx, e_theta, gamma, beta, tau_v, e_y + eta], eta taken from the last
// interval's control
Eigen::Matrix<double, kTerminalRows, 1> terminal_constraint(const Vec9& x,
                                                            const Vec4& u_last);

// constant constraint Jacobians (all rows are linear)
Eigen::Matrix<double, kStageRows, 9> stage_constraint_jac_x();
Eigen::Matrix<double, kStageRows, 4> stage_constraint_jac_u();
Eigen::Matrix<double, kTerminalRows, 9> terminal_constraint_jac_x();
Eigen::Matrix<double, kTerminalRows, 4> terminal_constraint_jac_u();

// Bounds on the stage rows at abscissa s: fixed entries plus the reduced
// lateral corridor from the track.
// curvature-aware vx cap at abscissa s (see OcpConfig::a_lat_max)
double speed_limit(const OcpConfig& config, const Track& track, double s);

void stage_bounds(const OcpConfig& config, const Track& track, double s,
                  Eigen::Matrix<double, kStageRows, 1>& lb,
                  Eigen::Matrix<double, kStageRows, 1>& ub);
void terminal_bounds(const OcpConfig& config, const Track& track, double s,
                     Eigen::Matrix<double, kTerminalRows, 1>& lb,
                     Eigen::Matrix<double, kTerminalRows, 1>& ub);

// Continuity residuals a_j = phi(x_j, u_j) - x_{j+1} per interval. The
// vector overloads take either one model pair (broadcast) or one per
// interval, which is how per-node local models enter the horizon.
std::vector<Vec9> transcribe(const OcpConfig& config, const Track& track,
                             const AccelerationModels& models,
                             const NlpIterate& iterate);
std::vector<Vec9> transcribe(const OcpConfig& config, const Track& track,
                             const std::vector<AccelerationModels>& models,
                             const NlpIterate& iterate);

// Structured QP with one block per shooting interval. Dimension-generic so
// the solver can be exercised on small synthetic instances.
struct QpProblem {
  int nx = 9;
  int nu = 4;

  std::vector<Eigen::MatrixXd> h;       // (nx+nu) x (nx+nu), symmetric PSD
  std::vector<Eigen::VectorXd> g;       // nx+nu
  Eigen::MatrixXd h_n;                  // nx x nx
  Eigen::VectorXd g_n;                  // nx

  std::vector<Eigen::MatrixXd> a;       // nx x nx
  std::vector<Eigen::MatrixXd> b;       // nx x nu
  std::vector<Eigen::VectorXd> a_res;   // nx, continuity residuals

  std::vector<Eigen::MatrixXd> c;       // nr x nx
  std::vector<Eigen::MatrixXd> d;       // nr x nu
  std::vector<Eigen::VectorXd> c_lb, c_ub;
  Eigen::MatrixXd c_n;                  // nr_n x nx
  Eigen::MatrixXd d_n;                  // nr_n x nu, hits the last interval's u
  Eigen::VectorXd cn_lb, cn_ub;

  Eigen::VectorXd dx0;                  // initial-embedding residual

  int num_intervals() const { return static_cast<int>(a.size()); }
  void validate() const;
};

// Gauss-Newton linearization of the NLP at the iterate.
QpProblem linearize(const OcpConfig& config, const Track& track,
                    const AccelerationModels& models, const NlpIterate& iterate);
QpProblem linearize(const OcpConfig& config, const Track& track,
                    const std::vector<AccelerationModels>& models,
                    const NlpIterate& iterate);

OcpConfig load_ocp_config(const std::string& path);
void save_ocp_config(const std::string& path, const OcpConfig& config);

}  // namespace kartmpc::ocp
