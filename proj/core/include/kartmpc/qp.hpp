#pragma once

#include <string>
#include <vector>

#include "kartmpc/ocp.hpp"

namespace kartmpc::qp {

struct QpSolution {
  enum class Status { Optimal, MaxIter, Infeasible };
  Status status = Status::MaxIter;

  Eigen::MatrixXd dx;  // nx x (N+1)
  Eigen::MatrixXd du;  // nu x N

  // equality duals: embedding plus one per continuity constraint
  Eigen::VectorXd embed_dual;           // nx
  Eigen::MatrixXd continuity_duals;     // nx x N, column j pairs with x_{j+1}
  // inequality duals, split by side, all >= 0
  std::vector<Eigen::VectorXd> stage_lower_duals;  // nr per interval
  std::vector<Eigen::VectorXd> stage_upper_duals;
  Eigen::VectorXd term_lower_duals;  // nr_n
  Eigen::VectorXd term_upper_duals;

  int iterations = 0;
};

struct KktResiduals {
  double stationarity = 0.0;
  double primal_eq = 0.0;
  double primal_ineq = 0.0;
  double complementarity = 0.0;

  double max() const;
};

// Interior-point solve after condensing the states out through the dynamics
// blocks. status == Optimal guarantees kkt_residuals(...) <= tol.
QpSolution solve(const ocp::QpProblem& problem, double tol = 1e-6,
                 int max_iterations = 100);

// Exact residual evaluation on the structured problem; shares no state with
// the solver.
KktResiduals kkt_residuals(const ocp::QpProblem& problem, const QpSolution& sol);

// objective of a candidate solution
double objective(const ocp::QpProblem& problem, const QpSolution& sol);

// plain-text dump/restore of every block, for offline debugging and replay
void dump_qp(const std::string& path, const ocp::QpProblem& problem);
ocp::QpProblem load_qp(const std::string& path);

}  // namespace kartmpc::qp
