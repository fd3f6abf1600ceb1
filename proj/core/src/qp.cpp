#include "kartmpc/qp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "kartmpc/errors.hpp"

namespace kartmpc::qp {
namespace {

// Condensed form: with the states substituted out through the dynamics,
// x_j = M_j * v.head(j*nu) + m_j where v stacks all controls. Constraint
// blocks keep their banded support (block j touches u_0..u_j) so the normal
// matrix can be accumulated block-wise instead of via one dense G.
struct Condensed {
  int nx = 0, nu = 0, n = 0, nv = 0;
  Eigen::MatrixXd p;
  Eigen::VectorXd q;
  std::vector<Eigen::MatrixXd> mmat;  // M_j, nx x (j*nu), j = 0..N
  std::vector<Eigen::VectorXd> mvec;  // m_j
  std::vector<Eigen::MatrixXd> g;     // constraint blocks, rows x ncols
  std::vector<Eigen::VectorXd> lb, ub;
  std::vector<Eigen::VectorXd> scale;  // row equilibration factors
  std::vector<int> ncols;
};

// normalize each constraint row to unit infinity-norm; rows whose norm is
// (near) zero cannot be moved by any decision variable, so their bounds are
// relaxed to include their fixed value instead of poisoning feasibility
void equilibrate(Eigen::MatrixXd& gb, Eigen::VectorXd& lb, Eigen::VectorXd& ub,
                 Eigen::VectorXd& w) {
  w = Eigen::VectorXd::Ones(gb.rows());
  for (Eigen::Index r = 0; r < gb.rows(); ++r) {
    const double nr = gb.row(r).lpNorm<Eigen::Infinity>();
    if (nr < 1e-12) {
      lb(r) = std::min(lb(r), 0.0);
      ub(r) = std::max(ub(r), 0.0);
    } else {
      w(r) = nr;
      gb.row(r) /= nr;
      lb(r) /= nr;
      ub(r) /= nr;
    }
  }
}

Condensed condense(const ocp::QpProblem& pr) {
  Condensed c;
  c.nx = pr.nx;
  c.nu = pr.nu;
  c.n = pr.num_intervals();
  c.nv = c.n * c.nu;

  c.mmat.resize(c.n + 1);
  c.mvec.resize(c.n + 1);
  c.mmat[0].resize(c.nx, 0);
  c.mvec[0] = pr.dx0;
  for (int j = 0; j < c.n; ++j) {
    const int jc = j * c.nu;
    c.mmat[j + 1].resize(c.nx, jc + c.nu);
    if (jc > 0) c.mmat[j + 1].leftCols(jc) = pr.a[j] * c.mmat[j];
    c.mmat[j + 1].rightCols(c.nu) = pr.b[j];
    c.mvec[j + 1] = pr.a[j] * c.mvec[j] + pr.a_res[j];
  }

  c.p = Eigen::MatrixXd::Zero(c.nv, c.nv);
  c.q = Eigen::VectorXd::Zero(c.nv);
  for (int j = 0; j < c.n; ++j) {
    const int jc = j * c.nu;
    const auto hxx = pr.h[j].topLeftCorner(c.nx, c.nx);
    const auto hxu = pr.h[j].topRightCorner(c.nx, c.nu);
    const auto huu = pr.h[j].bottomRightCorner(c.nu, c.nu);
    const auto gx = pr.g[j].head(c.nx);
    const auto gu = pr.g[j].tail(c.nu);
    const Eigen::MatrixXd& mj = c.mmat[j];
    const Eigen::VectorXd& mv = c.mvec[j];
    if (jc > 0) {
      c.p.topLeftCorner(jc, jc) += mj.transpose() * hxx * mj;
      const Eigen::MatrixXd cross = mj.transpose() * hxu;
      c.p.block(0, jc, jc, c.nu) += cross;
      c.p.block(jc, 0, c.nu, jc) += cross.transpose();
      c.q.head(jc) += mj.transpose() * (hxx * mv + gx);
    }
    c.p.block(jc, jc, c.nu, c.nu) += huu;
    c.q.segment(jc, c.nu) += hxu.transpose() * mv + gu;
  }
  c.p += c.mmat[c.n].transpose() * pr.h_n * c.mmat[c.n];
  c.q += c.mmat[c.n].transpose() * (pr.h_n * c.mvec[c.n] + pr.g_n);

  for (int j = 0; j < c.n; ++j) {
    const int nc = (j + 1) * c.nu;
    Eigen::MatrixXd gb(pr.c[j].rows(), nc);
    if (nc > c.nu) gb.leftCols(nc - c.nu) = pr.c[j] * c.mmat[j];
    gb.rightCols(c.nu) = pr.d[j];
    const Eigen::VectorXd off = pr.c[j] * c.mvec[j];
    Eigen::VectorXd lb = pr.c_lb[j] - off;
    Eigen::VectorXd ub = pr.c_ub[j] - off;
    Eigen::VectorXd w;
    equilibrate(gb, lb, ub, w);
    c.g.push_back(std::move(gb));
    c.lb.push_back(std::move(lb));
    c.ub.push_back(std::move(ub));
    c.scale.push_back(std::move(w));
    c.ncols.push_back(nc);
  }
  if (pr.c_n.rows() > 0) {
    Eigen::MatrixXd gb = pr.c_n * c.mmat[c.n];
    gb.rightCols(c.nu) += pr.d_n;
    const Eigen::VectorXd off = pr.c_n * c.mvec[c.n];
    Eigen::VectorXd lb = pr.cn_lb - off;
    Eigen::VectorXd ub = pr.cn_ub - off;
    Eigen::VectorXd w;
    equilibrate(gb, lb, ub, w);
    c.g.push_back(std::move(gb));
    c.lb.push_back(std::move(lb));
    c.ub.push_back(std::move(ub));
    c.scale.push_back(std::move(w));
    c.ncols.push_back(c.nv);
  }
  return c;
}

double max_step(const Eigen::VectorXd& z, const Eigen::VectorXd& dz) {
  double a = 1.0;
  for (Eigen::Index i = 0; i < z.size(); ++i)
    if (dz(i) < 0.0) a = std::min(a, -z(i) / dz(i));
  return a;
}

void recover_duals(const ocp::QpProblem& pr, QpSolution& sol) {
  const int n = pr.num_intervals();
  const int nx = pr.nx;
  const int nu = pr.nu;
  sol.continuity_duals.resize(nx, n);

  const Eigen::VectorXd mu_n = sol.term_upper_duals - sol.term_lower_duals;
  Eigen::VectorXd nu_next = pr.h_n * sol.dx.col(n) + pr.g_n;
  if (pr.c_n.rows() > 0) nu_next += pr.c_n.transpose() * mu_n;
  sol.continuity_duals.col(n - 1) = nu_next;
  for (int j = n - 1; j >= 1; --j) {
    const Eigen::VectorXd mu = sol.stage_upper_duals[j] - sol.stage_lower_duals[j];
    const Eigen::VectorXd lam =
        pr.h[j].topLeftCorner(nx, nx) * sol.dx.col(j) +
        pr.h[j].topRightCorner(nx, nu) * sol.du.col(j) + pr.g[j].head(nx) +
        pr.c[j].transpose() * mu + pr.a[j].transpose() * nu_next;
    sol.continuity_duals.col(j - 1) = lam;
    nu_next = lam;
  }
  const Eigen::VectorXd mu0 =
      sol.stage_upper_duals[0] - sol.stage_lower_duals[0];
  sol.embed_dual = -(pr.h[0].topLeftCorner(nx, nx) * sol.dx.col(0) +
                     pr.h[0].topRightCorner(nx, nu) * sol.du.col(0) +
                     pr.g[0].head(nx) + pr.c[0].transpose() * mu0 +
                     pr.a[0].transpose() * nu_next);
}

void write_matrix(std::FILE* f, const char* tag, const Eigen::MatrixXd& m) {
  std::fprintf(f, "%s %ld %ld\n", tag, static_cast<long>(m.rows()),
               static_cast<long>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index cidx = 0; cidx < m.cols(); ++cidx)
      std::fprintf(f, "%s%.17g", cidx ? " " : "", m(r, cidx));
    std::fprintf(f, "\n");
  }
}

Eigen::MatrixXd read_matrix(std::istream& in, const std::string& tag) {
  std::string got;
  long rows = 0, cols = 0;
  if (!(in >> got >> rows >> cols) || got != tag)
    throw std::runtime_error("load_qp: expected block '" + tag + "'");
  Eigen::MatrixXd m(rows, cols);
  for (long r = 0; r < rows; ++r)
    for (long cidx = 0; cidx < cols; ++cidx)
      if (!(in >> m(r, cidx))) throw std::runtime_error("load_qp: short block");
  return m;
}

}  // namespace

double KktResiduals::max() const {
  return std::max({stationarity, primal_eq, primal_ineq, complementarity});
}

QpSolution solve(const ocp::QpProblem& problem, double tol,
                 int max_iterations) {
  problem.validate();
  if (!(tol > 0.0)) throw std::invalid_argument("qp::solve: tol must be > 0");

  const int n = problem.num_intervals();
  const int nx = problem.nx;
  const int nu = problem.nu;

  QpSolution sol;
  sol.dx = Eigen::MatrixXd::Zero(nx, n + 1);
  sol.du = Eigen::MatrixXd::Zero(nu, n);
  sol.embed_dual = Eigen::VectorXd::Zero(nx);
  sol.continuity_duals = Eigen::MatrixXd::Zero(nx, n);
  for (int j = 0; j < n; ++j) {
    sol.stage_lower_duals.emplace_back(Eigen::VectorXd::Zero(problem.c[j].rows()));
    sol.stage_upper_duals.emplace_back(Eigen::VectorXd::Zero(problem.c[j].rows()));
  }
  sol.term_lower_duals = Eigen::VectorXd::Zero(problem.c_n.rows());
  sol.term_upper_duals = Eigen::VectorXd::Zero(problem.c_n.rows());

  Condensed cd = condense(problem);
  const int nb = static_cast<int>(cd.g.size());
  int m_total = 0;
  for (int b = 0; b < nb; ++b) {
    if (!cd.lb[b].allFinite() || !cd.ub[b].allFinite())
      throw std::invalid_argument("qp::solve: bounds must be finite");
    if (((cd.lb[b] - cd.ub[b]).array() > 1e-10).any()) {
      sol.status = QpSolution::Status::Infeasible;
      return sol;
    }
    m_total += static_cast<int>(cd.g[b].rows());
  }

  Eigen::VectorXd v = Eigen::VectorXd::Zero(cd.nv);
  int iterations = 0;

  if (m_total == 0) {
    v = Eigen::LDLT<Eigen::MatrixXd>(cd.p).solve(-cd.q);
    sol.status = QpSolution::Status::Optimal;
  } else {
    std::vector<Eigen::VectorXd> sl(nb), su(nb), ll(nb), lu(nb), gv(nb);
    for (int b = 0; b < nb; ++b) {
      gv[b] = cd.g[b] * v.head(cd.ncols[b]);
      sl[b] = (gv[b] - cd.lb[b]).cwiseMax(1.0);
      su[b] = (cd.ub[b] - gv[b]).cwiseMax(1.0);
      ll[b] = Eigen::VectorXd::Ones(sl[b].size());
      lu[b] = Eigen::VectorXd::Ones(su[b].size());
    }

    const double tol_d = 0.5 * tol;
    const double tol_p = 0.5 * tol;
    const double tol_mu = tol / static_cast<double>(m_total);

    std::vector<Eigen::VectorXd> rl(nb), ru(nb), dsl(nb), dsu(nb), dll(nb),
        dlu(nb), rhl(nb), rhu(nb);
    Eigen::MatrixXd kmat(cd.nv, cd.nv);
    Eigen::VectorXd rd(cd.nv), rbar(cd.nv), dv(cd.nv);
    Eigen::LDLT<Eigen::MatrixXd> ldlt;

    for (; iterations < max_iterations; ++iterations) {
      rd = cd.p * v + cd.q;
      double gap = 0.0, rp_inf = 0.0;
      for (int b = 0; b < nb; ++b) {
        gv[b] = cd.g[b] * v.head(cd.ncols[b]);
        rl[b] = gv[b] - sl[b] - cd.lb[b];
        ru[b] = gv[b] + su[b] - cd.ub[b];
        rd.head(cd.ncols[b]) += cd.g[b].transpose() * (lu[b] - ll[b]);
        gap += sl[b].dot(ll[b]) + su[b].dot(lu[b]);
        rp_inf = std::max(
            {rp_inf, rl[b].lpNorm<Eigen::Infinity>(), ru[b].lpNorm<Eigen::Infinity>()});
      }
      const double mu = gap / (2.0 * m_total);
      if (rd.lpNorm<Eigen::Infinity>() <= tol_d && rp_inf <= tol_p &&
          mu <= tol_mu) {
        sol.status = QpSolution::Status::Optimal;
        break;
      }
      // divergence guard: ill-posed or infeasible instances can blow the
      // barrier iterates up instead of converging
      if (!std::isfinite(mu) || !std::isfinite(rp_inf) || !rd.allFinite() ||
          mu > 1e12) {
        sol.status = QpSolution::Status::MaxIter;
        break;
      }

      kmat = cd.p;
      for (int b = 0; b < nb; ++b) {
        // the barrier weight is clamped: degenerate active sets (linearly
        // dependent tight rows) otherwise blow the normal matrix up beyond
        // what the factorization can resolve
        const Eigen::VectorXd sigma =
            (ll[b].cwiseQuotient(sl[b]) + lu[b].cwiseQuotient(su[b]))
                .cwiseMin(1e10);
        kmat.topLeftCorner(cd.ncols[b], cd.ncols[b]) +=
            cd.g[b].transpose() * sigma.asDiagonal() * cd.g[b];
      }
      if (!kmat.allFinite()) {
        sol.status = QpSolution::Status::MaxIter;
        break;
      }
      ldlt.compute(kmat);
      // escalate a diagonal shift if the factorization hits numerical trouble;
      // the shift is relative to the diagonal scale because the barrier terms
      // can push the matrix norm far beyond any fixed absolute shift
      const double diag_scale =
          std::max(1.0, kmat.diagonal().cwiseAbs().maxCoeff());
      double reg = 1e-14 * diag_scale;
      for (int shift = 0; ldlt.info() != Eigen::Success && shift < 6; ++shift) {
        kmat.diagonal().array() += reg;
        ldlt.compute(kmat);
        reg *= 100.0;
      }
      if (ldlt.info() != Eigen::Success) {
        sol.status = QpSolution::Status::MaxIter;
        break;
      }

      auto solve_direction = [&]() {
        rbar = rd;
        for (int b = 0; b < nb; ++b) {
          rbar.head(cd.ncols[b]) +=
              cd.g[b].transpose() *
              ((rhu[b] + lu[b].cwiseProduct(ru[b])).cwiseQuotient(su[b]) -
               (rhl[b] - ll[b].cwiseProduct(rl[b])).cwiseQuotient(sl[b]));
        }
        dv = ldlt.solve(-rbar);
        for (int b = 0; b < nb; ++b) {
          const Eigen::VectorXd gdv = cd.g[b] * dv.head(cd.ncols[b]);
          dsl[b] = gdv + rl[b];
          dll[b] = (rhl[b] - ll[b].cwiseProduct(dsl[b])).cwiseQuotient(sl[b]);
          dsu[b] = -gdv - ru[b];
          dlu[b] = (rhu[b] - lu[b].cwiseProduct(dsu[b])).cwiseQuotient(su[b]);
        }
      };

      // affine (predictor) pass
      for (int b = 0; b < nb; ++b) {
        rhl[b] = -sl[b].cwiseProduct(ll[b]);
        rhu[b] = -su[b].cwiseProduct(lu[b]);
      }
      solve_direction();
      double ap = 1.0, ad = 1.0;
      for (int b = 0; b < nb; ++b) {
        ap = std::min({ap, max_step(sl[b], dsl[b]), max_step(su[b], dsu[b])});
        ad = std::min({ad, max_step(ll[b], dll[b]), max_step(lu[b], dlu[b])});
      }
      double gap_aff = 0.0;
      for (int b = 0; b < nb; ++b) {
        gap_aff += (sl[b] + ap * dsl[b]).dot(ll[b] + ad * dll[b]) +
                   (su[b] + ap * dsu[b]).dot(lu[b] + ad * dlu[b]);
      }
      const double mu_aff = gap_aff / (2.0 * m_total);
      double sigma_c = std::pow(mu_aff / mu, 3);
      sigma_c = std::clamp(sigma_c, 0.0, 1.0);

      // corrector pass, reusing the factorization
      for (int b = 0; b < nb; ++b) {
        rhl[b] = Eigen::VectorXd::Constant(sl[b].size(), sigma_c * mu) -
                 sl[b].cwiseProduct(ll[b]) - dsl[b].cwiseProduct(dll[b]);
        rhu[b] = Eigen::VectorXd::Constant(su[b].size(), sigma_c * mu) -
                 su[b].cwiseProduct(lu[b]) - dsu[b].cwiseProduct(dlu[b]);
      }
      solve_direction();
      ap = 1.0;
      ad = 1.0;
      for (int b = 0; b < nb; ++b) {
        ap = std::min({ap, max_step(sl[b], dsl[b]), max_step(su[b], dsu[b])});
        ad = std::min({ad, max_step(ll[b], dll[b]), max_step(lu[b], dlu[b])});
      }
      constexpr double kFraction = 0.995;
      ap = std::min(1.0, kFraction * ap);
      ad = std::min(1.0, kFraction * ad);

      v += ap * dv;
      for (int b = 0; b < nb; ++b) {
        sl[b] += ap * dsl[b];
        su[b] += ap * dsu[b];
        ll[b] += ad * dll[b];
        lu[b] += ad * dlu[b];
      }
    }

    // duals back onto the structured rows, undoing the row equilibration
    for (int b = 0; b < nb; ++b) {
      const bool terminal = problem.c_n.rows() > 0 && b == nb - 1;
      if (terminal) {
        sol.term_lower_duals = ll[b].cwiseQuotient(cd.scale[b]);
        sol.term_upper_duals = lu[b].cwiseQuotient(cd.scale[b]);
      } else {
        sol.stage_lower_duals[b] = ll[b].cwiseQuotient(cd.scale[b]);
        sol.stage_upper_duals[b] = lu[b].cwiseQuotient(cd.scale[b]);
      }
    }
  }

  sol.iterations = iterations;
  // primal recovery through the exact dynamics recursion
  sol.dx.col(0) = problem.dx0;
  for (int j = 0; j < n; ++j) {
    sol.du.col(j) = v.segment(j * nu, nu);
    sol.dx.col(j + 1) =
        problem.a[j] * sol.dx.col(j) + problem.b[j] * sol.du.col(j) +
        problem.a_res[j];
  }
  recover_duals(problem, sol);
  return sol;
}

KktResiduals kkt_residuals(const ocp::QpProblem& problem,
                           const QpSolution& sol) {
  const int n = problem.num_intervals();
  const int nx = problem.nx;
  const int nu = problem.nu;
  KktResiduals r;

  r.primal_eq = (sol.dx.col(0) - problem.dx0).lpNorm<Eigen::Infinity>();
  for (int j = 0; j < n; ++j) {
    const Eigen::VectorXd res = problem.a[j] * sol.dx.col(j) +
                                problem.b[j] * sol.du.col(j) +
                                problem.a_res[j] - sol.dx.col(j + 1);
    r.primal_eq = std::max(r.primal_eq, res.lpNorm<Eigen::Infinity>());
  }

  for (int j = 0; j < n; ++j) {
    if (problem.c[j].rows() == 0) continue;
    const Eigen::VectorXd row = problem.c[j] * sol.dx.col(j) +
                                problem.d[j] * sol.du.col(j);
    r.primal_ineq = std::max(
        {r.primal_ineq, (problem.c_lb[j] - row).maxCoeff(), (row - problem.c_ub[j]).maxCoeff(), 0.0});
    r.complementarity = std::max(
        {r.complementarity,
         sol.stage_lower_duals[j].cwiseProduct(row - problem.c_lb[j]).cwiseAbs().maxCoeff(),
         sol.stage_upper_duals[j].cwiseProduct(problem.c_ub[j] - row).cwiseAbs().maxCoeff()});
  }
  if (problem.c_n.rows() > 0) {
    const Eigen::VectorXd row = problem.c_n * sol.dx.col(n) +
                                problem.d_n * sol.du.col(n - 1);
    r.primal_ineq = std::max(
        {r.primal_ineq, (problem.cn_lb - row).maxCoeff(), (row - problem.cn_ub).maxCoeff(), 0.0});
    r.complementarity = std::max(
        {r.complementarity,
         sol.term_lower_duals.cwiseProduct(row - problem.cn_lb).cwiseAbs().maxCoeff(),
         sol.term_upper_duals.cwiseProduct(problem.cn_ub - row).cwiseAbs().maxCoeff()});
  }

  const Eigen::VectorXd mu_n = sol.term_upper_duals - sol.term_lower_duals;
  double stat = 0.0;
  {
    Eigen::VectorXd row = problem.h_n * sol.dx.col(n) + problem.g_n -
                          sol.continuity_duals.col(n - 1);
    if (problem.c_n.rows() > 0) row += problem.c_n.transpose() * mu_n;
    stat = std::max(stat, row.lpNorm<Eigen::Infinity>());
  }
  for (int j = 0; j < n; ++j) {
    const Eigen::VectorXd mu =
        sol.stage_upper_duals[j] - sol.stage_lower_duals[j];
    Eigen::VectorXd xrow = problem.h[j].topLeftCorner(nx, nx) * sol.dx.col(j) +
                           problem.h[j].topRightCorner(nx, nu) * sol.du.col(j) +
                           problem.g[j].head(nx) +
                           problem.c[j].transpose() * mu +
                           problem.a[j].transpose() * sol.continuity_duals.col(j);
    xrow += (j == 0) ? sol.embed_dual : -sol.continuity_duals.col(j - 1);
    stat = std::max(stat, xrow.lpNorm<Eigen::Infinity>());

    Eigen::VectorXd urow =
        problem.h[j].topRightCorner(nx, nu).transpose() * sol.dx.col(j) +
        problem.h[j].bottomRightCorner(nu, nu) * sol.du.col(j) +
        problem.g[j].tail(nu) + problem.d[j].transpose() * mu +
        problem.b[j].transpose() * sol.continuity_duals.col(j);
    if (j == n - 1 && problem.c_n.rows() > 0)
      urow += problem.d_n.transpose() * mu_n;
    stat = std::max(stat, urow.lpNorm<Eigen::Infinity>());
  }
  r.stationarity = stat;
  return r;
}

double objective(const ocp::QpProblem& problem, const QpSolution& sol) {
  const int n = problem.num_intervals();
  double obj = 0.0;
  Eigen::VectorXd z(problem.nx + problem.nu);
  for (int j = 0; j < n; ++j) {
    z << sol.dx.col(j), sol.du.col(j);
    obj += 0.5 * z.dot(problem.h[j] * z) + problem.g[j].dot(z);
  }
  obj += 0.5 * sol.dx.col(n).dot(problem.h_n * sol.dx.col(n)) +
         problem.g_n.dot(sol.dx.col(n));
  return obj;
}

void dump_qp(const std::string& path, const ocp::QpProblem& problem) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("dump_qp: cannot open " + path);
  std::fprintf(f, "kartmpc-qp v1\n");
  std::fprintf(f, "dims %d %d %d\n", problem.nx, problem.nu,
               problem.num_intervals());
  for (int j = 0; j < problem.num_intervals(); ++j) {
    write_matrix(f, "h", problem.h[j]);
    write_matrix(f, "g", problem.g[j]);
    write_matrix(f, "a", problem.a[j]);
    write_matrix(f, "b", problem.b[j]);
    write_matrix(f, "a_res", problem.a_res[j]);
    write_matrix(f, "c", problem.c[j]);
    write_matrix(f, "d", problem.d[j]);
    write_matrix(f, "c_lb", problem.c_lb[j]);
    write_matrix(f, "c_ub", problem.c_ub[j]);
  }
  write_matrix(f, "h_n", problem.h_n);
  write_matrix(f, "g_n", problem.g_n);
  write_matrix(f, "c_n", problem.c_n);
  write_matrix(f, "d_n", problem.d_n);
  write_matrix(f, "cn_lb", problem.cn_lb);
  write_matrix(f, "cn_ub", problem.cn_ub);
  write_matrix(f, "dx0", problem.dx0);
  std::fclose(f);
}

ocp::QpProblem load_qp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_qp: cannot open " + path);
  std::string magic, version;
  in >> magic >> version;
  if (magic != "kartmpc-qp" || version != "v1")
    throw std::runtime_error("load_qp: bad header in " + path);
  std::string tag;
  int n = 0;
  ocp::QpProblem pr;
  if (!(in >> tag >> pr.nx >> pr.nu >> n) || tag != "dims")
    throw std::runtime_error("load_qp: bad dims line");
  for (int j = 0; j < n; ++j) {
    pr.h.push_back(read_matrix(in, "h"));
    pr.g.push_back(read_matrix(in, "g"));
    pr.a.push_back(read_matrix(in, "a"));
    pr.b.push_back(read_matrix(in, "b"));
    pr.a_res.push_back(read_matrix(in, "a_res"));
    pr.c.push_back(read_matrix(in, "c"));
    pr.d.push_back(read_matrix(in, "d"));
    pr.c_lb.push_back(read_matrix(in, "c_lb"));
    pr.c_ub.push_back(read_matrix(in, "c_ub"));
  }
  pr.h_n = read_matrix(in, "h_n");
  pr.g_n = read_matrix(in, "g_n");
  pr.c_n = read_matrix(in, "c_n");
  pr.d_n = read_matrix(in, "d_n");
  pr.cn_lb = read_matrix(in, "cn_lb");
  pr.cn_ub = read_matrix(in, "cn_ub");
  pr.dx0 = read_matrix(in, "dx0");
  pr.validate();
  return pr;
}

}  // namespace kartmpc::qp
