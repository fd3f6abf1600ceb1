#pragma once

// Reference machinery for checking the structured QP solver: an independent
// condensing pass plus exhaustive active-set enumeration. Deliberately written
// against the problem data only, sharing nothing with the solver.

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "kartmpc/ocp.hpp"

namespace qp_oracle {

struct DenseQp {
  Eigen::MatrixXd p;   // nv x nv
  Eigen::VectorXd q;   // nv
  Eigen::MatrixXd g;   // m x nv
  Eigen::VectorXd lb, ub;
  std::vector<Eigen::MatrixXd> state_map;  // x_j = state_map[j] * v + state_off[j]
  std::vector<Eigen::VectorXd> state_off;
};

inline DenseQp condense(const kartmpc::ocp::QpProblem& prob) {
  const int nx = prob.nx, nu = prob.nu;
  const int n = prob.num_intervals();
  const int nv = n * nu;

  DenseQp d;
  d.state_map.resize(n + 1);
  d.state_off.resize(n + 1);
  d.state_map[0] = Eigen::MatrixXd::Zero(nx, nv);
  d.state_off[0] = prob.dx0;
  for (int j = 0; j < n; ++j) {
    Eigen::MatrixXd m = prob.a[j] * d.state_map[j];
    m.middleCols(j * nu, nu) += prob.b[j];
    d.state_map[j + 1] = m;
    d.state_off[j + 1] = prob.a[j] * d.state_off[j] + prob.a_res[j];
  }

  d.p = Eigen::MatrixXd::Zero(nv, nv);
  d.q = Eigen::VectorXd::Zero(nv);
  for (int j = 0; j < n; ++j) {
    // z_j = [x_j; u_j] = T v + t
    Eigen::MatrixXd tmat = Eigen::MatrixXd::Zero(nx + nu, nv);
    tmat.topRows(nx) = d.state_map[j];
    tmat.block(nx, j * nu, nu, nu).setIdentity();
    Eigen::VectorXd tvec = Eigen::VectorXd::Zero(nx + nu);
    tvec.head(nx) = d.state_off[j];
    d.p += tmat.transpose() * prob.h[j] * tmat;
    d.q += tmat.transpose() * (prob.h[j] * tvec + prob.g[j]);
  }
  d.p += d.state_map[n].transpose() * prob.h_n * d.state_map[n];
  d.q += d.state_map[n].transpose() * (prob.h_n * d.state_off[n] + prob.g_n);
  d.p = 0.5 * (d.p + d.p.transpose()).eval();

  const int nr = n > 0 ? static_cast<int>(prob.c[0].rows()) : 0;
  const int nrn = static_cast<int>(prob.c_n.rows());
  d.g.resize(n * nr + nrn, nv);
  d.lb.resize(n * nr + nrn);
  d.ub.resize(n * nr + nrn);
  for (int j = 0; j < n; ++j) {
    Eigen::MatrixXd row = prob.c[j] * d.state_map[j];
    row.middleCols(j * nu, nu) += prob.d[j];
    d.g.middleRows(j * nr, nr) = row;
    d.lb.segment(j * nr, nr) = prob.c_lb[j] - prob.c[j] * d.state_off[j];
    d.ub.segment(j * nr, nr) = prob.c_ub[j] - prob.c[j] * d.state_off[j];
  }
  if (nrn > 0) {
    Eigen::MatrixXd row = prob.c_n * d.state_map[n];
    row.middleCols((n - 1) * nu, nu) += prob.d_n;
    d.g.bottomRows(nrn) = row;
    d.lb.tail(nrn) = prob.cn_lb - prob.c_n * d.state_off[n];
    d.ub.tail(nrn) = prob.cn_ub - prob.c_n * d.state_off[n];
  }
  return d;
}

// Full (non-condensed) objective of a stacked control vector, expanding the
// states through the dynamics; includes the constant the condensed form drops.
inline double full_objective(const kartmpc::ocp::QpProblem& prob,
                             const Eigen::VectorXd& v) {
  const int n = prob.num_intervals();
  Eigen::VectorXd x = prob.dx0;
  Eigen::VectorXd z(prob.nx + prob.nu);
  double obj = 0.0;
  for (int j = 0; j < n; ++j) {
    const Eigen::VectorXd u = v.segment(j * prob.nu, prob.nu);
    z << x, u;
    obj += 0.5 * z.dot(prob.h[j] * z) + prob.g[j].dot(z);
    x = prob.a[j] * x + prob.b[j] * u + prob.a_res[j];
  }
  obj += 0.5 * x.dot(prob.h_n * x) + prob.g_n.dot(x);
  return obj;
}

struct EnumResult {
  bool found = false;
  Eigen::VectorXd v;
  double objective = std::numeric_limits<double>::infinity();
};

// Exhaustive active-set enumeration over two-sided linear constraints:
// every row is inactive, at its lower, or at its upper bound. Only viable for
// a handful of rows; intended for oracle-sized problems.
inline EnumResult enumerate_active_sets(const DenseQp& d, double tol = 1e-8) {
  const int nv = static_cast<int>(d.p.rows());
  const int m = static_cast<int>(d.g.rows());
  EnumResult best;

  std::vector<int> state(m, 0);  // 0 inactive, 1 lower, 2 upper
  const long long total = static_cast<long long>(std::pow(3.0, m));
  for (long long code = 0; code < total; ++code) {
    long long c = code;
    int na = 0;
    for (int i = 0; i < m; ++i) {
      state[i] = static_cast<int>(c % 3);
      c /= 3;
      if (state[i] != 0) ++na;
    }
    Eigen::MatrixXd ga(na, nv);
    Eigen::VectorXd ba(na);
    int k = 0;
    for (int i = 0; i < m; ++i) {
      if (state[i] == 0) continue;
      ga.row(k) = d.g.row(i);
      ba(k) = state[i] == 1 ? d.lb(i) : d.ub(i);
      ++k;
    }
    Eigen::MatrixXd kkt(nv + na, nv + na);
    kkt.setZero();
    kkt.topLeftCorner(nv, nv) = d.p;
    if (na > 0) {
      kkt.topRightCorner(nv, na) = ga.transpose();
      kkt.bottomLeftCorner(na, nv) = ga;
    }
    Eigen::VectorXd rhs(nv + na);
    rhs.head(nv) = -d.q;
    rhs.tail(na) = ba;
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible()) continue;
    const Eigen::VectorXd sol = lu.solve(rhs);
    const Eigen::VectorXd v = sol.head(nv);
    const Eigen::VectorXd lam = sol.tail(na);

    // primal feasibility of the inactive rows
    const Eigen::VectorXd gv = d.g * v;
    bool ok = true;
    for (int i = 0; i < m && ok; ++i) {
      if (gv(i) < d.lb(i) - tol || gv(i) > d.ub(i) + tol) ok = false;
    }
    // dual signs: lower-active lambda <= 0, upper-active lambda >= 0
    k = 0;
    for (int i = 0; i < m && ok; ++i) {
      if (state[i] == 0) continue;
      if (state[i] == 1 && lam(k) > tol) ok = false;
      if (state[i] == 2 && lam(k) < -tol) ok = false;
      ++k;
    }
    if (!ok) continue;
    const double obj = 0.5 * v.dot(d.p * v) + d.q.dot(v);
    if (obj < best.objective) {
      best.found = true;
      best.objective = obj;
      best.v = v;
    }
  }
  return best;
}

// Random well-posed structured problem small enough for enumeration.
inline kartmpc::ocp::QpProblem random_problem(std::mt19937_64& rng, int nx,
                                              int nu, int n, int nr, int nrn) {
  std::normal_distribution<double> nd;
  auto randm = [&](int r, int c) {
    Eigen::MatrixXd m(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) m(i, j) = nd(rng);
    return m;
  };
  kartmpc::ocp::QpProblem p;
  p.nx = nx;
  p.nu = nu;
  for (int j = 0; j < n; ++j) {
    const Eigen::MatrixXd jmat = randm(nx + nu, nx + nu);
    p.h.push_back(jmat.transpose() * jmat / (nx + nu) +
                  0.1 * Eigen::MatrixXd::Identity(nx + nu, nx + nu));
    p.g.push_back(randm(nx + nu, 1));
    p.a.push_back(Eigen::MatrixXd::Identity(nx, nx) + 0.2 * randm(nx, nx));
    p.b.push_back(randm(nx, nu));
    p.a_res.push_back(0.1 * randm(nx, 1));
    p.c.push_back(randm(nr, nx));
    p.d.push_back(randm(nr, nu));
    Eigen::VectorXd mid = 0.3 * randm(nr, 1);
    Eigen::VectorXd half = Eigen::VectorXd::Constant(nr, 2.0) +
                           randm(nr, 1).cwiseAbs();
    p.c_lb.push_back(mid - half);
    p.c_ub.push_back(mid + half);
  }
  const Eigen::MatrixXd jn = randm(nx, nx);
  p.h_n = jn.transpose() * jn / nx + 0.1 * Eigen::MatrixXd::Identity(nx, nx);
  p.g_n = randm(nx, 1);
  p.c_n = randm(nrn, nx);
  p.d_n = randm(nrn, nu);
  Eigen::VectorXd midn = 0.3 * randm(nrn, 1);
  Eigen::VectorXd halfn =
      Eigen::VectorXd::Constant(nrn, 2.0) + randm(nrn, 1).cwiseAbs();
  p.cn_lb = midn - halfn;
  p.cn_ub = midn + halfn;
  p.dx0 = 0.1 * randm(nx, 1);
  return p;
}

}  // namespace qp_oracle
