#include "kartmpc/gp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace kartmpc::gp {

namespace {
constexpr double kJitterMax = 1e-6;

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }
}  // namespace

void KernelParams::validate(double noise_floor) const {
  if (lengthscales.size() == 0 || (lengthscales.array() <= 0.0).any())
    throw std::invalid_argument("kernel lengthscales must be positive");
  if (!lengthscales.allFinite() || !std::isfinite(noise_std))
    throw std::invalid_argument("kernel params must be finite");
  if (noise_std < noise_floor)
    throw std::invalid_argument("noise_std below configured floor");
  if (jitter <= 0.0) throw std::invalid_argument("jitter must be positive");
}

GpDataset GpDataset::from_raw(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() == 0 || X.rows() != y.size())
    throw std::invalid_argument("dataset: empty or mismatched inputs/targets");
  if (!all_finite(X) || !y.allFinite())
    throw std::invalid_argument("dataset: non-finite entries");

  GpDataset d;
  const Eigen::Index T = X.rows(), n = X.cols();
  d.input_shift = X.colwise().mean();
  d.input_scale.resize(n);
  for (Eigen::Index c = 0; c < n; ++c) {
    const double var = (X.col(c).array() - d.input_shift(c)).square().sum() /
                       static_cast<double>(T);
    const double sd = std::sqrt(var);
    d.input_scale(c) = sd > 1e-12 ? sd : 1.0;
  }
  d.target_shift = y.mean();
  const double tvar = (y.array() - d.target_shift).square().sum() / static_cast<double>(T);
  const double tsd = std::sqrt(tvar);
  d.target_scale = tsd > 1e-12 ? tsd : 1.0;

  d.inputs = (X.rowwise() - d.input_shift.transpose()).array().rowwise() /
             d.input_scale.transpose().array();
  d.targets = (y.array() - d.target_shift) / d.target_scale;
  return d;
}

GpDataset GpDataset::pre_standardized(Eigen::MatrixXd X, Eigen::VectorXd y) {
  if (X.rows() == 0 || X.rows() != y.size())
    throw std::invalid_argument("dataset: empty or mismatched inputs/targets");
  if (!all_finite(X) || !y.allFinite())
    throw std::invalid_argument("dataset: non-finite entries");
  GpDataset d;
  d.input_shift = Eigen::VectorXd::Zero(X.cols());
  d.input_scale = Eigen::VectorXd::Ones(X.cols());
  d.inputs = std::move(X);
  d.targets = std::move(y);
  return d;
}

Eigen::VectorXd GpDataset::standardize_input(const Eigen::VectorXd& x_raw) const {
  return (x_raw - input_shift).cwiseQuotient(input_scale);
}

Eigen::VectorXd GpDataset::raw_input_row(Eigen::Index i) const {
  return inputs.row(i).transpose().cwiseProduct(input_scale) + input_shift;
}

double GpDataset::raw_target(Eigen::Index i) const {
  return target_shift + target_scale * targets(i);
}

GpDataset GpDataset::subset(const std::vector<Eigen::Index>& rows) const {
  if (rows.empty()) throw std::invalid_argument("dataset subset: empty index list");
  GpDataset d = *this;
  d.inputs.resize(static_cast<Eigen::Index>(rows.size()), inputs.cols());
  d.targets.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= inputs.rows())
      throw std::invalid_argument("dataset subset: index out of range");
    d.inputs.row(static_cast<Eigen::Index>(i)) = inputs.row(rows[i]);
    d.targets(static_cast<Eigen::Index>(i)) = targets(rows[i]);
  }
  return d;
}

void GpDataset::validate() const {
  if (inputs.rows() < 1 || inputs.rows() != targets.size())
    throw std::invalid_argument("dataset: empty or mismatched inputs/targets");
  if (!all_finite(inputs) || !targets.allFinite() || !input_shift.allFinite() ||
      !input_scale.allFinite())
    throw std::invalid_argument("dataset: non-finite entries");
  if ((input_scale.array() <= 0.0).any() || target_scale <= 0.0)
    throw std::invalid_argument("dataset: standardizer scales must be positive");
}

double kernel_eval(const KernelParams& params, const Eigen::VectorXd& a,
                   const Eigen::VectorXd& b) {
  if (a.size() != b.size() || a.size() != params.lengthscales.size())
    throw std::invalid_argument("kernel_eval: dimension mismatch");
  if (!a.allFinite() || !b.allFinite())
    throw std::invalid_argument("kernel_eval: non-finite input");
  const double e = ((a - b).cwiseQuotient(params.lengthscales)).squaredNorm();
  return std::exp(-e);
}

Eigen::MatrixXd gram_matrix(const KernelParams& params, const Eigen::MatrixXd& X) {
  if (X.rows() < 1) throw std::invalid_argument("gram_matrix: empty input");
  if (!all_finite(X)) throw std::invalid_argument("gram_matrix: non-finite input");
  if (X.cols() != params.lengthscales.size())
    throw std::invalid_argument("gram_matrix: dimension mismatch");
  // scale columns once, then K_ij = exp(-|z_i - z_j|^2)
  const Eigen::MatrixXd Z =
      X.array().rowwise() / params.lengthscales.transpose().array();
  const Eigen::VectorXd sq = Z.rowwise().squaredNorm();
  Eigen::MatrixXd K = -2.0 * (Z * Z.transpose());
  K.colwise() += sq;
  K.rowwise() += sq.transpose();
  K = (-K.array().max(0.0)).exp();
  K.diagonal().setOnes();
  return K;
}

GpModel fit(const KernelParams& params, const GpDataset& dataset) {
  dataset.validate();
  params.validate();
  if (dataset.dim() != params.lengthscales.size())
    throw std::invalid_argument("fit: dataset/params dimension mismatch");

  GpModel m;
  m.params = params;
  m.dataset = dataset;

  Eigen::MatrixXd K = gram_matrix(params, dataset.inputs);
  K.diagonal().array() += params.noise_std * params.noise_std;

  for (double jit = params.jitter; jit <= kJitterMax * (1.0 + 1e-12); jit *= 10.0) {
    Eigen::MatrixXd Kj = K;
    Kj.diagonal().array() += jit;
    Eigen::LLT<Eigen::MatrixXd> llt(Kj);
    if (llt.info() == Eigen::Success) {
      m.chol = llt.matrixL();
      m.alpha = llt.solve(dataset.targets);
      m.jitter_used = jit;
      return m;
    }
  }
  throw NumericalError("fit: Cholesky failed after jitter escalation to 1e-6");
}

namespace {
Eigen::VectorXd kstar(const GpModel& m, const Eigen::VectorXd& x_std) {
  const Eigen::Index T = m.dataset.size();
  Eigen::VectorXd k(T);
  for (Eigen::Index i = 0; i < T; ++i)
    k(i) = kernel_eval(m.params, x_std, m.dataset.inputs.row(i).transpose());
  return k;
}
}  // namespace

double posterior_mean_std(const GpModel& model, const Eigen::VectorXd& x_std) {
  return kstar(model, x_std).dot(model.alpha);
}

double posterior_mean(const GpModel& model, const Eigen::VectorXd& x_raw) {
  if (!x_raw.allFinite()) throw std::invalid_argument("posterior_mean: non-finite query");
  const double mu = posterior_mean_std(model, model.dataset.standardize_input(x_raw));
  return model.dataset.target_shift + model.dataset.target_scale * mu;
}

double posterior_variance_std(const GpModel& model, const Eigen::VectorXd& x_std) {
  const Eigen::VectorXd k = kstar(model, x_std);
  const Eigen::VectorXd v =
      model.chol.triangularView<Eigen::Lower>().solve(k);
  const double var = 1.0 - v.squaredNorm();
  if (var < -1e-10)
    throw NumericalError("posterior_variance: variance below -1e-10");
  return std::max(var, 0.0);
}

double posterior_variance(const GpModel& model, const Eigen::VectorXd& x_raw) {
  if (!x_raw.allFinite())
    throw std::invalid_argument("posterior_variance: non-finite query");
  return posterior_variance_std(model, model.dataset.standardize_input(x_raw));
}

Eigen::VectorXd mean_gradient_std(const GpModel& model, const Eigen::VectorXd& x_std) {
  const Eigen::Index T = model.dataset.size();
  const Eigen::ArrayXd inv_l2 =
      model.params.lengthscales.array().square().inverse();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(x_std.size());
  for (Eigen::Index i = 0; i < T; ++i) {
    const Eigen::VectorXd xi = model.dataset.inputs.row(i).transpose();
    const double k = kernel_eval(model.params, x_std, xi);
    g.array() += model.alpha(i) * k * (-2.0) * (x_std - xi).array() * inv_l2;
  }
  return g;
}

Eigen::VectorXd mean_gradient(const GpModel& model, const Eigen::VectorXd& x_raw) {
  const Eigen::VectorXd g_std =
      mean_gradient_std(model, model.dataset.standardize_input(x_raw));
  return model.dataset.target_scale *
         g_std.cwiseQuotient(model.dataset.input_scale);
}

std::pair<double, Eigen::VectorXd> log_marginal_likelihood(const GpModel& model) {
  const Eigen::Index T = model.dataset.size();
  const Eigen::Index d = model.dataset.dim();
  const Eigen::VectorXd& y = model.dataset.targets;

  double value = -0.5 * model.alpha.dot(y);
  value -= model.chol.diagonal().array().log().sum();
  value -= 0.5 * static_cast<double>(T) * std::log(2.0 * M_PI);

  // M = alpha alpha^T - (K + sigma^2 I)^{-1}; dL/dtheta = 0.5 tr(M dK/dtheta)
  Eigen::MatrixXd Kinv = Eigen::MatrixXd::Identity(T, T);
  model.chol.triangularView<Eigen::Lower>().solveInPlace(Kinv);
  model.chol.transpose().triangularView<Eigen::Upper>().solveInPlace(Kinv);
  const Eigen::MatrixXd M = model.alpha * model.alpha.transpose() - Kinv;

  const Eigen::MatrixXd K = gram_matrix(model.params, model.dataset.inputs);
  Eigen::VectorXd grad(d + 1);
  for (Eigen::Index m = 0; m < d; ++m) {
    const double inv_l2 =
        1.0 / (model.params.lengthscales(m) * model.params.lengthscales(m));
    // dK_ij / dlog(l_m) = K_ij * 2 (x_im - x_jm)^2 / l_m^2
    const Eigen::VectorXd col = model.dataset.inputs.col(m);
    Eigen::MatrixXd dK =
        (col.replicate(1, T) - col.transpose().replicate(T, 1)).array().square() *
        (2.0 * inv_l2) * K.array();
    grad(m) = 0.5 * (M.array() * dK.array()).sum();
  }
  // dK / dlog(sigma_n) = 2 sigma_n^2 I
  grad(d) = model.params.noise_std * model.params.noise_std * M.trace();
  return {value, grad};
}

TrainResult train_hyperparams(const GpDataset& dataset, const TrainConfig& config) {
  dataset.validate();
  const Eigen::Index d = dataset.dim();
  const Eigen::Index T = dataset.size();

  // theta = [log l_1..d, log sigma_n]
  Eigen::VectorXd theta(d + 1);
  theta.head(d).setZero();  // lengthscales start at 1 (standardized inputs)
  theta(d) = std::log(std::max(config.noise_floor, 0.2));

  auto to_params = [&](const Eigen::VectorXd& th) {
    KernelParams p;
    p.lengthscales = th.head(d).array().exp();
    p.noise_std = std::exp(th(d));
    return p;
  };

  Eigen::VectorXd m_adam = Eigen::VectorXd::Zero(d + 1);
  Eigen::VectorXd v_adam = Eigen::VectorXd::Zero(d + 1);
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  long step = 0;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(T));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(config.seed);

  TrainResult result;
  result.params = to_params(theta);
  const double log_floor = std::log(config.noise_floor);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index start = 0; start < T; start += config.batch_size) {
      const Eigen::Index len = std::min<Eigen::Index>(config.batch_size, T - start);
      std::vector<Eigen::Index> batch(order.begin() + start,
                                      order.begin() + start + len);
      GpModel bm;
      double value;
      Eigen::VectorXd grad;
      try {
        bm = fit(to_params(theta), dataset.subset(batch));
        std::tie(value, grad) = log_marginal_likelihood(bm);
      } catch (const NumericalError&) {
        result.diverged = true;
        result.epochs_run = epoch;
        return result;
      }
      if (!std::isfinite(value) || !grad.allFinite()) {
        result.diverged = true;
        result.epochs_run = epoch;
        return result;
      }

      ++step;
      m_adam = b1 * m_adam + (1.0 - b1) * grad;
      v_adam = b2 * v_adam + (1.0 - b2) * grad.array().square().matrix();
      const Eigen::VectorXd mhat = m_adam / (1.0 - std::pow(b1, step));
      const Eigen::VectorXd vhat = v_adam / (1.0 - std::pow(b2, step));
      theta += config.learning_rate *
               (mhat.array() / (vhat.array().sqrt() + eps)).matrix();

      theta.head(d) = theta.head(d).cwiseMax(-10.0).cwiseMin(10.0);
      theta(d) = std::min(std::max(theta(d), log_floor), 10.0);
      result.params = to_params(theta);
    }
    result.epochs_run = epoch + 1;
  }
  return result;
}

}  // namespace kartmpc::gp
