#include "kartmpc/reduce.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace kartmpc::gp {

SodSet sod_reduce(const KernelParams& params, const GpDataset& dataset,
                  double threshold_factor) {
  dataset.validate();
  params.validate();
  if (threshold_factor < 0.0)
    throw std::invalid_argument("sod_reduce: threshold_factor must be >= 0");

  SodSet sod;
  sod.threshold_factor = threshold_factor;
  sod.params = params;
  sod.indices = {0};

  const double threshold =
      threshold_factor * params.noise_std * params.noise_std;
  GpModel current = fit(params, dataset.subset(sod.indices));
  for (Eigen::Index j = 1; j < dataset.size(); ++j) {
    const double var =
        posterior_variance_std(current, dataset.inputs.row(j).transpose());
    if (var > threshold) {
      sod.indices.push_back(j);
      current = fit(params, dataset.subset(sod.indices));
    }
  }
  return sod;
}

double weighted_distance(const KernelParams& params, const Eigen::VectorXd& a,
                         const Eigen::VectorXd& b) {
  if (a.size() != b.size() || a.size() != params.lengthscales.size())
    throw std::invalid_argument("weighted_distance: dimension mismatch");
  return ((a - b).cwiseQuotient(params.lengthscales)).squaredNorm();
}

std::vector<Eigen::Index> nn_select(const SodSet& sod, const GpDataset& dataset,
                                    const Eigen::VectorXd& query_raw, int t_nn) {
  if (sod.indices.empty()) throw std::invalid_argument("nn_select: empty SoD set");
  if (t_nn < 1) throw std::invalid_argument("nn_select: t_nn must be >= 1");

  if (static_cast<std::size_t>(t_nn) >= sod.indices.size()) return sod.indices;

  const Eigen::VectorXd q = dataset.standardize_input(query_raw);
  std::vector<std::pair<double, Eigen::Index>> by_dist;
  by_dist.reserve(sod.indices.size());
  for (Eigen::Index idx : sod.indices) {
    by_dist.emplace_back(
        weighted_distance(sod.params, q, dataset.inputs.row(idx).transpose()),
        idx);
  }
  // pair ordering gives the lower-index tie-break
  std::stable_sort(by_dist.begin(), by_dist.end());

  std::vector<Eigen::Index> out(static_cast<std::size_t>(t_nn));
  for (int i = 0; i < t_nn; ++i) out[static_cast<std::size_t>(i)] = by_dist[i].second;
  std::sort(out.begin(), out.end());
  return out;
}

LocalModel build_local_model(const GpDataset& dataset, const KernelParams& params,
                             const std::vector<Eigen::Index>& indices) {
  LocalModel lm;
  lm.indices = indices;
  lm.model = fit(params, dataset.subset(indices));
  return lm;
}

std::vector<std::shared_ptr<const LocalModel>> select_along_horizon(
    const SodSet& sod, const GpDataset& dataset,
    const std::vector<Eigen::VectorXd>& anchors_raw, int t_nn) {
  std::vector<std::shared_ptr<const LocalModel>> out;
  out.reserve(anchors_raw.size());
  std::map<std::vector<Eigen::Index>, std::shared_ptr<const LocalModel>> cache;
  for (const auto& anchor : anchors_raw) {
    auto idx = nn_select(sod, dataset, anchor, t_nn);
    auto it = cache.find(idx);
    if (it == cache.end()) {
      auto lm = std::make_shared<LocalModel>(
          build_local_model(dataset, sod.params, idx));
      lm->anchor_raw = anchor;
      it = cache.emplace(std::move(idx), std::move(lm)).first;
    }
    out.push_back(it->second);
  }
  return out;
}

}  // namespace kartmpc::gp
