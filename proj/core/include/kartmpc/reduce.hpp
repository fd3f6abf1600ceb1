#pragma once

#include <memory>
#include <vector>

#include "kartmpc/gp.hpp"

namespace kartmpc::gp {

// Offline Subset-of-Data selection: dataset row indices kept because their
// posterior variance under the growing subset exceeded
// threshold_factor * sigma_n^2. Row 0 is always present.
struct SodSet {
  std::vector<Eigen::Index> indices;  // strictly increasing
  double threshold_factor = 1.0;
  KernelParams params;  // hyperparameters frozen during selection
};

SodSet sod_reduce(const KernelParams& params, const GpDataset& dataset,
                  double threshold_factor = 1.0);

// Lengthscale-weighted squared distance; equals -ln kernel_eval(a, b).
double weighted_distance(const KernelParams& params, const Eigen::VectorXd& a,
                         const Eigen::VectorXd& b);

// The t_nn SoD points closest to the query (physical units) under the
// weighted metric. Ties broken by lower dataset index.
std::vector<Eigen::Index> nn_select(const SodSet& sod, const GpDataset& dataset,
                                    const Eigen::VectorXd& query_raw, int t_nn);

// Small GP refitted over a neighbor subset; shares the source dataset's
// standardizers so predictions stay in physical units.
struct LocalModel {
  std::vector<Eigen::Index> indices;  // into the source dataset
  GpModel model;
  Eigen::VectorXd anchor_raw;  // query that selected the neighbors
};

LocalModel build_local_model(const GpDataset& dataset, const KernelParams& params,
                             const std::vector<Eigen::Index>& indices);

// One local model per shooting node; nodes with identical neighbor sets share
// one factorization. Output order matches anchor order.
std::vector<std::shared_ptr<const LocalModel>> select_along_horizon(
    const SodSet& sod, const GpDataset& dataset,
    const std::vector<Eigen::VectorXd>& anchors_raw, int t_nn);

}  // namespace kartmpc::gp
