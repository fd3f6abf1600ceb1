#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "kartmpc/gp_io.hpp"

using namespace kartmpc;
using namespace kartmpc::gp;

namespace {

ModelFile make_model(bool with_sod) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd x(20, 6);
  Eigen::VectorXd y(20);
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 6; ++j) x(i, j) = 3.0 * nd(rng);
    y(i) = nd(rng);
  }
  auto ds = GpDataset::from_raw(x, y);
  KernelParams p;
  p.lengthscales = Eigen::VectorXd::LinSpaced(6, 0.4, 2.2);
  p.noise_std = 0.21;
  ModelFile mf;
  mf.model = fit(p, ds);
  if (with_sod) mf.sod = sod_reduce(p, ds, 0.8);
  return mf;
}

std::string dump_to_string(const ModelFile& mf) {
  std::ostringstream os;
  save_model(os, mf);
  return os.str();
}

}  // namespace

TEST_CASE("gp_io: save/load/save cycle is byte-identical") {
  for (bool with_sod : {false, true}) {
    const ModelFile mf = make_model(with_sod);
    const std::string first = dump_to_string(mf);
    std::istringstream is(first);
    const ModelFile back = load_model(is);
    CHECK(dump_to_string(back) == first);
    CHECK(back.sod.has_value() == with_sod);
  }
}

TEST_CASE("gp_io: loaded model predicts bit-identically") {
  const ModelFile mf = make_model(true);
  std::istringstream is(dump_to_string(mf));
  const ModelFile back = load_model(is);

  std::mt19937_64 rng(13);
  std::normal_distribution<double> nd;
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::VectorXd q(6);
    for (int j = 0; j < 6; ++j) q(j) = 3.0 * nd(rng);
    CHECK(posterior_mean(mf.model, q) == posterior_mean(back.model, q));
    CHECK(posterior_variance(mf.model, q) == posterior_variance(back.model, q));
  }
  REQUIRE(back.sod.has_value());
  CHECK(back.sod->indices == mf.sod->indices);
  CHECK(back.sod->threshold_factor == mf.sod->threshold_factor);
}

TEST_CASE("gp_io: file path round trip") {
  const std::string path = "model_io_test.gp";
  const ModelFile mf = make_model(true);
  save_model(path, mf);
  const ModelFile back = load_model(path);
  CHECK(dump_to_string(back) == dump_to_string(mf));
  std::remove(path.c_str());
}

TEST_CASE("gp_io: garbage input rejected") {
  std::istringstream is("not a model file\n");
  CHECK_THROWS(load_model(is));
  CHECK_THROWS(load_model(std::string("/nonexistent/path/file.gp")));
}
