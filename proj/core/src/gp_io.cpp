#include "kartmpc/gp_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace kartmpc::gp {

namespace {

constexpr const char* kMagic = "kartmpc-gp-model";
constexpr int kVersion = 1;

std::string hexd(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

double parse_hexd(const std::string& tok) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str()) throw std::invalid_argument("model file: bad number '" + tok + "'");
  return v;
}

void write_vec(std::ostream& os, const char* name, const Eigen::VectorXd& v) {
  os << name;
  for (Eigen::Index i = 0; i < v.size(); ++i) os << ' ' << hexd(v(i));
  os << '\n';
}

std::string expect_line(std::istream& is, const std::string& key) {
  std::string line;
  if (!std::getline(is, line))
    throw std::invalid_argument("model file: truncated, expected '" + key + "'");
  if (line.rfind(key, 0) != 0)
    throw std::invalid_argument("model file: expected '" + key + "', got '" + line + "'");
  return line.substr(key.size());
}

Eigen::VectorXd parse_vec(const std::string& body, Eigen::Index expected) {
  std::istringstream ss(body);
  std::vector<double> vals;
  std::string tok;
  while (ss >> tok) vals.push_back(parse_hexd(tok));
  if (expected >= 0 && static_cast<Eigen::Index>(vals.size()) != expected)
    throw std::invalid_argument("model file: wrong vector length");
  return Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

}  // namespace

void save_model(std::ostream& os, const ModelFile& mf) {
  const GpModel& m = mf.model;
  const Eigen::Index T = m.dataset.size(), d = m.dataset.dim();
  os << kMagic << " v" << kVersion << '\n';
  os << "dims " << T << ' ' << d << '\n';
  write_vec(os, "lengthscales", m.params.lengthscales);
  os << "noise_std " << hexd(m.params.noise_std) << '\n';
  os << "jitter " << hexd(m.params.jitter) << ' ' << hexd(m.jitter_used) << '\n';
  write_vec(os, "input_shift", m.dataset.input_shift);
  write_vec(os, "input_scale", m.dataset.input_scale);
  os << "target_std " << hexd(m.dataset.target_shift) << ' '
     << hexd(m.dataset.target_scale) << '\n';
  for (Eigen::Index i = 0; i < T; ++i)
    write_vec(os, "x", m.dataset.inputs.row(i).transpose());
  write_vec(os, "y", m.dataset.targets);
  write_vec(os, "alpha", m.alpha);
  if (mf.sod) {
    os << "sod " << mf.sod->indices.size() << ' '
       << hexd(mf.sod->threshold_factor) << '\n';
    os << "sod_indices";
    for (auto i : mf.sod->indices) os << ' ' << i;
    os << '\n';
    write_vec(os, "sod_lengthscales", mf.sod->params.lengthscales);
    os << "sod_noise_std " << hexd(mf.sod->params.noise_std) << '\n';
  }
}

void save_model(const std::string& path, const ModelFile& mf) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write model file: " + path);
  save_model(os, mf);
}

ModelFile load_model(std::istream& is) {
  ModelFile mf;
  GpModel& m = mf.model;

  {
    std::string header = expect_line(is, kMagic);
    std::istringstream ss(header);
    std::string ver;
    ss >> ver;
    if (ver != "v1")
      throw std::invalid_argument("model file: unsupported version '" + ver + "'");
  }
  Eigen::Index T = 0, d = 0;
  {
    std::istringstream ss(expect_line(is, "dims"));
    if (!(ss >> T >> d) || T < 1 || d < 1)
      throw std::invalid_argument("model file: bad dims");
  }
  m.params.lengthscales = parse_vec(expect_line(is, "lengthscales"), d);
  m.params.noise_std = parse_hexd(expect_line(is, "noise_std"));
  {
    std::istringstream ss(expect_line(is, "jitter"));
    std::string a, b;
    ss >> a >> b;
    m.params.jitter = parse_hexd(a);
    m.jitter_used = parse_hexd(b);
  }
  m.dataset.input_shift = parse_vec(expect_line(is, "input_shift"), d);
  m.dataset.input_scale = parse_vec(expect_line(is, "input_scale"), d);
  {
    std::istringstream ss(expect_line(is, "target_std"));
    std::string a, b;
    ss >> a >> b;
    m.dataset.target_shift = parse_hexd(a);
    m.dataset.target_scale = parse_hexd(b);
  }
  m.dataset.inputs.resize(T, d);
  for (Eigen::Index i = 0; i < T; ++i)
    m.dataset.inputs.row(i) = parse_vec(expect_line(is, "x"), d).transpose();
  m.dataset.targets = parse_vec(expect_line(is, "y"), T);
  m.alpha = parse_vec(expect_line(is, "alpha"), T);

  // Cholesky is not stored; rebuild it so the model is usable directly.
  Eigen::MatrixXd K = gram_matrix(m.params, m.dataset.inputs);
  K.diagonal().array() += m.params.noise_std * m.params.noise_std + m.jitter_used;
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  if (llt.info() != Eigen::Success)
    throw NumericalError("model file: stored model is not positive definite");
  m.chol = llt.matrixL();

  std::string line;
  if (std::getline(is, line) && line.rfind("sod ", 0) == 0) {
    SodSet sod;
    std::size_t count = 0;
    {
      std::istringstream ss(line.substr(4));
      std::string thr;
      ss >> count >> thr;
      sod.threshold_factor = parse_hexd(thr);
    }
    {
      std::istringstream ss(expect_line(is, "sod_indices"));
      Eigen::Index idx;
      while (ss >> idx) sod.indices.push_back(idx);
      if (sod.indices.size() != count)
        throw std::invalid_argument("model file: sod index count mismatch");
    }
    sod.params.lengthscales = parse_vec(expect_line(is, "sod_lengthscales"), d);
    sod.params.noise_std = parse_hexd(expect_line(is, "sod_noise_std"));
    mf.sod = std::move(sod);
  }
  return mf;
}

ModelFile load_model(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read model file: " + path);
  return load_model(is);
}

}  // namespace kartmpc::gp
