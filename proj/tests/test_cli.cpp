#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "doctest.h"
#include "kartmpc/gp_io.hpp"
#include "kartmpc/runlog.hpp"

namespace fs = std::filesystem;
using namespace kartmpc;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(KARTMPC_CLI_PATH) + " " + args +
                          " > /dev/null 2> /dev/null";
  const int status = std::system(cmd.c_str());
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return -1;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("kartmpc_cli_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

// small synthetic log with smooth targets, enough for a quick GP fit
void write_training_log(const fs::path& p, int n = 220) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  RunLog log;
  log.meta.sample_rate_hz = 100.0;
  log.meta.seed = 3;
  for (int i = 0; i < n; ++i) {
    RunSample s;
    s.t = i / 100.0;
    s.vx = 5.0 + nd(rng);
    s.vy = 0.2 * nd(rng);
    s.yaw_rate = 0.3 * nd(rng);
    s.gamma_cmd = nd(rng);
    s.beta_cmd = 0.1 * nd(rng);
    s.tau_v_cmd = 0.4 * nd(rng);
    s.vy_dot = 2.0 * s.beta_cmd * s.vx - 0.5 * s.vy + 0.02 * nd(rng);
    s.yaw_acc = 5.0 * s.beta_cmd - 0.8 * s.yaw_rate + 0.02 * nd(rng);
    s.s = 0.05 * i;
    log.samples.push_back(s);
  }
  save_runlog(p.string(), log);
}

void write_fast_config(const fs::path& p) {
  std::ofstream os(p);
  os << "train_epochs 25\ntrain_batch_size 64\nseed 3\n";
}

}  // namespace

TEST_CASE("cli: help succeeds, bad usage fails with 2") {
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("train --help") == 0);
  CHECK(run_cli("no-such-command") == 2);
  CHECK(run_cli("simulate --no-such-flag") == 2);
  CHECK(run_cli("train") == 2);  // --log is required
}

TEST_CASE("cli: generate-track writes a deterministic track file") {
  TempDir a("track_a"), b("track_b");
  REQUIRE(run_cli("generate-track --out " + a.str()) == 0);
  REQUIRE(run_cli("generate-track --out " + b.str()) == 0);
  const fs::path fa = a.path / "track.txt";
  REQUIRE(fs::exists(fa));
  CHECK(read_file(fa) == read_file(b.path / "track.txt"));
  CHECK(fs::file_size(fa) > 1000);
}

TEST_CASE("cli: train then reduce round trip through model files") {
  TempDir dir("train");
  const fs::path log = dir.path / "record.csv";
  const fs::path cfg = dir.path / "run.cfg";
  write_training_log(log);
  write_fast_config(cfg);

  REQUIRE(run_cli("train --log " + log.string() + " --config " + cfg.string() +
                  " --out " + dir.str()) == 0);
  const fs::path lat = dir.path / "models.lateral.gp";
  const fs::path yaw = dir.path / "models.yaw.gp";
  REQUIRE(fs::exists(lat));
  REQUIRE(fs::exists(yaw));
  const gp::ModelFile before = gp::load_model(lat.string());
  CHECK(before.model.dataset.size() > 50);
  CHECK(before.model.params.noise_std >= 0.15 - 1e-12);

  REQUIRE(run_cli("reduce --models " + (dir.path / "models").string() +
                  " --threshold 0.5 --out " + dir.str()) == 0);
  const gp::ModelFile after = gp::load_model(lat.string());
  REQUIRE(after.sod.has_value());
  CHECK(after.sod->threshold_factor == doctest::Approx(0.5));
  CHECK(after.sod->indices.size() <=
        static_cast<std::size_t>(after.model.dataset.size()));
  CHECK(!after.sod->indices.empty());
}

TEST_CASE("cli: train is idempotent for a fixed seed") {
  TempDir a("idem_a"), b("idem_b");
  const fs::path log = a.path / "record.csv";
  const fs::path cfg = a.path / "run.cfg";
  write_training_log(log);
  write_fast_config(cfg);
  REQUIRE(run_cli("train --log " + log.string() + " --config " + cfg.string() +
                  " --out " + a.str()) == 0);
  REQUIRE(run_cli("train --log " + log.string() + " --config " + cfg.string() +
                  " --out " + b.str()) == 0);
  CHECK(read_file(a.path / "models.lateral.gp") ==
        read_file(b.path / "models.lateral.gp"));
  CHECK(read_file(a.path / "models.yaw.gp") ==
        read_file(b.path / "models.yaw.gp"));
}

TEST_CASE("cli: evaluate produces the metric report") {
  TempDir dir("eval");
  const fs::path log = dir.path / "record.csv";
  const fs::path cfg = dir.path / "run.cfg";
  write_training_log(log);
  write_fast_config(cfg);
  REQUIRE(run_cli("train --log " + log.string() + " --config " + cfg.string() +
                  " --out " + dir.str()) == 0);
  REQUIRE(run_cli("reduce --models " + (dir.path / "models").string() +
                  " --out " + dir.str()) == 0);
  REQUIRE(run_cli("evaluate --log " + log.string() + " --models " +
                  (dir.path / "models").string() + " --out " + dir.str()) == 0);
  const fs::path csv = dir.path / "report.csv";
  REQUIRE(fs::exists(csv));
  const std::string text = read_file(csv);
  CHECK(text.find("rmse_vy_dot") != std::string::npos);
  CHECK(text.find("gp-full") != std::string::npos);
  CHECK(fs::exists(dir.path / "report.txt"));
}

TEST_CASE("cli: record with the scripted driver writes a valid log") {
  TempDir dir("record");
  REQUIRE(run_cli("record --driver scripted --laps 1 --seed 11 --out " +
                  dir.str()) == 0);
  const fs::path csv = dir.path / "record.csv";
  REQUIRE(fs::exists(csv));
  const RunLog log = load_runlog(csv.string());
  CHECK_NOTHROW(log.validate());
  CHECK(log.samples.size() > 500);
  CHECK(log.meta.seed == 11);
}

TEST_CASE("cli: runtime failures exit 1 and leave an error note") {
  TempDir dir("err");
  CHECK(run_cli("train --log /nonexistent/missing.csv --out " + dir.str()) ==
        1);
  CHECK(fs::exists(dir.path / "error.txt"));
  CHECK(run_cli("simulate --controller blackbox --models /nonexistent/m "
                "--laps 1 --out " +
                dir.str()) == 1);
}
