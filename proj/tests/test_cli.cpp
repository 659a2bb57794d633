#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "../tools/cli.hpp"
#include "doctest.h"
#include "hzmgp/io.hpp"

using namespace hzmgp;
namespace fs = std::filesystem;

namespace {

struct Captured {
  int code = -1;
  std::string out;
  std::string err;
};

Captured run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  auto* old_out = std::cout.rdbuf(out.rdbuf());
  auto* old_err = std::cerr.rdbuf(err.rdbuf());
  Captured c;
  c.code = cli::run(args);
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  c.out = out.str();
  c.err = err.str();
  return c;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "hzmgp_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void put(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

const char* kTinyConfig = R"({
  "seed": 3,
  "scenario": {"base": "scenario_II", "n": 60, "replicates": 2},
  "sampler": {"chains": 2, "iterations": 60, "burn_in": 30, "max_tree_depth": 6},
  "covariates": {"standardize": true},
  "diagnostics": {"warn_only": true}
})";

}  // namespace

TEST_CASE("argument errors") {
  CHECK(run_cli({}).code == cli::kInvalidInput);
  CHECK(run_cli({"frobnicate"}).code == cli::kInvalidInput);
  CHECK(run_cli({"fit"}).code == cli::kInvalidInput);
  CHECK(run_cli({"fit", "--data", "x.csv", "--seed", "abc"}).code == cli::kInvalidInput);
  const auto v = run_cli({"--version"});
  CHECK(v.code == cli::kOk);
  CHECK(v.out.find(io::kVersion) != std::string::npos);
}

TEST_CASE("invalid datasets exit with code 2") {
  const fs::path dir = scratch("invalid");
  put(dir / "nostatus.csv", "time,x\n1,2\n");
  auto r = run_cli({"fit", "--data", (dir / "nostatus.csv").string(), "--out", (dir / "o").string()});
  CHECK(r.code == cli::kInvalidInput);
  CHECK(r.err.find("status") != std::string::npos);

  put(dir / "censored.csv", "time,status,x\n1,0,2\n2,0,1\n");
  r = run_cli({"fit", "--data", (dir / "censored.csv").string(), "--out", (dir / "o").string()});
  CHECK(r.code == cli::kInvalidInput);
  CHECK(r.err.find("event") != std::string::npos);

  r = run_cli({"fit", "--data", (dir / "missing.csv").string()});
  CHECK(r.code == cli::kInvalidInput);

  put(dir / "bad.json", R"({"classification": {"alpha": 0.5}})");
  put(dir / "ok.csv", "time,status,x\n1,1,2\n2,0,1\n");
  r = run_cli({"fit", "--data", (dir / "ok.csv").string(), "--config", (dir / "bad.json").string()});
  CHECK(r.code == cli::kInvalidInput);
  CHECK(r.err.find("alpha") != std::string::npos);

  put(dir / "r0.json", R"({"scenario": {"base": "scenario_II", "replicates": 0}})");
  r = run_cli({"study", "--config", (dir / "r0.json").string(), "--out", (dir / "o").string()});
  CHECK(r.code == cli::kInvalidInput);
  CHECK(r.err.find("replicates") != std::string::npos);

  put(dir / "noscenario.json", "{}");
  r = run_cli({"simulate", "--config", (dir / "noscenario.json").string(), "--out", (dir / "o").string()});
  CHECK(r.code == cli::kInvalidInput);
}

TEST_CASE("simulate is deterministic in the seed") {
  const fs::path dir = scratch("simulate");
  put(dir / "cfg.json", kTinyConfig);
  const std::string cfg = (dir / "cfg.json").string();
  REQUIRE(run_cli({"simulate", "--config", cfg, "--out", (dir / "a").string()}).code == cli::kOk);
  REQUIRE(run_cli({"simulate", "--config", cfg, "--out", (dir / "b").string()}).code == cli::kOk);
  REQUIRE(run_cli({"simulate", "--config", cfg, "--seed", "4", "--out", (dir / "c").string()}).code == cli::kOk);
  CHECK(slurp(dir / "a" / "data.csv") == slurp(dir / "b" / "data.csv"));
  CHECK(slurp(dir / "a" / "truth_subjects.csv") == slurp(dir / "b" / "truth_subjects.csv"));
  CHECK(slurp(dir / "a" / "data.csv") != slurp(dir / "c" / "data.csv"));
  const io::Dataset d = io::read_dataset(dir / "a" / "data.csv");
  CHECK(d.size() == 60);
  CHECK(d.covariate_names == std::vector<std::string>{"x1", "x2"});
  CHECK(slurp(dir / "a" / "truth.json").find("\"seed\": 3") != std::string::npos);
}

TEST_CASE("fit then classify") {
  const fs::path dir = scratch("roundtrip");
  put(dir / "cfg.json", kTinyConfig);
  const std::string cfg = (dir / "cfg.json").string();
  REQUIRE(run_cli({"simulate", "--config", cfg, "--out", (dir / "sim").string()}).code == cli::kOk);
  const std::string data = (dir / "sim" / "data.csv").string();
  const auto f = run_cli({"fit", "--config", cfg, "--data", data, "--out", (dir / "fit").string()});
  REQUIRE(f.code == cli::kOk);
  for (const char* name : {"draws.csv", "summary.csv", "summary_original_scale.csv", "diagnostics.csv", "manifest.json"})
    CHECK(fs::exists(dir / "fit" / name));
  const PosteriorDraws draws = io::read_draws(dir / "fit" / "draws.csv", 2);
  CHECK(draws.draws.rows() == 60);
  CHECK(draws.layout.n_omega == 3);

  const auto c = run_cli({"classify", "--draws", (dir / "fit" / "draws.csv").string(), "--data", data, "--out",
                          (dir / "cls").string()});
  REQUIRE(c.code == cli::kOk);
  CHECK(c.out.find("GP ") != std::string::npos);
  CHECK(c.out.find("unclassifiable") != std::string::npos);
  const std::string table = slurp(dir / "cls" / "classification.csv");
  CHECK(std::count(table.begin(), table.end(), '\n') == 61);

  const auto bad_alpha = run_cli({"classify", "--draws", (dir / "fit" / "draws.csv").string(), "--data", data,
                                  "--alpha", "0.5", "--out", (dir / "cls").string()});
  CHECK(bad_alpha.code == cli::kInvalidInput);

  put(dir / "narrow.csv", "time,status,x1\n1,1,0.2\n2,0,0.1\n");
  const auto mismatch = run_cli({"classify", "--draws", (dir / "fit" / "draws.csv").string(), "--data",
                                 (dir / "narrow.csv").string(), "--out", (dir / "cls").string()});
  CHECK(mismatch.code == cli::kInvalidInput);
}

TEST_CASE("rhat above the limit exits with code 4 unless warn_only") {
  const fs::path dir = scratch("rhat");
  put(dir / "sim.json", kTinyConfig);
  REQUIRE(run_cli({"simulate", "--config", (dir / "sim.json").string(), "--out", (dir / "sim").string()}).code ==
          cli::kOk);
  // a limit of exactly 1 cannot be met by finite chains
  put(dir / "strict.json", R"({"seed": 2, "sampler": {"chains": 2, "iterations": 40, "burn_in": 20,
    "max_tree_depth": 5}, "diagnostics": {"rhat_limit": 1.0}})");
  const auto r = run_cli({"fit", "--config", (dir / "strict.json").string(), "--data",
                          (dir / "sim" / "data.csv").string(), "--out", (dir / "fit").string()});
  CHECK(r.code == cli::kDiagnosticsFailure);
  CHECK(fs::exists(dir / "fit" / "draws.csv"));
}

TEST_CASE("classify with point-mass draws matches the deterministic taxonomy") {
  const fs::path dir = scratch("pointmass");
  // omega = sigmoid(b0 + b1 x), mu = exp(c0 + c1 x), phi = exp(-1)
  const double b0 = 0.4, b1 = 1.5, c0 = 1.0, c1 = 0.3, log_phi = -1.0;
  std::ostringstream draws;
  draws << "beta_omega_0,beta_omega_1,beta_mu_0,beta_mu_1,theta_phi,theta_lambda,theta_gamma\n";
  for (int k = 0; k < 4; ++k)
    draws << b0 << ',' << b1 << ',' << c0 << ',' << c1 << ',' << log_phi << ",0,0\n";
  put(dir / "draws.csv", draws.str());
  const std::vector<double> xs = {-3.0, -1.0, 0.0, 0.7, 2.0, 4.0};
  std::ostringstream data;
  data << "time,status,x\n";
  for (double x : xs) data << "1,0," << x << '\n';
  put(dir / "data.csv", data.str());

  const auto r = run_cli({"classify", "--draws", (dir / "draws.csv").string(), "--data", (dir / "data.csv").string(),
                          "--out", (dir / "out").string()});
  REQUIRE(r.code == cli::kOk);
  std::istringstream table(slurp(dir / "out" / "classification.csv"));
  std::string line;
  std::getline(table, line);
  for (double x : xs) {
    REQUIRE(std::getline(table, line));
    const double omega = 1.0 / (1.0 + std::exp(-(b0 + b1 * x)));
    const double mu = std::exp(c0 + c1 * x);
    const auto expected = classify_by_value(HzmgpParams(omega, GpParams(mu, std::exp(log_phi))));
    CHECK(line.find("," + std::string(to_string(expected)) + ",") != std::string::npos);
  }
}

TEST_CASE("study output is byte-identical for a fixed seed") {
  const fs::path dir = scratch("study");
  put(dir / "cfg.json", kTinyConfig);
  put(dir / "cfg2.json", R"({
    "seed": 3,
    "scenario": {"base": "scenario_II", "n": 60, "replicates": 2},
    "sampler": {"chains": 2, "iterations": 60, "burn_in": 30, "max_tree_depth": 6},
    "covariates": {"standardize": true},
    "diagnostics": {"warn_only": true},
    "study": {"replicate_workers": 2}
  })");
  REQUIRE(run_cli({"study", "--config", (dir / "cfg.json").string(), "--out", (dir / "a").string()}).code ==
          cli::kOk);
  REQUIRE(run_cli({"study", "--config", (dir / "cfg.json").string(), "--out", (dir / "b").string()}).code ==
          cli::kOk);
  REQUIRE(run_cli({"study", "--config", (dir / "cfg2.json").string(), "--out", (dir / "c").string()}).code ==
          cli::kOk);
  for (const char* name : {"report.csv", "replicates.csv", "summary.txt"}) {
    CHECK(slurp(dir / "a" / name) == slurp(dir / "b" / name));
    CHECK(slurp(dir / "a" / name) == slurp(dir / "c" / name));
  }
  CHECK(fs::exists(dir / "a" / "timing.csv"));
  CHECK(fs::exists(dir / "a" / "manifest.json"));
  CHECK(slurp(dir / "a" / "report.csv").rfind("parameter,truth,mean,sd,cp", 0) == 0);
}
