#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "hzmgp/io.hpp"

using namespace hzmgp;
using namespace hzmgp::io;
using doctest::Contains;

namespace {

Dataset parse(const std::string& text) {
  std::istringstream in(text);
  return read_dataset(in);
}

PosteriorDraws sample_draws() {
  PosteriorDraws d;
  d.layout.n_omega = 2;
  d.layout.n_mu = 1;
  d.names = d.layout.names();
  d.chains = 2;
  d.draws_per_chain = 4;
  d.draws.resize(8, d.layout.dim());
  for (Eigen::Index i = 0; i < 8; ++i)
    for (Eigen::Index j = 0; j < d.layout.dim(); ++j) d.draws(i, j) = 0.1 * i - 0.37 * j + 1.0 / 3.0;
  return d;
}

}  // namespace

TEST_CASE("read_dataset parses and validates") {
  const Dataset d = parse("time,status,age,male\n1.5,1,60,1\n2,0,55.5,0\n0,0,70,1\n");
  CHECK(d.size() == 3);
  REQUIRE(d.covariate_names == std::vector<std::string>{"age", "male"});
  CHECK(d.records[0].time == 1.5);
  CHECK(d.records[0].event);
  CHECK_FALSE(d.records[1].event);
  CHECK(d.records[1].covariates(0) == 55.5);
  CHECK(d.column("male") == 1);
  CHECK(d.has_event());
  CHECK(is_binary(d, 1));
  CHECK_FALSE(is_binary(d, 0));
  CHECK_THROWS_WITH_AS(d.column("weight"), Contains("'weight'"), DataError);

  // column order is free and CRLF line endings are accepted
  const Dataset swapped = parse("x,status,time\r\n0.5,1,3\r\n");
  CHECK(swapped.records[0].time == 3.0);
  CHECK(swapped.records[0].covariates(0) == 0.5);

  CHECK_THROWS_WITH_AS(parse("time,age\n1,2\n"), Contains("missing required column 'status'"), DataError);
  CHECK_THROWS_WITH_AS(parse("status,age\n1,2\n"), Contains("missing required column 'time'"), DataError);
  CHECK_THROWS_WITH_AS(parse("time,status,a,a\n1,1,2,3\n"), Contains("duplicate column 'a'"), DataError);
  CHECK_THROWS_WITH_AS(parse("time,status,a\n1,1\n"), Contains("expected 3 fields"), DataError);
  CHECK_THROWS_WITH_AS(parse("time,status,a\n1,1,NA\n"), Contains("missing value in column 'a'"), DataError);
  CHECK_THROWS_WITH_AS(parse("time,status,a\n1,1,\n"), Contains("missing value in column 'a'"), DataError);
  CHECK_THROWS_WITH_AS(parse("time,status,a\n1,1,abc\n"), Contains("non-numeric value 'abc'"), DataError);
  CHECK_THROWS_WITH_AS(parse("time,status\n1,2\n"), Contains("'status' must be 0 or 1"), DataError);
  CHECK_THROWS_WITH_AS(parse("time,status\n-1,0\n"), Contains("non-negative"), DataError);
  CHECK_THROWS_WITH_AS(parse("time,status\n0,1\n"), Contains("> 0 when status = 1"), DataError);
  CHECK_THROWS_WITH_AS(parse("time,status\n"), Contains("no data rows"), DataError);
  CHECK_THROWS_AS(parse(""), DataError);
  CHECK_THROWS_AS(read_dataset(std::filesystem::path("/nonexistent/file.csv")), DataError);
  CHECK_FALSE(parse("time,status\n1,0\n").has_event());
}

TEST_CASE("dataset round trip") {
  const Dataset d = parse("time,status,age,male\n1.5,1,60.125,1\n0.1,0,-3e-5,0\n");
  std::ostringstream out;
  write_dataset(out, d);
  const Dataset back = parse(out.str());
  REQUIRE(back.size() == d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(back.records[i].time == d.records[i].time);
    CHECK(back.records[i].event == d.records[i].event);
    CHECK(back.records[i].covariates == d.records[i].covariates);
  }
}

TEST_CASE("standardization") {
  Dataset d = parse("time,status,age,male\n1,1,50,1\n2,0,60,0\n3,1,70,1\n");
  const Standardization s = Standardization::fit(d);
  REQUIRE(s.columns.size() == 1);
  CHECK(s.columns.at("age").first == doctest::Approx(60.0));
  CHECK(s.columns.at("age").second == doctest::Approx(10.0));
  s.apply(d);
  CHECK(d.records[0].covariates(0) == doctest::Approx(-1.0));
  CHECK(d.records[2].covariates(0) == doctest::Approx(1.0));
  CHECK(d.records[0].covariates(1) == 1.0);
  const Standardization back = Standardization::from_json(s.to_json());
  CHECK(back.columns == s.columns);
  CHECK_THROWS_AS(Standardization::from_json(nlohmann::json::parse(R"({"age":{"mean":1,"sd":0}})")), DataError);
  CHECK_THROWS_AS(Standardization::from_json(nlohmann::json::parse(R"({"age":{"mean":1}})")), DataError);
}

TEST_CASE("config parsing") {
  const RunConfig defaults = parse_config(nlohmann::json::object());
  CHECK(defaults.sampler.chains == 3);
  CHECK(defaults.sampler.iterations == 1000);
  CHECK(defaults.classification.alpha == 0.1);
  CHECK(defaults.standardize);
  CHECK_FALSE(defaults.seed.has_value());

  const auto j = nlohmann::json::parse(R"({
    "description": "x", "seed": 5,
    "prior": {"sd": 4},
    "sampler": {"chains": 2, "iterations": 200, "burn_in": 100, "metric": "dense"},
    "classification": {"alpha": 0.2},
    "covariates": {"omega": ["a"], "standardize": false},
    "diagnostics": {"rhat_limit": 1.1, "warn_only": true},
    "study": {"replicate_workers": 2},
    "scenario": {"base": "scenario_I", "n": 40, "replicates": 2}
  })");
  const RunConfig cfg = parse_config(j);
  CHECK(*cfg.seed == 5);
  CHECK(cfg.prior.sd == 4.0);
  CHECK(cfg.sampler.chains == 2);
  CHECK(cfg.sampler.metric == SamplerConfig::Metric::Dense);
  CHECK(cfg.classification.alpha == 0.2);
  CHECK(*cfg.omega_covariates == std::vector<std::string>{"a"});
  CHECK_FALSE(cfg.mu_covariates.has_value());
  CHECK_FALSE(cfg.standardize);
  CHECK(cfg.diagnostics.warn_only);
  CHECK(cfg.replicate_workers == 2);
  REQUIRE(cfg.scenario.has_value());
  CHECK(cfg.scenario->n == 40);
  CHECK(cfg.scenario->phi == 0.25);
  CHECK(cfg.fit_config().replicate_workers == 2);

  // to_json reproduces the same configuration
  const RunConfig again = parse_config(cfg.to_json());
  CHECK(again.to_json() == cfg.to_json());

  auto bad = [](const char* text) { return parse_config(nlohmann::json::parse(text)); };
  CHECK_THROWS_WITH_AS(bad(R"({"sampler": {"chain": 2}})"), Contains("unknown key 'chain'"), DataError);
  CHECK_THROWS_WITH_AS(bad(R"({"bogus": 1})"), Contains("unknown key 'bogus'"), DataError);
  CHECK_THROWS_AS(bad(R"({"classification": {"alpha": 0.5}})"), DataError);
  CHECK_THROWS_AS(bad(R"({"sampler": {"iterations": 10, "burn_in": 10}})"), DataError);
  CHECK_THROWS_AS(bad(R"({"sampler": {"metric": "full"}})"), DataError);
  CHECK_THROWS_AS(bad(R"({"prior": {"sd": -1}})"), DataError);
  CHECK_THROWS_AS(bad(R"({"scenario": {"base": "scenario_III"}})"), DataError);
  CHECK_THROWS_AS(bad(R"({"scenario": {"base": "scenario_II", "replicates": 0}})"), DataError);
  CHECK_THROWS_AS(bad(R"({"sampler": {"chains": "three"}})"), DataError);
  CHECK_THROWS_AS(bad(R"({"study": {"replicate_workers": 0}})"), DataError);
  CHECK_THROWS_AS(bad(R"({"diagnostics": {"rhat_limit": 0.9}})"), DataError);
  CHECK_THROWS_AS(bad(R"([1, 2])"), DataError);

  const auto dir = std::filesystem::temp_directory_path() / "hzmgp_test_io";
  std::filesystem::create_directories(dir);
  write_text(dir / "broken.json", "{ not json");
  CHECK_THROWS_WITH_AS(read_config(dir / "broken.json"), Contains("not valid JSON"), DataError);
}

TEST_CASE("scenario json round trip") {
  const ScenarioSpec s = ScenarioSpec::scenario_two();
  const ScenarioSpec back = scenario_from_json(scenario_to_json(s));
  CHECK(back.name == s.name);
  CHECK(back.beta_omega == s.beta_omega);
  CHECK(back.beta_mu == s.beta_mu);
  CHECK(back.tau == s.tau);
  REQUIRE(back.covariates.size() == 2);
  CHECK(back.covariates[1].kind == CovariateLaw::Kind::Bernoulli);
  CHECK_THROWS_AS(scenario_from_json(nlohmann::json::parse(
                      R"({"base": "scenario_II", "covariates": [{"name": "z", "dist": "gamma"}]})")),
                  DataError);
  // one covariate removed without shortening the coefficients
  CHECK_THROWS_AS(scenario_from_json(nlohmann::json::parse(
                      R"({"base": "scenario_II", "covariates": [{"name": "z", "dist": "normal"}]})")),
                  DataError);
}

TEST_CASE("predictor columns") {
  const Dataset d = parse("time,status,a,b,c\n1,1,0.5,1,2\n2,0,0.1,0,3\n");
  RunConfig cfg;
  PredictorColumns cols = resolve_columns(d, cfg);
  CHECK(cols.omega == d.covariate_names);
  cfg.omega_covariates = std::vector<std::string>{"c"};
  cfg.mu_covariates = std::vector<std::string>{};
  cols = resolve_columns(d, cfg);
  const SurvivalData data = to_survival_data(d, cols);
  CHECK(data.x_omega.cols() == 2);
  CHECK(data.x_omega(1, 1) == 3.0);
  CHECK(data.x_mu.cols() == 1);
  cfg.mu_covariates = std::vector<std::string>{"zz"};
  CHECK_THROWS_WITH_AS(resolve_columns(d, cfg), Contains("'zz'"), DataError);
}

TEST_CASE("draws round trip") {
  const PosteriorDraws d = sample_draws();
  std::ostringstream out;
  write_draws(out, d);
  std::istringstream in(out.str());
  const PosteriorDraws back = read_draws(in, 2);
  CHECK(back.layout.n_omega == 2);
  CHECK(back.layout.n_mu == 1);
  CHECK(back.chains == 2);
  CHECK(back.draws_per_chain == 4);
  CHECK(back.draws == d.draws);
  CHECK(back.names == d.names);

  std::istringstream odd(out.str());
  CHECK_THROWS_AS(read_draws(odd, 3), DataError);
  std::istringstream header_only("beta_omega_0,beta_mu_0,theta_phi,theta_lambda,theta_gamma\n");
  CHECK_THROWS_WITH_AS(read_draws(header_only), Contains("no rows"), DataError);
  std::istringstream wrong("a,b,c\n1,2,3\n");
  CHECK_THROWS_AS(read_draws(wrong), DataError);
  std::istringstream nan_value("beta_omega_0,beta_mu_0,theta_phi,theta_lambda,theta_gamma\n1,2,nan,4,5\n");
  CHECK_THROWS_WITH_AS(read_draws(nan_value), Contains("invalid value"), DataError);
  std::istringstream empty("");
  CHECK_THROWS_AS(read_draws(empty), DataError);
}

TEST_CASE("report writers") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0 / 3.0) == "0.3333333333333333");
  CHECK(format_double(-2.0) == "-2");
  CHECK(format_double(std::nan("")) == "NA");
  CHECK(std::stod(format_double(1e-300)) == 1e-300);

  std::ostringstream sum;
  write_summary(sum, {{"phi", 0.5, 0.1, 0.3, 0.7}});
  CHECK(sum.str() == "parameter,mean,sd,q2.5,q97.5\nphi,0.5,0.1,0.3,0.7\n");

  PopulationClassification pc;
  pc.subjects.push_back({0, ZeroModClass::GP, 0.5, 1.0});
  pc.subjects.push_back({1, std::nullopt, 0.0, 0.5});
  pc.proportions = {0.0, 0.5, 0.0, 0.0};
  pc.unclassifiable = 0.5;
  std::ostringstream cls;
  write_classification(cls, pc);
  const std::string text = cls.str();
  CHECK(text.find("1,GP,0.5,1") != std::string::npos);
  CHECK(text.find("2,unclassifiable,0,0.5") != std::string::npos);
  const auto pj = population_to_json(pc, 0.1);
  CHECK(pj.dump().find("unclassifiable") != std::string::npos);

  PosteriorDraws d = sample_draws();
  d.compute_diagnostics();
  std::ostringstream diag;
  write_diagnostics(diag, d);
  CHECK(diag.str().rfind("parameter,rhat,ess,ess_degenerate", 0) == 0);
  CHECK(diag.str().find("divergences") != std::string::npos);
}
