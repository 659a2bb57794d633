#include "hzmgp/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "hzmgp/nuts.hpp"

namespace hzmgp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

CovariateLaw standard_normal(std::string name) {
  return {std::move(name), CovariateLaw::Kind::Normal, 0.0, 1.0, 0.5};
}

CovariateLaw fair_bernoulli(std::string name) {
  return {std::move(name), CovariateLaw::Kind::Bernoulli, 0.0, 1.0, 0.5};
}

}  // namespace

ReplicateResult run_replicate(const ScenarioSpec& spec, const FitConfig& fit, std::uint64_t seed, int r);

double CovariateLaw::draw(Rng& rng) const {
  if (kind == Kind::Bernoulli) return std::bernoulli_distribution(p)(rng) ? 1.0 : 0.0;
  return std::normal_distribution<double>(mean, sd)(rng);
}

void ScenarioSpec::validate() const {
  auto fail = [this](const std::string& msg) {
    throw std::invalid_argument("scenario '" + name + "': " + msg);
  };
  if (n < 1) fail("n must be >= 1");
  if (replicates < 1) fail("replicates must be >= 1");
  if (!(tau > 0.0)) fail("tau must be > 0");
  if (!(phi > 0.0)) fail("phi must be > 0");
  if (!(lambda > 0.0) || !(gamma > 0.0)) fail("lambda and gamma must be > 0");
  const auto p = static_cast<Eigen::Index>(covariates.size());
  if (beta_omega.size() != p + 1) fail("beta_omega needs one intercept plus one slope per covariate");
  if (beta_mu.size() != p + 1) fail("beta_mu needs one intercept plus one slope per covariate");
  for (const auto& c : covariates) {
    if (c.kind == CovariateLaw::Kind::Normal && !(c.sd > 0.0)) fail("normal covariate '" + c.name + "' needs sd > 0");
    if (c.kind == CovariateLaw::Kind::Bernoulli && !(c.p >= 0.0 && c.p <= 1.0))
      fail("bernoulli covariate '" + c.name + "' needs p in [0, 1]");
  }
}

FrailtySurvivalParams ScenarioSpec::truth() const {
  return {{beta_omega, beta_mu}, phi, WeibullBaseline(lambda, gamma)};
}

ScenarioSpec ScenarioSpec::scenario_one() {
  ScenarioSpec s;
  s.name = "scenario_I";
  s.phi = 0.25;
  s.beta_omega = Eigen::Vector3d(0.90, 0.23, -1.40);
  s.beta_mu = Eigen::Vector3d(3.90, 0.13, -2.40);
  s.lambda = 0.04;
  s.gamma = 1.30;
  s.covariates = {standard_normal("x1"), fair_bernoulli("x2")};
  s.tau = 10.0;
  return s;
}

ScenarioSpec ScenarioSpec::scenario_two() {
  ScenarioSpec s;
  s.name = "scenario_II";
  s.phi = 0.13;
  s.beta_omega = Eigen::Vector3d(1.50, 0.60, 3.50);
  s.beta_mu = Eigen::Vector3d(1.40, 0.10, 1.20);
  s.lambda = 0.11;
  s.gamma = 1.08;
  s.covariates = {standard_normal("x1"), fair_bernoulli("x2")};
  s.tau = 6.0;
  return s;
}

SimulatedDataset generate_dataset(const ScenarioSpec& spec, Rng& rng) {
  spec.validate();
  const auto p = static_cast<Eigen::Index>(spec.covariates.size());
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  SimulatedDataset out;
  out.records.reserve(spec.n);
  for (int i = 0; i < spec.n; ++i) {
    Eigen::VectorXd x(p);
    for (Eigen::Index j = 0; j < p; ++j) x(j) = spec.covariates[j].draw(rng);
    const double omega = link_omega(x, spec.beta_omega);
    const double mu = link_mu(x, spec.beta_mu);
    const std::int64_t v = sample_frailty(HzmgpParams(omega, GpParams(mu, spec.phi)), rng);

    double latent = kInf;
    if (v > 0) {
      double u = 0.0;
      while (u == 0.0) u = unif(rng);
      latent = std::pow(-std::log(u) / static_cast<double>(v), 1.0 / spec.gamma) / spec.lambda;
    }
    const bool event = latent <= spec.tau;
    out.records.push_back({event ? latent : spec.tau, event, std::move(x)});
    out.frailty.push_back(v);
    out.latent_time.push_back(latent);
    out.omega.push_back(omega);
    out.mu.push_back(mu);
  }
  return out;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

ReplicateResult run_replicate(const ScenarioSpec& spec, const FitConfig& fit, std::uint64_t seed, int r) {
  ReplicateResult run;
  run.index = r;
  Rng data_rng = make_stream(seed, static_cast<std::uint64_t>(r));
  const SimulatedDataset sim = generate_dataset(spec, data_rng);
  const SurvivalData data = make_survival_data(sim.records);
  run.censored_fraction = 1.0 - data.event.cast<double>().mean();

  SamplerConfig sc = fit.sampler;
  sc.seed = derive_seed(seed, static_cast<std::uint64_t>(r));
  const auto start = std::chrono::steady_clock::now();
  try {
    const PosteriorDraws draws = run_sampler(data, sc, fit.prior);
    run.summary = summarize(draws);
    const PopulationClassification pc = classify_population(draws, data, fit.classification);
    run.proportions = pc.proportions;
    run.unclassifiable = pc.unclassifiable;
    run.r_hat = draws.r_hat;
    run.ess = draws.ess;
    run.max_rhat = draws.r_hat.size() > 0 ? draws.r_hat.maxCoeff() : std::numeric_limits<double>::quiet_NaN();
    run.min_ess = draws.ess.size() > 0 ? draws.ess.minCoeff() : 0.0;
    run.divergences = draws.divergences;
    run.ok = true;
  } catch (const SamplerError& e) {
    run.error = e.what();
  }
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

SimulationReport run_study(const ScenarioSpec& spec, const FitConfig& fit, std::uint64_t seed,
                           const std::function<void(const ReplicateResult&)>& progress) {
  spec.validate();
  fit.sampler.validate();
  if (fit.replicate_workers < 1) throw std::invalid_argument("FitConfig: replicate_workers must be >= 1");

  SimulationReport report;
  report.scenario = spec.name;
  report.n = spec.n;
  report.replicates = spec.replicates;

  const FrailtySurvivalParams truth = spec.truth();
  const Eigen::VectorXd truth_natural = [&] {
    Eigen::VectorXd t(truth.coefficients.beta_omega.size() + truth.coefficients.beta_mu.size() + 3);
    t << truth.coefficients.beta_omega, truth.coefficients.beta_mu, truth.phi, truth.baseline.lambda,
        truth.baseline.gamma;
    return t;
  }();

  std::vector<ReplicateResult> runs(spec.replicates);
  std::vector<std::exception_ptr> errors(spec.replicates);
  std::atomic<int> next{0};
  std::mutex progress_mutex;
  auto worker = [&] {
    for (int r = next++; r < spec.replicates; r = next++) {
      try {
        runs[r] = run_replicate(spec, fit, seed, r);
        if (progress) {
          const std::lock_guard<std::mutex> lock(progress_mutex);
          progress(runs[r]);
        }
      } catch (...) {
        errors[r] = std::current_exception();
      }
    }
  };
  const int n_workers = std::min(fit.replicate_workers, spec.replicates);
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  const auto d = truth_natural.size();
  Eigen::VectorXd sum_means = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd sum_sds = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd covered = Eigen::VectorXd::Zero(d);
  std::vector<std::string> names;
  for (ReplicateResult& run : runs) {
    if (run.ok) {
      ++report.completed;
      if (names.empty())
        for (const auto& s : run.summary) names.push_back(s.name);
      for (Eigen::Index j = 0; j < d; ++j) {
        const ParameterSummary& s = run.summary[j];
        sum_means(j) += s.mean;
        sum_sds(j) += s.sd;
        covered(j) += (s.q025 <= truth_natural(j) && truth_natural(j) <= s.q975) ? 1.0 : 0.0;
      }
      for (std::size_t k = 0; k < 4; ++k) report.proportions[k] += run.proportions[k];
      report.unclassifiable += run.unclassifiable;
    } else {
      ++report.failed;
    }
    report.runs.push_back(std::move(run));
  }

  if (report.completed > 0) {
    const double m = report.completed;
    for (Eigen::Index j = 0; j < d; ++j)
      report.parameters.push_back({names[j], truth_natural(j), sum_means(j) / m, sum_sds(j) / m, covered(j) / m});
    for (auto& p : report.proportions) p /= m;
    report.unclassifiable /= m;
  }
  return report;
}

}  // namespace hzmgp
