#ifndef HZMGP_SIMULATION_HPP
#define HZMGP_SIMULATION_HPP

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hzmgp/classify.hpp"
#include "hzmgp/fit.hpp"
#include "hzmgp/frailty_dist.hpp"
#include "hzmgp/survival_model.hpp"

namespace hzmgp {

struct CovariateLaw {
  enum class Kind { Normal, Bernoulli };

  std::string name;
  Kind kind = Kind::Normal;
  double mean = 0.0;  // Normal
  double sd = 1.0;    // Normal
  double p = 0.5;     // Bernoulli

  double draw(Rng& rng) const;
};

struct ScenarioSpec {
  std::string name;
  double phi = 0.0;
  Eigen::VectorXd beta_omega;  // intercept first, one slope per covariate
  Eigen::VectorXd beta_mu;
  double lambda = 0.0;
  double gamma = 0.0;
  std::vector<CovariateLaw> covariates;
  int n = 1000;
  int replicates = 10;
  double tau = 0.0;  // administrative censoring time

  /// Throws std::invalid_argument naming the violated field.
  void validate() const;
  FrailtySurvivalParams truth() const;

  /// Default designs: one standard-normal and one Bernoulli(0.5) covariate.
  static ScenarioSpec scenario_one();
  static ScenarioSpec scenario_two();
};

struct SimulatedDataset {
  std::vector<SubjectRecord> records;
  std::vector<std::int64_t> frailty;   // latent V per subject
  std::vector<double> latent_time;     // pre-censoring event time; +inf when cured
  std::vector<double> omega;           // per-subject true omega
  std::vector<double> mu;
};

/**
 * Draws covariates, the frailty V ~ HZMGP(omega_i, mu_i, phi) and, for
 * V > 0, T = (1 / lambda) (-log U / V)^(1 / gamma). Cured subjects and
 * T > tau are censored at tau exactly.
 */
SimulatedDataset generate_dataset(const ScenarioSpec& spec, Rng& rng);

struct FitConfig {
  SamplerConfig sampler;
  PriorSpec prior;
  ClassificationConfig classification;
  int replicate_workers = 1;  // replicates fitted concurrently
};

struct ParameterReport {
  std::string name;
  double truth = 0.0;
  double mean_of_means = 0.0;
  double mean_of_sds = 0.0;
  double coverage = 0.0;  // fraction of central 95% intervals holding the truth
};

struct ReplicateResult {
  int index = 0;
  bool ok = false;
  std::string error;
  std::vector<ParameterSummary> summary;
  std::array<double, 4> proportions{};
  double unclassifiable = 0.0;
  Eigen::VectorXd r_hat;  // per unconstrained parameter
  Eigen::VectorXd ess;
  double max_rhat = 0.0;
  double min_ess = 0.0;
  int divergences = 0;
  double seconds = 0.0;
  double censored_fraction = 0.0;
};

struct SimulationReport {
  std::string scenario;
  int n = 0;
  int replicates = 0;
  int completed = 0;
  int failed = 0;
  std::vector<ParameterReport> parameters;
  std::array<double, 4> proportions{};  // averaged over completed replicates
  double unclassifiable = 0.0;
  std::vector<ReplicateResult> runs;
};

/// Replicate r uses data stream (seed, r) and sampler seed derived from it,
/// so the report does not depend on replicate_workers. Sampler failures are
/// recorded in the report and skipped.
/// `progress`, when set, is called once per finished replicate (serialized).
SimulationReport run_study(const ScenarioSpec& spec, const FitConfig& fit, std::uint64_t seed,
                           const std::function<void(const ReplicateResult&)>& progress = {});

/// Deterministic 64-bit mix used to derive child seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace hzmgp

#endif  // HZMGP_SIMULATION_HPP
