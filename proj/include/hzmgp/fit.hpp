#ifndef HZMGP_FIT_HPP
#define HZMGP_FIT_HPP

#include <Eigen/Core>
#include <string>
#include <vector>

#include "hzmgp/diagnostics.hpp"
#include "hzmgp/nuts.hpp"
#include "hzmgp/posterior.hpp"

namespace hzmgp {

/// Post-burn-in draws on the unconstrained scale, chain-major rows.
struct PosteriorDraws {
  ParameterLayout layout;
  std::vector<std::string> names;
  int chains = 0;
  int draws_per_chain = 0;
  Eigen::MatrixXd draws;  // (chains * draws_per_chain) x dim

  Eigen::VectorXd r_hat;
  Eigen::VectorXd ess;
  std::vector<bool> ess_degenerate;
  int divergences = 0;
  double mean_accept_stat = 0.0;
  Eigen::VectorXd step_sizes;  // per chain

  /// Rows belonging to chain c.
  Eigen::MatrixXd chain(int c) const;
  std::vector<Eigen::MatrixXd> split_by_chain() const;

  /// Same draws with phi, lambda, gamma mapped through exp.
  Eigen::MatrixXd natural_draws() const;

  /// Fill r_hat / ess from the draws (needs >= 4 draws per chain; R-hat
  /// additionally needs >= 2 chains and is NaN otherwise).
  void compute_diagnostics();
};

/**
 * NUTS on the HZMGP frailty posterior with dual-averaging step size and
 * diagonal metric adaptation over the burn-in. Throws SamplerError when
 * more than 25% of kept transitions diverge.
 */
PosteriorDraws run_sampler(const SurvivalData& data, const SamplerConfig& config, const PriorSpec& prior);

/// Wraps raw chain output; used by run_sampler and by the generic-target tests.
PosteriorDraws collect_draws(const std::vector<ChainResult>& chains, const ParameterLayout& layout,
                             std::vector<std::string> names);

struct ParameterSummary {
  std::string name;
  double mean;
  double sd;
  double q025;
  double q975;
};

/// Natural-scale summary (phi, lambda, gamma exponentiated).
std::vector<ParameterSummary> summarize(const PosteriorDraws& draws);

/// Linear-interpolated empirical quantile (type 7).
double quantile(Eigen::VectorXd values, double prob);

}  // namespace hzmgp

#endif  // HZMGP_FIT_HPP
