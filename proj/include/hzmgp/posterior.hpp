#ifndef HZMGP_POSTERIOR_HPP
#define HZMGP_POSTERIOR_HPP

#include <Eigen/Core>
#include <string>
#include <vector>

#include "hzmgp/survival_model.hpp"

namespace hzmgp {

/**
 * Position of each block inside the unconstrained vector
 * (beta_omega, beta_mu, theta_phi, theta_lambda, theta_gamma),
 * where phi = exp(theta_phi), lambda = exp(theta_lambda), gamma = exp(theta_gamma).
 */
struct ParameterLayout {
  int n_omega = 1;  // length of beta_omega, intercept included
  int n_mu = 1;

  static ParameterLayout for_data(const SurvivalData& data);

  int dim() const { return n_omega + n_mu + 3; }
  int omega_begin() const { return 0; }
  int mu_begin() const { return n_omega; }
  int phi_index() const { return n_omega + n_mu; }
  int lambda_index() const { return n_omega + n_mu + 1; }
  int gamma_index() const { return n_omega + n_mu + 2; }

  /// beta_omega_0.., beta_mu_0.., theta_phi, theta_lambda, theta_gamma
  std::vector<std::string> names() const;
  /// Same, with phi, lambda, gamma for the last three (natural scale).
  std::vector<std::string> natural_names() const;
};

struct UnconstrainedParams {
  Eigen::VectorXd beta_omega;
  Eigen::VectorXd beta_mu;
  double theta_phi = 0.0;
  double theta_lambda = 0.0;
  double theta_gamma = 0.0;

  static UnconstrainedParams unpack(const Eigen::Ref<const Eigen::VectorXd>& theta, const ParameterLayout& layout);
  static UnconstrainedParams from_natural(const FrailtySurvivalParams& p);
  Eigen::VectorXd pack() const;
  FrailtySurvivalParams to_natural() const;
};

/// Independent normal prior applied to every unconstrained coordinate.
struct PriorSpec {
  double mean = 0.0;
  double sd = 10.0;

  PriorSpec() = default;
  PriorSpec(double mean, double sd);

  double log_density(const Eigen::Ref<const Eigen::VectorXd>& theta) const;
};

/**
 * Log posterior over the unconstrained vector for a fixed dataset.
 * Const member functions are safe to call from several threads at once.
 */
class LogPosterior {
 public:
  LogPosterior(const SurvivalData& data, PriorSpec prior);

  const ParameterLayout& layout() const { return layout_; }
  const SurvivalData& data() const { return data_; }
  const PriorSpec& prior() const { return prior_; }
  int dim() const { return layout_.dim(); }

  double log_likelihood(const Eigen::Ref<const Eigen::VectorXd>& theta) const;
  double operator()(const Eigen::Ref<const Eigen::VectorXd>& theta) const;

  /// Value and exact gradient by forward-mode differentiation. Returns -inf
  /// (gradient unspecified) where the density vanishes; never throws.
  double value_and_gradient(const Eigen::Ref<const Eigen::VectorXd>& theta, Eigen::VectorXd& grad) const;

 private:
  const SurvivalData& data_;
  PriorSpec prior_;
  ParameterLayout layout_;
};

double log_posterior(const Eigen::Ref<const Eigen::VectorXd>& theta, const SurvivalData& data, const PriorSpec& prior);

/// Throws std::domain_error where log_posterior is -inf.
Eigen::VectorXd grad_log_posterior(const Eigen::Ref<const Eigen::VectorXd>& theta, const SurvivalData& data,
                                   const PriorSpec& prior);

}  // namespace hzmgp

#endif  // HZMGP_POSTERIOR_HPP
