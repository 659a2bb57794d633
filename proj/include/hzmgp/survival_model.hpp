#ifndef HZMGP_SURVIVAL_MODEL_HPP
#define HZMGP_SURVIVAL_MODEL_HPP

#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <vector>

#include "hzmgp/dual.hpp"
#include "hzmgp/special_fn.hpp"

namespace hzmgp {

/// Weibull baseline: S0(t) = exp(-(lambda t)^gamma), h0(t) = gamma lambda^gamma t^(gamma-1).
struct WeibullBaseline {
  double lambda;
  double gamma;

  WeibullBaseline(double lambda, double gamma);
};

struct SubjectRecord {
  double time;
  bool event;
  Eigen::VectorXd covariates;  // no intercept
};

struct RegressionCoefficients {
  Eigen::VectorXd beta_omega;  // intercept first
  Eigen::VectorXd beta_mu;
};

struct FrailtySurvivalParams {
  RegressionCoefficients coefficients;
  double phi;
  WeibullBaseline baseline;
};

/**
 * Column-major view of a survival dataset ready for likelihood evaluation:
 * design matrices already carry the leading intercept column. The omega and
 * mu predictors may use different covariate subsets.
 */
struct SurvivalData {
  Eigen::VectorXd time;
  Eigen::Array<bool, Eigen::Dynamic, 1> event;
  Eigen::MatrixXd x_omega;
  Eigen::MatrixXd x_mu;

  Eigen::Index size() const { return time.size(); }
};

/// Both predictors use every covariate of every record.
SurvivalData make_survival_data(const std::vector<SubjectRecord>& records);

/// Predictors use the listed covariate columns (0-based, intercept excluded).
SurvivalData make_survival_data(const std::vector<SubjectRecord>& records,
                                const std::vector<int>& omega_columns,
                                const std::vector<int>& mu_columns);

double baseline_survival(double t, const WeibullBaseline& b);
double baseline_hazard(double t, const WeibullBaseline& b);

/// Logistic link on (1, x)' beta. Throws std::invalid_argument on size mismatch.
double link_omega(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& beta);
/// Log link on (1, x)' beta.
double link_mu(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& beta);

/// S(t) for one subject; equals the HZMGP generating function at S0(t).
double marginal_survival(double t, double omega, double mu, double phi, const WeibullBaseline& b);
/// S as a function of the baseline survival value s0 in [0, 1].
double frailty_survival(double s0, double omega, double mu, double phi);
double marginal_density(double t, double omega, double mu, double phi, const WeibullBaseline& b);
double marginal_hazard(double t, double omega, double mu, double phi, const WeibullBaseline& b);

/// Censored-data log-likelihood. Returns -inf rather than throwing when a
/// contribution is not finite.
double log_likelihood(const std::vector<SubjectRecord>& data, const FrailtySurvivalParams& params);
double log_likelihood(const SurvivalData& data, const FrailtySurvivalParams& params);

namespace kernel {

// Shared pieces of the Lambert-W closed forms. With a = mu phi / (1 + mu phi),
// c = mu / (1 + mu phi) and W = W0(-a s e^{-a}), the identity W = x e^{-W}
// gives -W / phi = c s e^{-a-W} =: m, so the generating function at s is
//   1 - omega + omega expm1(m) / expm1(c)
// and nothing divides by phi.
template <class T>
struct FrailtyTerms {
  T log_c;
  T c;
  T w;
  T log_m;  // log c - H0 - a - W
};

template <class T>
FrailtyTerms<T> frailty_terms(const T& log_mu, const T& log_phi, const T& cum_hazard) {
  using std::exp;
  using std::log;
  const T log_c = -log_add_exp(T(-log_mu), log_phi);
  const T a = sigmoid(T(log_mu + log_phi));
  const T x = -exp(T(log(a) - cum_hazard - a));
  const T w = lambert_w0(x);
  return {log_c, exp(log_c), w, T(log_c - cum_hazard - a - w)};
}

/// log S given the cumulative baseline hazard H0 = -log S0.
template <class T>
T log_survival(const T& log_omega, const T& log_1m_omega, const T& log_mu, const T& log_phi,
               const T& cum_hazard) {
  using std::exp;
  const FrailtyTerms<T> ft = frailty_terms(log_mu, log_phi, cum_hazard);
  return log_add_exp(log_1m_omega, T(log_omega + log_expm1_exp(ft.log_m) - log_expm1(ft.c)));
}

/// log f given H0 and log h0 at the same time point.
template <class T>
T log_density(const T& log_omega, const T& log_mu, const T& log_phi, const T& cum_hazard,
              const T& log_hazard0) {
  using std::exp;
  using std::log1p;
  const FrailtyTerms<T> ft = frailty_terms(log_mu, log_phi, cum_hazard);
  return log_omega + log_hazard0 + exp(ft.log_m) + ft.log_m - log1p(ft.w) - log_expm1(ft.c);
}

/**
 * One subject's log-likelihood contribution on the sampler's scale:
 * linear predictors for omega and mu, and logs of phi, lambda and gamma.
 * A censored record at t = 0 contributes exactly 0.
 */
template <class T>
T subject_log_lik(const T& eta_omega, const T& eta_mu, const T& log_phi, const T& log_lambda,
                  const T& log_gamma, double t, bool event) {
  using std::exp;
  using std::log;
  if (!event && t == 0.0) return T(0.0);
  const T gamma = exp(log_gamma);
  const double log_t = log(t);
  const T cum_hazard = exp(T(gamma * (log_lambda + log_t)));
  const T log_omega = log_sigmoid(eta_omega);
  if (event) {
    const T log_h0 = log_gamma + gamma * log_lambda + (gamma - 1.0) * log_t;
    return log_density(log_omega, eta_mu, log_phi, cum_hazard, log_h0);
  }
  return log_survival(log_omega, log_sigmoid(T(-eta_omega)), eta_mu, log_phi, cum_hazard);
}

}  // namespace kernel

}  // namespace hzmgp

#endif  // HZMGP_SURVIVAL_MODEL_HPP
