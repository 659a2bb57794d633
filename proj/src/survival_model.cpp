#include "hzmgp/survival_model.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace hzmgp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double prepended_dot(const Eigen::Ref<const Eigen::VectorXd>& x,
                     const Eigen::Ref<const Eigen::VectorXd>& beta, const char* who) {
  if (beta.size() != x.size() + 1) {
    std::ostringstream os;
    os << who << ": coefficient vector has length " << beta.size() << " but " << x.size()
       << " covariates plus intercept need " << x.size() + 1;
    throw std::invalid_argument(os.str());
  }
  return beta(0) + x.dot(beta.tail(x.size()));
}

double log_omega_of(double omega) { return omega > 0.0 ? std::log(omega) : kNegInf; }
double log_1m_omega_of(double omega) { return omega < 1.0 ? std::log1p(-omega) : kNegInf; }

void check_omega(double omega, const char* who) {
  if (!(omega >= 0.0 && omega <= 1.0)) {
    std::ostringstream os;
    os << who << ": omega must lie in [0, 1], got " << omega;
    throw std::invalid_argument(os.str());
  }
}

}  // namespace

WeibullBaseline::WeibullBaseline(double lambda_, double gamma_) : lambda(lambda_), gamma(gamma_) {
  if (!(lambda > 0.0) || !(gamma > 0.0) || !std::isfinite(lambda) || !std::isfinite(gamma)) {
    std::ostringstream os;
    os << "WeibullBaseline: lambda and gamma must be positive, got " << lambda << ", " << gamma;
    throw std::invalid_argument(os.str());
  }
}

SurvivalData make_survival_data(const std::vector<SubjectRecord>& records) {
  const int p = records.empty() ? 0 : static_cast<int>(records.front().covariates.size());
  std::vector<int> all(p);
  for (int j = 0; j < p; ++j) all[j] = j;
  return make_survival_data(records, all, all);
}

SurvivalData make_survival_data(const std::vector<SubjectRecord>& records,
                                const std::vector<int>& omega_columns,
                                const std::vector<int>& mu_columns) {
  const auto n = static_cast<Eigen::Index>(records.size());
  const Eigen::Index p = n > 0 ? records.front().covariates.size() : 0;
  for (const auto& cols : {omega_columns, mu_columns})
    for (int c : cols)
      if (c < 0 || c >= p) throw std::invalid_argument("make_survival_data: covariate column out of range");

  SurvivalData d;
  d.time.resize(n);
  d.event.resize(n);
  d.x_omega.resize(n, static_cast<Eigen::Index>(omega_columns.size()) + 1);
  d.x_mu.resize(n, static_cast<Eigen::Index>(mu_columns.size()) + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const SubjectRecord& r = records[i];
    if (r.covariates.size() != p)
      throw std::invalid_argument("make_survival_data: covariate dimension differs across records");
    d.time(i) = r.time;
    d.event(i) = r.event;
    d.x_omega(i, 0) = 1.0;
    d.x_mu(i, 0) = 1.0;
    for (std::size_t j = 0; j < omega_columns.size(); ++j) d.x_omega(i, j + 1) = r.covariates(omega_columns[j]);
    for (std::size_t j = 0; j < mu_columns.size(); ++j) d.x_mu(i, j + 1) = r.covariates(mu_columns[j]);
  }
  return d;
}

double baseline_survival(double t, const WeibullBaseline& b) {
  return std::exp(-std::pow(b.lambda * t, b.gamma));
}

double baseline_hazard(double t, const WeibullBaseline& b) {
  return b.gamma * std::pow(b.lambda, b.gamma) * std::pow(t, b.gamma - 1.0);
}

double link_omega(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& beta) {
  return sigmoid(prepended_dot(x, beta, "link_omega"));
}

double link_mu(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& beta) {
  return std::exp(prepended_dot(x, beta, "link_mu"));
}

double frailty_survival(double s0, double omega, double mu, double phi) {
  check_omega(omega, "frailty_survival");
  if (!(s0 >= 0.0 && s0 <= 1.0)) throw std::domain_error("frailty_survival: s0 must lie in [0, 1]");
  if (s0 == 1.0) return 1.0;
  const double cum_hazard = s0 > 0.0 ? -std::log(s0) : std::numeric_limits<double>::infinity();
  return std::exp(kernel::log_survival(log_omega_of(omega), log_1m_omega_of(omega), std::log(mu),
                                       std::log(phi), cum_hazard));
}

double marginal_survival(double t, double omega, double mu, double phi, const WeibullBaseline& b) {
  check_omega(omega, "marginal_survival");
  if (t == 0.0) return 1.0;
  const double cum_hazard = std::pow(b.lambda * t, b.gamma);
  return std::exp(kernel::log_survival(log_omega_of(omega), log_1m_omega_of(omega), std::log(mu),
                                       std::log(phi), cum_hazard));
}

double marginal_density(double t, double omega, double mu, double phi, const WeibullBaseline& b) {
  check_omega(omega, "marginal_density");
  const double cum_hazard = std::pow(b.lambda * t, b.gamma);
  const double log_h0 = std::log(b.gamma) + b.gamma * std::log(b.lambda) + (b.gamma - 1.0) * std::log(t);
  return std::exp(kernel::log_density(log_omega_of(omega), std::log(mu), std::log(phi), cum_hazard, log_h0));
}

double marginal_hazard(double t, double omega, double mu, double phi, const WeibullBaseline& b) {
  return marginal_density(t, omega, mu, phi, b) / marginal_survival(t, omega, mu, phi, b);
}

double log_likelihood(const std::vector<SubjectRecord>& data, const FrailtySurvivalParams& params) {
  if (data.empty()) throw std::invalid_argument("log_likelihood: empty dataset");
  return log_likelihood(make_survival_data(data), params);
}

double log_likelihood(const SurvivalData& data, const FrailtySurvivalParams& params) {
  if (data.size() == 0) throw std::invalid_argument("log_likelihood: empty dataset");
  const auto& beta = params.coefficients;
  if (beta.beta_omega.size() != data.x_omega.cols() || beta.beta_mu.size() != data.x_mu.cols())
    throw std::invalid_argument("log_likelihood: coefficient length does not match design matrix");

  const Eigen::VectorXd eta_omega = data.x_omega * beta.beta_omega;
  const Eigen::VectorXd eta_mu = data.x_mu * beta.beta_mu;
  const double log_phi = std::log(params.phi);
  const double log_lambda = std::log(params.baseline.lambda);
  const double log_gamma = std::log(params.baseline.gamma);

  double total = 0.0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const double li = kernel::subject_log_lik(eta_omega(i), eta_mu(i), log_phi, log_lambda, log_gamma,
                                              data.time(i), data.event(i));
    if (!std::isfinite(li)) return kNegInf;
    total += li;
  }
  return total;
}

}  // namespace hzmgp
