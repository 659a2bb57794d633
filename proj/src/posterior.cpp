#include "hzmgp/posterior.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "hzmgp/dual.hpp"

namespace hzmgp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_dim(const Eigen::Ref<const Eigen::VectorXd>& theta, const ParameterLayout& layout) {
  if (theta.size() != layout.dim()) {
    std::ostringstream os;
    os << "parameter vector has length " << theta.size() << ", model expects " << layout.dim();
    throw std::invalid_argument(os.str());
  }
}

}  // namespace

ParameterLayout ParameterLayout::for_data(const SurvivalData& data) {
  return {static_cast<int>(data.x_omega.cols()), static_cast<int>(data.x_mu.cols())};
}

std::vector<std::string> ParameterLayout::names() const {
  std::vector<std::string> out;
  out.reserve(dim());
  for (int j = 0; j < n_omega; ++j) out.push_back("beta_omega_" + std::to_string(j));
  for (int j = 0; j < n_mu; ++j) out.push_back("beta_mu_" + std::to_string(j));
  out.insert(out.end(), {"theta_phi", "theta_lambda", "theta_gamma"});
  return out;
}

std::vector<std::string> ParameterLayout::natural_names() const {
  auto out = names();
  out[phi_index()] = "phi";
  out[lambda_index()] = "lambda";
  out[gamma_index()] = "gamma";
  return out;
}

UnconstrainedParams UnconstrainedParams::unpack(const Eigen::Ref<const Eigen::VectorXd>& theta,
                                                const ParameterLayout& layout) {
  check_dim(theta, layout);
  UnconstrainedParams u;
  u.beta_omega = theta.segment(layout.omega_begin(), layout.n_omega);
  u.beta_mu = theta.segment(layout.mu_begin(), layout.n_mu);
  u.theta_phi = theta(layout.phi_index());
  u.theta_lambda = theta(layout.lambda_index());
  u.theta_gamma = theta(layout.gamma_index());
  return u;
}

UnconstrainedParams UnconstrainedParams::from_natural(const FrailtySurvivalParams& p) {
  return {p.coefficients.beta_omega, p.coefficients.beta_mu, std::log(p.phi), std::log(p.baseline.lambda),
          std::log(p.baseline.gamma)};
}

Eigen::VectorXd UnconstrainedParams::pack() const {
  Eigen::VectorXd theta(beta_omega.size() + beta_mu.size() + 3);
  theta << beta_omega, beta_mu, theta_phi, theta_lambda, theta_gamma;
  return theta;
}

FrailtySurvivalParams UnconstrainedParams::to_natural() const {
  return {{beta_omega, beta_mu}, std::exp(theta_phi), WeibullBaseline(std::exp(theta_lambda), std::exp(theta_gamma))};
}

PriorSpec::PriorSpec(double mean_, double sd_) : mean(mean_), sd(sd_) {
  if (!(sd > 0.0) || !std::isfinite(sd) || !std::isfinite(mean))
    throw std::invalid_argument("PriorSpec: sd must be positive and finite");
}

double PriorSpec::log_density(const Eigen::Ref<const Eigen::VectorXd>& theta) const {
  const double norm = -std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
  return -0.5 * ((theta.array() - mean) / sd).square().sum() + norm * static_cast<double>(theta.size());
}

LogPosterior::LogPosterior(const SurvivalData& data, PriorSpec prior)
    : data_(data), prior_(prior), layout_(ParameterLayout::for_data(data)) {
  if (data.size() == 0) throw std::invalid_argument("LogPosterior: empty dataset");
}

double LogPosterior::log_likelihood(const Eigen::Ref<const Eigen::VectorXd>& theta) const {
  check_dim(theta, layout_);
  if (!theta.allFinite()) return kNegInf;
  const Eigen::VectorXd eta_omega = data_.x_omega * theta.segment(layout_.omega_begin(), layout_.n_omega);
  const Eigen::VectorXd eta_mu = data_.x_mu * theta.segment(layout_.mu_begin(), layout_.n_mu);
  const double log_phi = theta(layout_.phi_index());
  const double log_lambda = theta(layout_.lambda_index());
  const double log_gamma = theta(layout_.gamma_index());
  double total = 0.0;
  for (Eigen::Index i = 0; i < data_.size(); ++i) {
    const double li = kernel::subject_log_lik(eta_omega(i), eta_mu(i), log_phi, log_lambda, log_gamma,
                                              data_.time(i), data_.event(i));
    if (!std::isfinite(li)) return kNegInf;
    total += li;
  }
  return total;
}

double LogPosterior::operator()(const Eigen::Ref<const Eigen::VectorXd>& theta) const {
  const double ll = log_likelihood(theta);
  if (ll == kNegInf) return kNegInf;
  return ll + prior_.log_density(theta);
}

double LogPosterior::value_and_gradient(const Eigen::Ref<const Eigen::VectorXd>& theta,
                                        Eigen::VectorXd& grad) const {
  check_dim(theta, layout_);
  if (!theta.allFinite()) {
    grad.setZero(theta.size());
    return kNegInf;
  }
  using D = Dual<5>;
  const Eigen::VectorXd eta_omega = data_.x_omega * theta.segment(layout_.omega_begin(), layout_.n_omega);
  const Eigen::VectorXd eta_mu = data_.x_mu * theta.segment(layout_.mu_begin(), layout_.n_mu);
  const D log_phi = D::variable(theta(layout_.phi_index()), 2);
  const D log_lambda = D::variable(theta(layout_.lambda_index()), 3);
  const D log_gamma = D::variable(theta(layout_.gamma_index()), 4);

  const Eigen::Index n = data_.size();
  Eigen::VectorXd d_eta_omega(n);
  Eigen::VectorXd d_eta_mu(n);
  Eigen::Array3d d_shared = Eigen::Array3d::Zero();
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const D li = kernel::subject_log_lik(D::variable(eta_omega(i), 0), D::variable(eta_mu(i), 1), log_phi,
                                         log_lambda, log_gamma, data_.time(i), data_.event(i));
    if (!std::isfinite(li.val) || !li.grad.allFinite()) {
      grad.setZero(theta.size());
      return kNegInf;
    }
    total += li.val;
    d_eta_omega(i) = li.grad(0);
    d_eta_mu(i) = li.grad(1);
    d_shared += li.grad.tail<3>();
  }

  grad.resize(theta.size());
  grad.segment(layout_.omega_begin(), layout_.n_omega).noalias() = data_.x_omega.transpose() * d_eta_omega;
  grad.segment(layout_.mu_begin(), layout_.n_mu).noalias() = data_.x_mu.transpose() * d_eta_mu;
  grad(layout_.phi_index()) = d_shared(0);
  grad(layout_.lambda_index()) = d_shared(1);
  grad(layout_.gamma_index()) = d_shared(2);

  grad.array() -= (theta.array() - prior_.mean) / (prior_.sd * prior_.sd);
  return total + prior_.log_density(theta);
}

double log_posterior(const Eigen::Ref<const Eigen::VectorXd>& theta, const SurvivalData& data, const PriorSpec& prior) {
  return LogPosterior(data, prior)(theta);
}

Eigen::VectorXd grad_log_posterior(const Eigen::Ref<const Eigen::VectorXd>& theta, const SurvivalData& data,
                                   const PriorSpec& prior) {
  Eigen::VectorXd grad;
  if (LogPosterior(data, prior).value_and_gradient(theta, grad) == kNegInf)
    throw std::domain_error("grad_log_posterior: log posterior is -inf at this point");
  return grad;
}

}  // namespace hzmgp
