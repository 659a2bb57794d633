#include "hzmgp/classify.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace hzmgp {

namespace {

constexpr double kSlack = 1e-12;

// Fractions of draws with omega < threshold and omega < 1 for a batch of
// linear predictors (draws x subjects).
void tally(const Eigen::MatrixXd& eta_omega, const Eigen::MatrixXd& eta_mu, const Eigen::VectorXd& phi,
           Eigen::VectorXd& p_below, Eigen::VectorXd& p_lt_one) {
  const Eigen::Index s = eta_omega.rows();
  const Eigen::Index n = eta_omega.cols();
  p_below.setZero(n);
  p_lt_one.setZero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index below = 0, lt_one = 0;
    for (Eigen::Index k = 0; k < s; ++k) {
      const double omega = 1.0 / (1.0 + std::exp(-eta_omega(k, i)));
      // mu / (1 + mu phi) written to stay finite when mu overflows
      const double c = 1.0 / (std::exp(-eta_mu(k, i)) + phi(k));
      const double thr = -std::expm1(-c);
      below += omega < thr;
      lt_one += omega < 1.0;
    }
    p_below(i) = static_cast<double>(below) / static_cast<double>(s);
    p_lt_one(i) = static_cast<double>(lt_one) / static_cast<double>(s);
  }
}

void check_draws(const PosteriorDraws& draws) {
  if (draws.draws.rows() == 0) throw std::invalid_argument("classify: posterior has no draws");
}

}  // namespace

ClassificationConfig::ClassificationConfig(double alpha_) : alpha(alpha_) {
  if (!(alpha > 0.0 && alpha < 0.5)) {
    std::ostringstream os;
    os << "ClassificationConfig: alpha must lie in (0, 0.5), got " << alpha;
    throw std::invalid_argument(os.str());
  }
}

double threshold(double mu, double phi) {
  if (!(mu >= 0.0) || !(phi >= 0.0)) throw std::invalid_argument("threshold: mu and phi must be non-negative");
  return -std::expm1(-mu / (1.0 + mu * phi));
}

std::optional<ZeroModClass> decide(double p_below, double p_lt_one, double alpha) {
  if (p_lt_one <= alpha + kSlack) return ZeroModClass::ZTGP;
  if (p_lt_one < 1.0 - alpha - kSlack) return std::nullopt;
  if (p_below >= 1.0 - alpha - kSlack) return ZeroModClass::ZIGP;
  if (p_below <= alpha + kSlack) return ZeroModClass::ZDGP;
  return ZeroModClass::GP;
}

SubjectClassification classify_subject(const PosteriorDraws& draws, const Eigen::Ref<const Eigen::VectorXd>& x_omega,
                                       const Eigen::Ref<const Eigen::VectorXd>& x_mu, const ClassificationConfig& cfg,
                                       Eigen::Index subject) {
  check_draws(draws);
  const ParameterLayout& L = draws.layout;
  if (x_omega.size() != L.n_omega || x_mu.size() != L.n_mu)
    throw std::invalid_argument("classify_subject: design row length does not match the posterior");
  const Eigen::MatrixXd eta_omega = draws.draws.middleCols(L.omega_begin(), L.n_omega) * x_omega;
  const Eigen::MatrixXd eta_mu = draws.draws.middleCols(L.mu_begin(), L.n_mu) * x_mu;
  const Eigen::VectorXd phi = draws.draws.col(L.phi_index()).array().exp();
  Eigen::VectorXd p_below, p_lt_one;
  tally(eta_omega, eta_mu, phi, p_below, p_lt_one);
  return {subject, decide(p_below(0), p_lt_one(0), cfg.alpha), p_below(0), p_lt_one(0)};
}

SubjectClassification classify_subject(const PosteriorDraws& draws, const Eigen::Ref<const Eigen::VectorXd>& x,
                                       const ClassificationConfig& cfg) {
  Eigen::VectorXd row(x.size() + 1);
  row << 1.0, x;
  return classify_subject(draws, row, row, cfg);
}

PopulationClassification classify_population(const PosteriorDraws& draws, const SurvivalData& data,
                                             const ClassificationConfig& cfg) {
  check_draws(draws);
  const ParameterLayout& L = draws.layout;
  if (data.x_omega.cols() != L.n_omega || data.x_mu.cols() != L.n_mu)
    throw std::invalid_argument("classify_population: dataset covariate dimension does not match the posterior");
  const Eigen::MatrixXd eta_omega = draws.draws.middleCols(L.omega_begin(), L.n_omega) * data.x_omega.transpose();
  const Eigen::MatrixXd eta_mu = draws.draws.middleCols(L.mu_begin(), L.n_mu) * data.x_mu.transpose();
  const Eigen::VectorXd phi = draws.draws.col(L.phi_index()).array().exp();
  Eigen::VectorXd p_below, p_lt_one;
  tally(eta_omega, eta_mu, phi, p_below, p_lt_one);

  PopulationClassification out;
  const Eigen::Index n = data.size();
  out.subjects.reserve(n);
  std::array<Eigen::Index, 4> counts{};
  Eigen::Index none = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    auto label = decide(p_below(i), p_lt_one(i), cfg.alpha);
    if (label) ++counts[static_cast<std::size_t>(*label)];
    else ++none;
    out.subjects.push_back({i, label, p_below(i), p_lt_one(i)});
  }
  for (std::size_t k = 0; k < 4; ++k) out.proportions[k] = static_cast<double>(counts[k]) / static_cast<double>(n);
  out.unclassifiable = static_cast<double>(none) / static_cast<double>(n);
  return out;
}

}  // namespace hzmgp
