#include "hzmgp/diagnostics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace hzmgp {

namespace {

void check_chains(const ChainDraws& chains, std::size_t min_chains, const char* who) {
  if (chains.size() < min_chains)
    throw std::invalid_argument(std::string(who) + ": not enough chains");
  const Eigen::Index n = chains.front().size();
  if (n < 4) throw std::invalid_argument(std::string(who) + ": each chain needs at least 4 draws");
  for (const auto& c : chains)
    if (c.size() != n) throw std::invalid_argument(std::string(who) + ": chains differ in length");
}

ChainDraws split(const ChainDraws& chains) {
  ChainDraws halves;
  halves.reserve(2 * chains.size());
  for (const auto& c : chains) {
    const Eigen::Index half = c.size() / 2;
    halves.emplace_back(c.head(half));
    halves.emplace_back(c.tail(half));
  }
  return halves;
}

double sample_variance(const Eigen::VectorXd& x) {
  return (x.array() - x.mean()).square().sum() / static_cast<double>(x.size() - 1);
}

// Biased (1/n) autocovariance at lags 0..n-1.
Eigen::VectorXd autocovariance(const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  const Eigen::VectorXd c = x.array() - x.mean();
  Eigen::VectorXd acov(n);
  for (Eigen::Index k = 0; k < n; ++k) acov(k) = c.head(n - k).dot(c.tail(n - k)) / static_cast<double>(n);
  return acov;
}

ChainDraws column(const std::vector<Eigen::MatrixXd>& chains, Eigen::Index j) {
  ChainDraws out;
  out.reserve(chains.size());
  for (const auto& m : chains) out.emplace_back(m.col(j));
  return out;
}

}  // namespace

double split_rhat(const ChainDraws& chains) {
  check_chains(chains, 2, "split_rhat");
  const ChainDraws halves = split(chains);
  const auto m = static_cast<Eigen::Index>(halves.size());
  const double n = static_cast<double>(halves.front().size());

  Eigen::VectorXd means(m), vars(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    means(j) = halves[j].mean();
    vars(j) = sample_variance(halves[j]);
  }
  const double within = vars.mean();
  const double between_over_n = sample_variance(means);
  if (within == 0.0) return between_over_n == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  const double var_plus = (n - 1.0) / n * within + between_over_n;
  return std::sqrt(var_plus / within);
}

EssEstimate effective_sample_size(const ChainDraws& chains) {
  check_chains(chains, 1, "effective_sample_size");
  const ChainDraws halves = split(chains);
  const auto m = static_cast<Eigen::Index>(halves.size());
  const Eigen::Index n = halves.front().size();
  const double nd = static_cast<double>(n);

  std::vector<Eigen::VectorXd> acov;
  acov.reserve(m);
  Eigen::VectorXd means(m), vars(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    acov.push_back(autocovariance(halves[j]));
    means(j) = halves[j].mean();
    vars(j) = acov.back()(0) * nd / (nd - 1.0);
  }
  const double mean_var = vars.mean();
  double var_plus = mean_var * (nd - 1.0) / nd;
  if (m > 1) var_plus += sample_variance(means);
  if (!(var_plus > 0.0) || mean_var == 0.0) return {0.0, true};

  auto rho_at = [&](Eigen::Index lag) {
    double s = 0.0;
    for (const auto& a : acov) s += a(lag);
    return 1.0 - (mean_var - s / static_cast<double>(m)) / var_plus;
  };

  Eigen::VectorXd rho = Eigen::VectorXd::Zero(n + 2);
  double rho_even = 1.0;
  double rho_odd = rho_at(1);
  rho(0) = rho_even;
  rho(1) = rho_odd;
  Eigen::Index s = 1;
  while (s < n - 4 && rho_even + rho_odd > 0.0) {
    rho_even = rho_at(s + 1);
    rho_odd = rho_at(s + 2);
    if (rho_even + rho_odd >= 0.0) {
      rho(s + 1) = rho_even;
      rho(s + 2) = rho_odd;
    }
    s += 2;
  }
  const Eigen::Index max_s = s;
  if (rho_even > 0.0) rho(max_s + 1) = rho_even;

  // initial monotone sequence
  for (Eigen::Index t = 1; t <= max_s - 3; t += 2) {
    if (rho(t + 1) + rho(t + 2) > rho(t - 1) + rho(t)) {
      rho(t + 1) = (rho(t - 1) + rho(t)) / 2.0;
      rho(t + 2) = rho(t + 1);
    }
  }

  const double total = static_cast<double>(m) * nd;
  const double tau = std::max(1.0, -1.0 + 2.0 * rho.head(max_s).sum() + rho(max_s + 1));
  return {total / tau, false};
}

Eigen::VectorXd compute_rhat(const std::vector<Eigen::MatrixXd>& chains) {
  if (chains.empty()) throw std::invalid_argument("compute_rhat: no chains");
  Eigen::VectorXd out(chains.front().cols());
  for (Eigen::Index j = 0; j < out.size(); ++j) out(j) = split_rhat(column(chains, j));
  return out;
}

std::vector<EssEstimate> compute_ess(const std::vector<Eigen::MatrixXd>& chains) {
  if (chains.empty()) throw std::invalid_argument("compute_ess: no chains");
  std::vector<EssEstimate> out;
  for (Eigen::Index j = 0; j < chains.front().cols(); ++j) out.push_back(effective_sample_size(column(chains, j)));
  return out;
}

}  // namespace hzmgp
