#include "hzmgp/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace hzmgp {

Eigen::MatrixXd PosteriorDraws::chain(int c) const {
  return draws.middleRows(static_cast<Eigen::Index>(c) * draws_per_chain, draws_per_chain);
}

std::vector<Eigen::MatrixXd> PosteriorDraws::split_by_chain() const {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(chains);
  for (int c = 0; c < chains; ++c) out.push_back(chain(c));
  return out;
}

Eigen::MatrixXd PosteriorDraws::natural_draws() const {
  Eigen::MatrixXd out = draws;
  for (int j : {layout.phi_index(), layout.lambda_index(), layout.gamma_index()})
    out.col(j) = out.col(j).array().exp();
  return out;
}

void PosteriorDraws::compute_diagnostics() {
  const auto per_chain = split_by_chain();
  const auto d = draws.cols();
  r_hat = chains >= 2 ? compute_rhat(per_chain)
                      : Eigen::VectorXd::Constant(d, std::numeric_limits<double>::quiet_NaN());
  const auto est = compute_ess(per_chain);
  ess.resize(d);
  ess_degenerate.assign(d, false);
  for (Eigen::Index j = 0; j < d; ++j) {
    ess(j) = est[j].value;
    ess_degenerate[j] = est[j].degenerate;
  }
}

PosteriorDraws collect_draws(const std::vector<ChainResult>& chains, const ParameterLayout& layout,
                             std::vector<std::string> names) {
  PosteriorDraws out;
  out.layout = layout;
  out.names = std::move(names);
  out.chains = static_cast<int>(chains.size());
  out.draws_per_chain = chains.empty() ? 0 : static_cast<int>(chains.front().draws.rows());
  const Eigen::Index dim = chains.empty() ? 0 : chains.front().draws.cols();
  out.draws.resize(static_cast<Eigen::Index>(out.chains) * out.draws_per_chain, dim);
  out.step_sizes.resize(out.chains);
  double accept_total = 0.0;
  for (int c = 0; c < out.chains; ++c) {
    out.draws.middleRows(static_cast<Eigen::Index>(c) * out.draws_per_chain, out.draws_per_chain) = chains[c].draws;
    out.divergences += chains[c].divergences;
    out.step_sizes(c) = chains[c].step_size;
    accept_total += chains[c].accept_stat.sum();
  }
  if (out.draws.rows() > 0) out.mean_accept_stat = accept_total / static_cast<double>(out.draws.rows());
  if (out.draws_per_chain >= 4) out.compute_diagnostics();
  return out;
}

PosteriorDraws run_sampler(const SurvivalData& data, const SamplerConfig& config, const PriorSpec& prior) {
  config.validate();
  const LogPosterior target(data, prior);
  const LogDensityGradient f = [&target](const Eigen::VectorXd& q, Eigen::VectorXd& grad) {
    return target.value_and_gradient(q, grad);
  };
  const auto chains = run_nuts(f, target.dim(), config);
  PosteriorDraws out = collect_draws(chains, target.layout(), target.layout().names());

  const double kept = static_cast<double>(out.draws.rows());
  if (kept > 0 && out.divergences > 0.25 * kept) {
    std::ostringstream os;
    os << out.divergences << " of " << out.draws.rows() << " post-burn-in transitions diverged (limit 25%)";
    throw SamplerError(os.str());
  }
  return out;
}

double quantile(Eigen::VectorXd values, double prob) {
  if (values.size() == 0) throw std::invalid_argument("quantile: no values");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * prob;
  const auto lo = static_cast<Eigen::Index>(std::floor(h));
  const auto hi = std::min<Eigen::Index>(lo + 1, values.size() - 1);
  return values(lo) + (h - static_cast<double>(lo)) * (values(hi) - values(lo));
}

std::vector<ParameterSummary> summarize(const PosteriorDraws& draws) {
  const Eigen::MatrixXd nat = draws.natural_draws();
  const auto names = draws.layout.natural_names();
  std::vector<ParameterSummary> out;
  out.reserve(nat.cols());
  const double n = static_cast<double>(nat.rows());
  for (Eigen::Index j = 0; j < nat.cols(); ++j) {
    const Eigen::VectorXd col = nat.col(j);
    const double mean = col.mean();
    const double sd = n > 1 ? std::sqrt((col.array() - mean).square().sum() / (n - 1.0)) : 0.0;
    out.push_back({names[j], mean, sd, quantile(col, 0.025), quantile(col, 0.975)});
  }
  return out;
}

}  // namespace hzmgp
