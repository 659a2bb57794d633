#ifndef HZMGP_DIAGNOSTICS_HPP
#define HZMGP_DIAGNOSTICS_HPP

#include <Eigen/Core>
#include <vector>

namespace hzmgp {

/// Draws of one scalar quantity, one vector per chain (equal lengths).
using ChainDraws = std::vector<Eigen::VectorXd>;

/**
 * Split potential scale reduction factor: every chain is halved (the middle
 * draw of an odd-length chain is dropped) and the classic between/within
 * variance ratio is taken over the 2m halves.
 *
 * Needs >= 2 chains of >= 4 draws, otherwise std::invalid_argument. When
 * every half is constant the value is 1 if all halves agree, +inf if not.
 */
double split_rhat(const ChainDraws& chains);

struct EssEstimate {
  double value = 0.0;
  bool degenerate = false;  // zero variance; value is 0
};

/**
 * Multi-chain effective sample size on split chains from the combined
 * autocorrelation, truncated by Geyer's initial positive sequence and made
 * monotone. The autocorrelation time is floored at 1, so the result never
 * exceeds the number of draws.
 *
 * Needs >= 1 chain of >= 4 draws, otherwise std::invalid_argument.
 */
EssEstimate effective_sample_size(const ChainDraws& chains);

/// Per-column diagnostics for chains stored as (draws x parameters) matrices.
Eigen::VectorXd compute_rhat(const std::vector<Eigen::MatrixXd>& chains);
std::vector<EssEstimate> compute_ess(const std::vector<Eigen::MatrixXd>& chains);

}  // namespace hzmgp

#endif  // HZMGP_DIAGNOSTICS_HPP
