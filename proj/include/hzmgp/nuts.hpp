#ifndef HZMGP_NUTS_HPP
#define HZMGP_NUTS_HPP

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "hzmgp/frailty_dist.hpp"

// REFERENCE: Hoffman, M.D. and Gelman, A., 2014. The No-U-Turn
// sampler: adaptively setting path lengths in Hamiltonian Monte
// Carlo. J. Mach. Learn. Res., 15(1), pp.1593-1623. Trajectory
// sampling and the U-turn check follow Betancourt (2017), multinomial
// variant with the extra subtree-boundary checks.

namespace hzmgp {

struct SamplerConfig {
  enum class Metric { Diagonal, Dense };

  int chains = 3;
  int iterations = 1000;
  int burn_in = 300;
  std::uint64_t seed = 0;
  double target_acceptance = 0.8;
  int max_tree_depth = 10;
  Metric metric = Metric::Diagonal;

  /// Throws std::invalid_argument naming the violated field.
  void validate() const;
  int kept_per_chain() const { return iterations - burn_in; }
};

class SamplerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Log density at q, writing its gradient into grad. Must tolerate -inf.
using LogDensityGradient = std::function<double(const Eigen::VectorXd& q, Eigen::VectorXd& grad)>;

struct ChainResult {
  Eigen::MatrixXd draws;        // kept iterations x dim
  Eigen::VectorXd accept_stat;  // per kept iteration
  Eigen::VectorXi tree_depth;
  Eigen::VectorXi n_leapfrog;
  int divergences = 0;          // kept iterations only
  int warmup_divergences = 0;
  double step_size = 0.0;
  Eigen::MatrixXd inv_metric;  // diagonal unless the dense metric was adapted
};

/// One chain. The RNG stream is derived from (config.seed, chain_index).
ChainResult run_nuts_chain(const LogDensityGradient& log_density, int dim, const SamplerConfig& config,
                           int chain_index);

/// All chains, one worker thread each; results are independent of scheduling.
std::vector<ChainResult> run_nuts(const LogDensityGradient& log_density, int dim, const SamplerConfig& config);

/// Fixed stream split: the same (seed, stream) always yields the same engine.
Rng make_stream(std::uint64_t seed, std::uint64_t stream);

}  // namespace hzmgp

#endif  // HZMGP_NUTS_HPP
