#ifndef HZMGP_CLASSIFY_HPP
#define HZMGP_CLASSIFY_HPP

#include <Eigen/Core>
#include <array>
#include <optional>
#include <vector>

#include "hzmgp/fit.hpp"
#include "hzmgp/frailty_dist.hpp"

namespace hzmgp {

struct ClassificationConfig {
  double alpha = 0.1;

  ClassificationConfig() = default;
  /// Throws std::invalid_argument unless 0 < alpha < 0.5.
  explicit ClassificationConfig(double alpha);
};

/// 1 - P_GP(0; mu, phi) = 1 - exp(-mu / (1 + mu phi)); phi = 0 gives the Poisson value.
double threshold(double mu, double phi);

/**
 * Four-way posterior decision rule on
 *   p_below = P(omega < threshold), p_lt_one = P(omega < 1).
 * ZTGP when 1 - p_lt_one >= 1 - alpha; otherwise p_lt_one >= 1 - alpha is
 * required and p_below picks ZIGP (>= 1 - alpha), ZDGP (<= alpha) or GP.
 * Returns nullopt in the gap alpha < p_lt_one < 1 - alpha, which the rule
 * leaves uncovered. Boundaries are compared with 1e-12 slack.
 */
std::optional<ZeroModClass> decide(double p_below, double p_lt_one, double alpha);

struct SubjectClassification {
  Eigen::Index subject = 0;
  std::optional<ZeroModClass> label;  // nullopt: unclassifiable
  double prob_below_threshold = 0.0;
  double prob_omega_lt_1 = 0.0;
};

/// Design rows carry the leading intercept, as in SurvivalData.
SubjectClassification classify_subject(const PosteriorDraws& draws, const Eigen::Ref<const Eigen::VectorXd>& x_omega,
                                       const Eigen::Ref<const Eigen::VectorXd>& x_mu, const ClassificationConfig& cfg,
                                       Eigen::Index subject = 0);

/// Covariates without intercept, shared by both predictors.
SubjectClassification classify_subject(const PosteriorDraws& draws, const Eigen::Ref<const Eigen::VectorXd>& x,
                                       const ClassificationConfig& cfg);

struct PopulationClassification {
  std::vector<SubjectClassification> subjects;
  std::array<double, 4> proportions{};  // indexed by ZeroModClass
  double unclassifiable = 0.0;

  double proportion(ZeroModClass c) const { return proportions[static_cast<std::size_t>(c)]; }
};

PopulationClassification classify_population(const PosteriorDraws& draws, const SurvivalData& data,
                                             const ClassificationConfig& cfg);

inline constexpr std::array<ZeroModClass, 4> kAllClasses = {ZeroModClass::ZIGP, ZeroModClass::GP, ZeroModClass::ZDGP,
                                                            ZeroModClass::ZTGP};

}  // namespace hzmgp

#endif  // HZMGP_CLASSIFY_HPP
