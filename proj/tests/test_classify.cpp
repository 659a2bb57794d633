#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "hzmgp/classify.hpp"

using namespace hzmgp;

namespace {

double logit(double p) { return std::log(p / (1.0 - p)); }

// Intercept-only posterior whose draws put omega at the listed values with
// fixed mu and phi. eta_omega = 50 saturates the link to omega = 1.
PosteriorDraws intercept_draws(const std::vector<double>& eta_omega, double mu, double phi) {
  PosteriorDraws d;
  d.layout.n_omega = 1;
  d.layout.n_mu = 1;
  d.chains = 1;
  d.draws_per_chain = static_cast<int>(eta_omega.size());
  d.draws.resize(static_cast<Eigen::Index>(eta_omega.size()), d.layout.dim());
  for (std::size_t k = 0; k < eta_omega.size(); ++k)
    d.draws.row(static_cast<Eigen::Index>(k)) << eta_omega[k], std::log(mu), std::log(phi), 0.0, 0.0;
  return d;
}

std::vector<double> repeat(double eta, int n) { return std::vector<double>(static_cast<std::size_t>(n), eta); }

std::vector<double> concat(std::vector<double> a, const std::vector<double>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

SubjectClassification classify_intercept(const PosteriorDraws& d, double alpha = 0.1) {
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
  return classify_subject(d, one, one, ClassificationConfig(alpha));
}

}  // namespace

TEST_CASE("threshold") {
  CHECK(threshold(3.0, 0.1) == doctest::Approx(0.90050941950514156).epsilon(1e-14));
  CHECK(threshold(1.0, 0.0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-15));
  CHECK(threshold(1e-12, 0.3) == doctest::Approx(1e-12).epsilon(1e-9));
  CHECK(threshold(0.0, 0.3) == 0.0);
  CHECK(threshold(1e300, 0.5) == doctest::Approx(1.0 - std::exp(-2.0)).epsilon(1e-12));
  for (double mu : {0.5, 2.0, 8.0})
    for (double phi : {0.0, 0.2, 1.0})
      CHECK(threshold(mu, phi) == doctest::Approx(1.0 - std::exp(-mu / (1.0 + mu * phi))).epsilon(1e-15));
  CHECK(threshold(2.0, 0.1) > threshold(2.0, 0.5));
  CHECK(threshold(3.0, 0.1) > threshold(2.0, 0.1));
  CHECK_THROWS_AS(threshold(-1.0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(threshold(1.0, -0.1), std::invalid_argument);
}

TEST_CASE("alpha validation") {
  CHECK_NOTHROW(ClassificationConfig(0.1));
  CHECK_NOTHROW(ClassificationConfig(0.49));
  CHECK_THROWS_AS(ClassificationConfig(0.5), std::invalid_argument);
  CHECK_THROWS_AS(ClassificationConfig(0.0), std::invalid_argument);
  CHECK_THROWS_AS(ClassificationConfig(-0.2), std::invalid_argument);
  CHECK_THROWS_AS(ClassificationConfig(std::nan("")), std::invalid_argument);
}

TEST_CASE("decision table") {
  const double a = 0.1;
  CHECK(decide(1.0, 1.0, a) == ZeroModClass::ZIGP);
  CHECK(decide(0.9, 1.0, a) == ZeroModClass::ZIGP);
  CHECK(decide(0.9, 0.9, a) == ZeroModClass::ZIGP);
  CHECK(decide(0.5, 1.0, a) == ZeroModClass::GP);
  CHECK(decide(0.89, 0.95, a) == ZeroModClass::GP);
  CHECK(decide(0.11, 0.95, a) == ZeroModClass::GP);
  CHECK(decide(0.1, 1.0, a) == ZeroModClass::ZDGP);
  CHECK(decide(0.0, 0.9, a) == ZeroModClass::ZDGP);
  CHECK(decide(0.0, 0.0, a) == ZeroModClass::ZTGP);
  CHECK(decide(0.0, 0.1, a) == ZeroModClass::ZTGP);
  // P(omega < 1) strictly between alpha and 1 - alpha is left open by the rule
  CHECK_FALSE(decide(0.0, 0.5, a).has_value());
  CHECK_FALSE(decide(0.2, 0.89, a).has_value());
  CHECK_FALSE(decide(0.0, 0.11, a).has_value());
  CHECK(decide(0.3, 0.75, 0.25) == ZeroModClass::GP);
  CHECK(decide(0.75, 0.75, 0.25) == ZeroModClass::ZIGP);
  CHECK_FALSE(decide(0.75, 0.7, 0.25).has_value());
}

TEST_CASE("hand-constructed draw sets cover every branch") {
  const double mu = 3.0, phi = 0.1;  // threshold 0.9005
  const double below = logit(0.3), above = logit(0.97), saturated = 50.0;

  auto r = classify_intercept(intercept_draws(repeat(below, 20), mu, phi));
  CHECK(r.label == ZeroModClass::ZIGP);
  CHECK(r.prob_below_threshold == 1.0);
  CHECK(r.prob_omega_lt_1 == 1.0);

  r = classify_intercept(intercept_draws(concat(repeat(below, 10), repeat(above, 10)), mu, phi));
  CHECK(r.label == ZeroModClass::GP);
  CHECK(r.prob_below_threshold == 0.5);

  r = classify_intercept(intercept_draws(repeat(above, 20), mu, phi));
  CHECK(r.label == ZeroModClass::ZDGP);
  CHECK(r.prob_below_threshold == 0.0);

  r = classify_intercept(intercept_draws(repeat(saturated, 20), mu, phi));
  CHECK(r.label == ZeroModClass::ZTGP);
  CHECK(r.prob_omega_lt_1 == 0.0);

  r = classify_intercept(intercept_draws(concat(repeat(saturated, 10), repeat(below, 10)), mu, phi));
  CHECK_FALSE(r.label.has_value());
  CHECK(r.prob_omega_lt_1 == 0.5);

  // boundaries: 9 of 10 and 1 of 10
  r = classify_intercept(intercept_draws(concat(repeat(below, 9), repeat(above, 1)), mu, phi));
  CHECK(r.label == ZeroModClass::ZIGP);
  r = classify_intercept(intercept_draws(concat(repeat(below, 1), repeat(above, 9)), mu, phi));
  CHECK(r.label == ZeroModClass::ZDGP);
  r = classify_intercept(intercept_draws(concat(repeat(below, 9), repeat(saturated, 1)), mu, phi));
  CHECK(r.label == ZeroModClass::ZIGP);
  r = classify_intercept(intercept_draws(concat(repeat(below, 1), repeat(saturated, 9)), mu, phi));
  CHECK(r.label == ZeroModClass::ZTGP);
  r = classify_intercept(intercept_draws(concat(repeat(below, 8), repeat(saturated, 2)), mu, phi));
  CHECK_FALSE(r.label.has_value());

  // a larger alpha widens the GP band into ZIGP / ZDGP
  r = classify_intercept(intercept_draws(concat(repeat(below, 7), repeat(above, 3)), mu, phi), 0.3);
  CHECK(r.label == ZeroModClass::ZIGP);
  r = classify_intercept(intercept_draws(concat(repeat(below, 7), repeat(above, 3)), mu, phi), 0.1);
  CHECK(r.label == ZeroModClass::GP);
}

TEST_CASE("the threshold moves with mu in each draw") {
  // omega = 0.5 against thresholds 1 - exp(-0.5 / 1.05) = 0.38 and 0.9
  std::vector<double> eta(20, 0.0);
  PosteriorDraws d = intercept_draws(eta, 3.0, 0.1);
  for (int k = 0; k < 10; ++k) d.draws(k, d.layout.mu_begin()) = std::log(0.5);
  const auto r = classify_intercept(d);
  CHECK(r.prob_below_threshold == 0.5);
  CHECK(r.label == ZeroModClass::GP);
}

TEST_CASE("point-mass draws reduce to classify_by_value") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> norm;
  std::bernoulli_distribution coin(0.5);
  int agreements = 0;
  std::array<int, 4> seen{};
  for (int trial = 0; trial < 200; ++trial) {
    PosteriorDraws d;
    d.layout.n_omega = 3;
    d.layout.n_mu = 3;
    Eigen::VectorXd theta(d.layout.dim());
    for (int k = 0; k < theta.size(); ++k) theta(k) = 1.5 * norm(rng);
    if (trial % 10 == 0) theta(0) = 60.0;  // saturated omega
    d.draws = theta.transpose().replicate(5, 1);

    std::vector<SubjectRecord> records;
    for (int i = 0; i < 10; ++i) records.push_back({1.0, false, Eigen::Vector2d(norm(rng), coin(rng) ? 1.0 : 0.0)});
    const SurvivalData data = make_survival_data(records);
    const auto pop = classify_population(d, data, ClassificationConfig(0.1));
    for (Eigen::Index i = 0; i < data.size(); ++i) {
      const double omega = link_omega(records[i].covariates, theta.segment(0, 3));
      const double mu = link_mu(records[i].covariates, theta.segment(3, 3));
      const ZeroModClass expected = classify_by_value(HzmgpParams(omega, GpParams(mu, std::exp(theta(6)))));
      const auto& s = pop.subjects[static_cast<std::size_t>(i)];
      REQUIRE(s.label.has_value());
      CHECK(*s.label == expected);
      agreements += *s.label == expected;
      ++seen[static_cast<std::size_t>(expected)];
    }
  }
  CHECK(agreements == 2000);
  // a point mass gives P(omega < threshold) in {0, 1}; GP needs omega on the threshold itself
  CHECK(seen[static_cast<std::size_t>(ZeroModClass::ZIGP)] > 0);
  CHECK(seen[static_cast<std::size_t>(ZeroModClass::ZDGP)] > 0);
  CHECK(seen[static_cast<std::size_t>(ZeroModClass::ZTGP)] > 0);
}

TEST_CASE("population proportions") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> norm;
  PosteriorDraws d;
  d.layout.n_omega = 3;
  d.layout.n_mu = 3;
  d.draws.resize(40, d.layout.dim());
  for (Eigen::Index r = 0; r < d.draws.rows(); ++r)
    for (Eigen::Index k = 0; k < d.draws.cols(); ++k) d.draws(r, k) = norm(rng);

  std::vector<SubjectRecord> records;
  for (int i = 0; i < 30; ++i) records.push_back({1.0, true, Eigen::Vector2d(norm(rng), i % 2)});
  records.push_back(records[3]);
  records.push_back(records[3]);
  const SurvivalData data = make_survival_data(records);
  const auto pop = classify_population(d, data, ClassificationConfig(0.1));
  REQUIRE(pop.subjects.size() == records.size());
  double total = pop.unclassifiable;
  for (auto c : kAllClasses) total += pop.proportion(c);
  CHECK(std::abs(total - 1.0) < 1e-12);
  CHECK(pop.subjects[30].label == pop.subjects[3].label);
  CHECK(pop.subjects[31].prob_below_threshold == pop.subjects[3].prob_below_threshold);

  // agrees with the single-subject entry points
  for (Eigen::Index i : {0, 7, 19}) {
    const auto one = classify_subject(d, data.x_omega.row(i).transpose(), data.x_mu.row(i).transpose(),
                                      ClassificationConfig(0.1), i);
    CHECK(one.label == pop.subjects[static_cast<std::size_t>(i)].label);
    CHECK(one.prob_below_threshold == pop.subjects[static_cast<std::size_t>(i)].prob_below_threshold);
    const auto shared = classify_subject(d, records[static_cast<std::size_t>(i)].covariates, ClassificationConfig(0.1));
    CHECK(shared.prob_omega_lt_1 == one.prob_omega_lt_1);
  }

  PosteriorDraws empty;
  empty.layout = d.layout;
  CHECK_THROWS_AS(classify_population(empty, data, ClassificationConfig()), std::invalid_argument);
  CHECK_THROWS_AS(classify_subject(d, Eigen::VectorXd::Ones(2), Eigen::VectorXd::Ones(3), ClassificationConfig()),
                  std::invalid_argument);
}
