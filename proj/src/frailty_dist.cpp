#include "hzmgp/frailty_dist.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "hzmgp/special_fn.hpp"

namespace hzmgp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kSmallA = 1e-3;
constexpr double kTaxonomyTol = 1e-12;
constexpr double kTailMass = 1e-12;
constexpr std::int64_t kTailCap = 1'000'000;

template <class... Args>
[[noreturn]] void invalid(Args&&... args) {
  std::ostringstream os;
  os.precision(17);
  (os << ... << args);
  throw std::invalid_argument(os.str());
}

}  // namespace

GpParams::GpParams(double mu_, double phi_) : mu(mu_), phi(phi_) {
  if (!(mu > 0.0) || !std::isfinite(mu)) invalid("GpParams: mu must be positive and finite, got ", mu);
  if (!(phi > 0.0) || !std::isfinite(phi)) invalid("GpParams: phi must be positive and finite, got ", phi);
}

HzmgpParams::HzmgpParams(double omega_, GpParams gp_) : omega(omega_), gp(gp_) {
  if (!(omega >= 0.0 && omega <= 1.0)) invalid("HzmgpParams: omega must lie in [0, 1], got ", omega);
}

ZmpsParams::ZmpsParams(double rho_, GpParams gp_) : rho(rho_), gp(gp_) {
  const double upper = 1.0 / gp_positive_mass(gp);
  if (!(rho >= 0.0)) invalid("ZmpsParams: rho must be >= 0, got ", rho);
  if (rho > upper * (1.0 + kTaxonomyTol))
    invalid("ZmpsParams: rho = ", rho, " exceeds upper bound 1/(1 - P_GP(0)) = ", upper);
}

std::string_view to_string(ZeroModClass c) {
  switch (c) {
    case ZeroModClass::ZIGP: return "ZIGP";
    case ZeroModClass::GP: return "GP";
    case ZeroModClass::ZDGP: return "ZDGP";
    case ZeroModClass::ZTGP: return "ZTGP";
  }
  return "?";
}

double gp_zero_exponent(const GpParams& p) { return p.mu / (1.0 + p.mu * p.phi); }

double gp_positive_mass(const GpParams& p) { return -std::expm1(-gp_zero_exponent(p)); }

double gp_log_pmf(std::int64_t y, const GpParams& p) {
  if (y < 0) invalid("gp_log_pmf: y must be non-negative, got ", y);
  const double c = gp_zero_exponent(p);
  if (y == 0) return -c;
  const double yd = static_cast<double>(y);
  const double mphi = p.mu * p.phi;
  const double log_rate = std::log(p.mu) - mphi / (1.0 + mphi) - std::log1p(mphi);
  return (yd - 1.0) * std::log1p(p.phi * yd) - std::lgamma(yd + 1.0) + yd * log_rate - c;
}

double hzmgp_log_pmf(std::int64_t y, const HzmgpParams& p) {
  if (y < 0) invalid("hzmgp_log_pmf: y must be non-negative, got ", y);
  if (y == 0) return p.omega < 1.0 ? std::log1p(-p.omega) : kNegInf;
  if (p.omega == 0.0) return kNegInf;
  return std::log(p.omega) + gp_log_pmf(y, p.gp) - log1mexp(gp_zero_exponent(p.gp));
}

double hzmgp_pgf(double r, const HzmgpParams& p) {
  if (!(r >= 0.0 && r <= 1.0)) {
    std::ostringstream os;
    os << "hzmgp_pgf: r must lie in [0, 1], got " << r;
    throw std::domain_error(os.str());
  }
  const double mu = p.gp.mu;
  const double phi = p.gp.phi;
  const double c = gp_zero_exponent(p.gp);
  const double a = mu * phi / (1.0 + mu * phi);
  double bracket;
  if (a < kSmallA) {
    // Taylor series of W0 at 0 with x = -a u, divided through by phi:
    // (W + a) / phi = c [(1 - u) + sum_{k>=2} (-k)^(k-1) / k! (-u)^k a^(k-1)]
    const double u = r * std::exp(-a);
    double term = -u;  // (-u)^k a^(k-1) / k!
    double sum = 1.0 - u;
    for (int k = 2; k <= 8; ++k) {
      term *= -u * a / k;
      sum += std::pow(-static_cast<double>(k), k - 1) * term;
    }
    bracket = c * sum;
  } else {
    bracket = (lambert_w0(-a * r * std::exp(-a)) + a) / phi;
  }
  return 1.0 - p.omega / (-std::expm1(-c)) * (-std::expm1(-bracket));
}

double hzmgp_mean(const HzmgpParams& p) {
  return p.omega * p.gp.mu / gp_positive_mass(p.gp);
}

double hzmgp_variance(const HzmgpParams& p) {
  const double mu = p.gp.mu;
  const double pos = gp_positive_mass(p.gp);
  const double k = p.omega / pos;
  const double disp = 1.0 + mu * p.gp.phi;
  return k * mu * disp * disp + k * mu * mu * (1.0 - k);
}

HzmgpParams rho_to_omega(const ZmpsParams& z) {
  const double omega = z.rho * gp_positive_mass(z.gp);
  // The constructor tolerance lets omega exceed 1 by rounding only.
  return HzmgpParams(std::min(omega, 1.0), z.gp);
}

ZmpsParams omega_to_rho(const HzmgpParams& p) {
  return ZmpsParams(p.omega / gp_positive_mass(p.gp), p.gp);
}

ZeroModClass classify_by_value(const HzmgpParams& p) {
  const double thr = gp_positive_mass(p.gp);
  if (p.omega >= 1.0 - kTaxonomyTol) return ZeroModClass::ZTGP;
  if (std::abs(p.omega - thr) <= kTaxonomyTol * std::max(p.omega, thr)) return ZeroModClass::GP;
  return p.omega < thr ? ZeroModClass::ZIGP : ZeroModClass::ZDGP;
}

std::int64_t sample_frailty(const HzmgpParams& p, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (!(unif(rng) < p.omega)) return 0;

  const double u = unif(rng);
  const double log_norm = log1mexp(gp_zero_exponent(p.gp));
  double cum = 0.0;
  for (std::int64_t y = 1; y <= kTailCap; ++y) {
    cum += std::exp(gp_log_pmf(y, p.gp) - log_norm);
    if (cum >= u || cum >= 1.0 - kTailMass) return y;
  }
  throw std::runtime_error("sample_frailty: zero-truncated tail walk hit the 10^6 cap");
}

}  // namespace hzmgp
