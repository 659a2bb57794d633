#ifndef HZMGP_FRAILTY_DIST_HPP
#define HZMGP_FRAILTY_DIST_HPP

#include <cstdint>
#include <random>
#include <string_view>

namespace hzmgp {

using Rng = std::mt19937_64;

/// Mean-parameterized generalized Poisson component: mean mu, dispersion phi.
struct GpParams {
  double mu;
  double phi;

  GpParams(double mu, double phi);
};

/// Hurdle zero-modified GP: P(V = 0) = 1 - omega, positives from the
/// zero-truncated GP with weight omega.
struct HzmgpParams {
  double omega;
  GpParams gp;

  HzmgpParams(double omega, GpParams gp);
};

/// Zero-modified GP in the original (rho) parameterization.
struct ZmpsParams {
  double rho;
  GpParams gp;

  ZmpsParams(double rho, GpParams gp);
};

enum class ZeroModClass { ZIGP, GP, ZDGP, ZTGP };

std::string_view to_string(ZeroModClass c);

/// mu / (1 + mu phi); the GP zero mass is exp(-this).
double gp_zero_exponent(const GpParams& p);

/// 1 - P_GP(0), the zero-modification threshold for omega.
double gp_positive_mass(const GpParams& p);

double gp_log_pmf(std::int64_t y, const GpParams& p);

/// -inf where the mass is zero (y = 0 with omega = 1, y >= 1 with omega = 0).
double hzmgp_log_pmf(std::int64_t y, const HzmgpParams& p);

/// Closed-form generating function E[r^V] for r in [0, 1]. When
/// a = mu phi / (1 + mu phi) is below 1e-3 the Lambert-W bracket is
/// evaluated from the Taylor series of W0, which stays exact as phi -> 0.
double hzmgp_pgf(double r, const HzmgpParams& p);

double hzmgp_mean(const HzmgpParams& p);
double hzmgp_variance(const HzmgpParams& p);

HzmgpParams rho_to_omega(const ZmpsParams& z);
ZmpsParams omega_to_rho(const HzmgpParams& p);

/// Deterministic taxonomy of omega against the threshold 1 - P_GP(0).
ZeroModClass classify_by_value(const HzmgpParams& p);

/// Draw V: zero with probability 1 - omega, else a zero-truncated GP draw by
/// inverse CDF. Throws std::runtime_error if the tail walk reaches 10^6.
std::int64_t sample_frailty(const HzmgpParams& p, Rng& rng);

}  // namespace hzmgp

#endif  // HZMGP_FRAILTY_DIST_HPP
