#include "hzmgp/special_fn.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace hzmgp {

namespace {

constexpr double kE = 2.71828182845904523536028747135266250;
constexpr double kBranchSeriesRadius = 1e-8;
constexpr int kMaxHalleySteps = 50;

// W0 near -1/e in powers of p = sqrt(2 (e x + 1)); d = x + 1/e.
double branch_point_series(double d) {
  const double p = std::sqrt(std::max(0.0, 2.0 * kE * d));
  return -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0 + p * (-43.0 / 540.0))));
}

double initial_guess(double x, double d) {
  if (x < -0.25) return branch_point_series(d);
  if (x < 0.25) return x * (1.0 - x * (1.0 - 1.5 * x));
  if (x < 3.0) return std::log1p(x) * (1.0 - 0.15 * std::log1p(x));
  const double l1 = std::log(x);
  const double l2 = std::log(l1);
  return l1 - l2 + l2 / l1;
}

[[noreturn]] void domain_failure(const char* what, double x) {
  std::ostringstream os;
  os.precision(17);
  os << what << ": argument " << x << " is outside the principal branch domain";
  throw std::domain_error(os.str());
}

}  // namespace

double lambert_w0(double x) {
  if (!std::isfinite(x)) domain_failure("lambert_w0", x);
  const double d = x + kInvE;
  if (d < -kBranchPointSlack) domain_failure("lambert_w0", x);
  if (x == 0.0) return 0.0;
  if (d < kBranchSeriesRadius) return branch_point_series(d);

  double w = initial_guess(x, d);
  for (int it = 0; it < kMaxHalleySteps; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    const double wp1 = w + 1.0;
    const double step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
    w -= step;
    if (std::abs(step) <= 1e-14 * (1.0 + std::abs(w))) break;
  }
  return w;
}

double lambert_w0_derivative(double x) {
  if (!std::isfinite(x) || x + kInvE <= 0.0) domain_failure("lambert_w0_derivative", x);
  const double w = lambert_w0(x);
  if (w <= -1.0) domain_failure("lambert_w0_derivative", x);
  return 1.0 / (std::exp(w) * (1.0 + w));
}

double log1mexp(double a) {
  if (!(a > 0.0)) {
    std::ostringstream os;
    os << "log1mexp: requires a > 0, got " << a;
    throw std::domain_error(os.str());
  }
  if (a <= 0.6931471805599453) return std::log(-std::expm1(-a));
  return std::log1p(-std::exp(-a));
}

}  // namespace hzmgp
