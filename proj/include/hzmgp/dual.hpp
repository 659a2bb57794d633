#ifndef HZMGP_DUAL_HPP
#define HZMGP_DUAL_HPP

#include <Eigen/Core>
#include <cmath>

#include "hzmgp/special_fn.hpp"

namespace hzmgp {

/**
 * Forward-mode dual number carrying N directional derivatives.
 *
 * Only the operations the model kernels need are provided. Comparisons
 * look at the value alone, so branchy scalar code runs unchanged.
 */
template <int N>
struct Dual {
  using Grad = Eigen::Array<double, N, 1>;

  double val = 0.0;
  Grad grad = Grad::Zero();

  Dual() = default;
  Dual(double v) : val(v) {}  // NOLINT: implicit lift of constants
  Dual(double v, const Grad& g) : val(v), grad(g) {}

  /// The k-th independent variable with value v.
  static Dual variable(double v, int k) {
    Dual d(v);
    d.grad(k) = 1.0;
    return d;
  }

  Dual& operator+=(const Dual& o) { val += o.val; grad += o.grad; return *this; }
  Dual& operator-=(const Dual& o) { val -= o.val; grad -= o.grad; return *this; }
  Dual& operator*=(const Dual& o) {
    grad = grad * o.val + o.grad * val;
    val *= o.val;
    return *this;
  }
  Dual& operator/=(const Dual& o) {
    const double inv = 1.0 / o.val;
    grad = (grad - o.grad * (val * inv)) * inv;
    val *= inv;
    return *this;
  }
};

template <int N> Dual<N> operator-(const Dual<N>& a) { return {-a.val, -a.grad}; }

template <int N> Dual<N> operator+(Dual<N> a, const Dual<N>& b) { return a += b; }
template <int N> Dual<N> operator-(Dual<N> a, const Dual<N>& b) { return a -= b; }
template <int N> Dual<N> operator*(Dual<N> a, const Dual<N>& b) { return a *= b; }
template <int N> Dual<N> operator/(Dual<N> a, const Dual<N>& b) { return a /= b; }

template <int N> Dual<N> operator+(Dual<N> a, double b) { a.val += b; return a; }
template <int N> Dual<N> operator+(double a, Dual<N> b) { b.val += a; return b; }
template <int N> Dual<N> operator-(Dual<N> a, double b) { a.val -= b; return a; }
template <int N> Dual<N> operator-(double a, const Dual<N>& b) { return {a - b.val, -b.grad}; }
template <int N> Dual<N> operator*(const Dual<N>& a, double b) { return {a.val * b, a.grad * b}; }
template <int N> Dual<N> operator*(double a, const Dual<N>& b) { return {a * b.val, a * b.grad}; }
template <int N> Dual<N> operator/(const Dual<N>& a, double b) { return {a.val / b, a.grad / b}; }
template <int N> Dual<N> operator/(double a, const Dual<N>& b) {
  const double v = a / b.val;
  return {v, b.grad * (-v / b.val)};
}

template <int N> bool operator<(const Dual<N>& a, double b) { return a.val < b; }
template <int N> bool operator>(const Dual<N>& a, double b) { return a.val > b; }
template <int N> bool operator<=(const Dual<N>& a, double b) { return a.val <= b; }
template <int N> bool operator>=(const Dual<N>& a, double b) { return a.val >= b; }
template <int N> bool operator==(const Dual<N>& a, double b) { return a.val == b; }
template <int N> bool operator<(const Dual<N>& a, const Dual<N>& b) { return a.val < b.val; }
template <int N> bool operator>(const Dual<N>& a, const Dual<N>& b) { return a.val > b.val; }

// Chain rule helper: value f, derivative df/dx at a.val.
template <int N>
Dual<N> chain(const Dual<N>& a, double f, double dfdx) {
  return {f, a.grad * dfdx};
}

template <int N> Dual<N> exp(const Dual<N>& a) {
  const double e = std::exp(a.val);
  return chain(a, e, e);
}
template <int N> Dual<N> log(const Dual<N>& a) { return chain(a, std::log(a.val), 1.0 / a.val); }
template <int N> Dual<N> log1p(const Dual<N>& a) {
  return chain(a, std::log1p(a.val), 1.0 / (1.0 + a.val));
}
template <int N> Dual<N> expm1(const Dual<N>& a) {
  return chain(a, std::expm1(a.val), std::exp(a.val));
}
template <int N> Dual<N> sqrt(const Dual<N>& a) {
  const double s = std::sqrt(a.val);
  return chain(a, s, 0.5 / s);
}

/// Lambert W0 with dW/dx = 1 / (e^W (1 + W)) = W / (x (1 + W)).
template <int N> Dual<N> lambert_w0(const Dual<N>& a) {
  const double w = lambert_w0(a.val);
  return chain(a, w, 1.0 / (std::exp(w) * (1.0 + w)));
}

template <int N> Dual<N> log1mexp(const Dual<N>& a) {
  // d/da log(1 - e^{-a}) = 1 / expm1(a)
  return chain(a, log1mexp(a.val), 1.0 / std::expm1(a.val));
}

inline double value_of(double x) { return x; }
template <int N> double value_of(const Dual<N>& x) { return x.val; }

}  // namespace hzmgp

#endif  // HZMGP_DUAL_HPP
