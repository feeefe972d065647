#pragma once

// Reference values computed independently of the library's quadrature.

#include "gaussfit/geometry.hpp"

#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <numbers>

namespace oracle {

/// Composite Simpson rule with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

/// int_0^b exp(-w t^2 / 2) dt from erf.
inline double gauss_segment(double b, double w) {
  return std::sqrt(std::numbers::pi / (2 * w)) * std::erf(b * std::sqrt(w / 2));
}

/// Lower regularized incomplete gamma P(s, x) by its power series.
inline double gamma_p(double s, double x) {
  if (x <= 0) return 0;
  double term = 1.0 / s, sum = term;
  for (int k = 1; k < 2000; ++k) {
    term *= x / (s + k);
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return std::exp(s * std::log(x) - x - std::lgamma(s)) * sum;
}

/// Upper regularized incomplete gamma Q(s, x) by Lentz's continued fraction, for x > s + 1.
inline double gamma_q(double s, double x) {
  const double tiny = 1e-300;
  double b = x + 1 - s, c = 1 / tiny, d = 1 / b, h = d;
  for (int i = 1; i < 2000; ++i) {
    const double an = -i * (i - s);
    b += 2;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1 / d;
    const double step = d * c;
    h *= step;
    if (std::abs(step - 1) < 1e-16) break;
  }
  return std::exp(s * std::log(x) - x - std::lgamma(s)) * h;
}

inline double log_gamma_p(double s, double x) {
  return x > s + 1 ? std::log1p(-gamma_q(s, x)) : std::log(gamma_p(s, x));
}

/// Z of the unit-radius ball about its center in dimension n:
/// E exp(-w |X|^2 / 2) = n int_0^1 r^{n-1} e^{-w r^2/2} dr = Gamma(n/2 + 1) (2/w)^{n/2} P(n/2, w/2).
inline double ball_Z(int n, double w) {
  if (w == 0) return 0;
  const double s = n / 2.0;
  const double log_mean = std::lgamma(s + 1) + s * std::log(2 / w) + log_gamma_p(s, w / 2);
  return -log_mean;
}

/// Z of [0, 1] with x0 = 0.
inline double unit_interval_Z(double w) { return -std::log(gauss_segment(1.0, w)); }

/// Radial moment E|X|^k for the uniform unit ball about its center.
inline double ball_moment(int n, int k) { return static_cast<double>(n) / (n + k); }

inline Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(v.size());
  int i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

inline gaussfit::Body unit_ball(int n) { return gaussfit::Body::ball(Eigen::VectorXd::Zero(n), 1.0); }
inline gaussfit::Body unit_cube(int n) {
  return gaussfit::Body::box(Eigen::VectorXd::Zero(n), Eigen::VectorXd::Ones(n));
}

}  // namespace oracle
