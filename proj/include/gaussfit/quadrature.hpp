#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <span>
#include <utility>
#include <vector>

namespace gaussfit {

template <typename Scalar>
struct QuadratureResult {
  Scalar value = 0;
  Scalar error = 0;
  int intervals = 0;
  bool converged = false;
};

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule on [-1, 1].
// Odd indices are the Gauss abscissae.
inline constexpr double kKronrodNodes[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

inline constexpr double kKronrodWeights[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

inline constexpr double kGaussWeights[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <typename Scalar>
struct Segment {
  Scalar a, b, value, error;
  bool operator<(const Segment& other) const { return error < other.error; }
};

template <typename Scalar, typename F>
Segment<Scalar> gauss_kronrod_15(F& f, Scalar a, Scalar b) {
  const Scalar center = (a + b) / 2;
  const Scalar half = (b - a) / 2;
  const Scalar fc = f(center);
  Scalar kronrod = fc * Scalar(kKronrodWeights[7]);
  Scalar gauss = fc * Scalar(kGaussWeights[3]);
  for (int j = 0; j < 7; ++j) {
    const Scalar dx = half * Scalar(kKronrodNodes[j]);
    const Scalar sum = f(center - dx) + f(center + dx);
    kronrod += Scalar(kKronrodWeights[j]) * sum;
    if (j % 2 == 1) gauss += Scalar(kGaussWeights[j / 2]) * sum;
  }
  return {a, b, kronrod * half, std::abs((kronrod - gauss) * half)};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (7/15) quadrature of f over [a, b].
///
/// The interval is first cut at the supplied breakpoints, which is how callers
/// make sure a narrow peak is not stepped over. Subdivision always bisects the
/// segment with the largest error estimate and stops once the summed estimate
/// is below max(abs_tol, rel_tol * |value|).
template <typename Scalar, typename F>
QuadratureResult<Scalar> integrate(F&& f, Scalar a, Scalar b, std::span<const Scalar> breakpoints = {},
                                   Scalar rel_tol = Scalar(1e-12), Scalar abs_tol = Scalar(0),
                                   int max_intervals = 4000) {
  QuadratureResult<Scalar> result;
  if (a == b) {
    result.converged = true;
    return result;
  }
  Scalar sign = 1;
  if (b < a) {
    std::swap(a, b);
    sign = -1;
  }
  std::vector<Scalar> cuts{a};
  for (Scalar p : breakpoints)
    if (p > a && p < b) cuts.push_back(p);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::priority_queue<detail::Segment<Scalar>> heap;
  Scalar total = 0, total_error = 0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    auto seg = detail::gauss_kronrod_15<Scalar>(f, cuts[i], cuts[i + 1]);
    total += seg.value;
    total_error += seg.error;
    heap.push(seg);
  }
  const Scalar roundoff = Scalar(50) * std::numeric_limits<Scalar>::epsilon();
  while (total_error > std::max({abs_tol, rel_tol * std::abs(total), roundoff * std::abs(total)}) &&
         static_cast<int>(heap.size()) < max_intervals) {
    auto worst = heap.top();
    heap.pop();
    const Scalar mid = (worst.a + worst.b) / 2;
    if (!(mid > worst.a && mid < worst.b)) {
      heap.push(worst);
      break;
    }
    auto left = detail::gauss_kronrod_15<Scalar>(f, worst.a, mid);
    auto right = detail::gauss_kronrod_15<Scalar>(f, mid, worst.b);
    heap.push(left);
    heap.push(right);
    // Re-summing from the heap would be O(n); track the totals incrementally
    // and refresh them periodically to shed accumulated rounding.
    total += left.value + right.value - worst.value;
    total_error += left.error + right.error - worst.error;
    if (heap.size() % 64 == 0) {
      auto copy = heap;
      total = 0;
      total_error = 0;
      while (!copy.empty()) {
        total += copy.top().value;
        total_error += copy.top().error;
        copy.pop();
      }
    }
  }
  result.value = sign * total;
  result.error = total_error;
  result.intervals = static_cast<int>(heap.size());
  result.converged =
      total_error <= std::max({abs_tol, rel_tol * std::abs(total), roundoff * std::abs(total)});
  return result;
}

template <typename Scalar, typename F>
QuadratureResult<Scalar> integrate(F&& f, Scalar a, Scalar b, std::initializer_list<Scalar> breakpoints,
                                   Scalar rel_tol = Scalar(1e-12)) {
  std::vector<Scalar> cuts(breakpoints);
  return integrate<Scalar>(std::forward<F>(f), a, b, std::span<const Scalar>(cuts), rel_tol);
}

/// Nodes and weights of the n-point Gauss-Legendre rule mapped onto [a, b].
template <typename Scalar>
std::pair<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>, Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>
gauss_legendre(int n, Scalar a, Scalar b) {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Vec nodes(n), weights(n);
  const Scalar pi = std::numbers::pi_v<Scalar>;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    Scalar x = std::cos(pi * (Scalar(i) + Scalar(0.75)) / (Scalar(n) + Scalar(0.5)));
    Scalar derivative = 0;
    for (int iter = 0; iter < 100; ++iter) {
      Scalar p0 = 1, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const Scalar p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1;
      derivative = n * (x * p1 - p0) / (x * x - 1);
      const Scalar step = p1 / derivative;
      x -= step;
      if (std::abs(step) <= 4 * std::numeric_limits<Scalar>::epsilon()) break;
    }
    // Recompute the derivative at the converged node for the weight.
    Scalar p0 = 1, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const Scalar p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    derivative = n == 1 ? Scalar(1) : n * (x * p1 - p0) / (x * x - 1);
    const Scalar w = 2 / ((1 - x * x) * derivative * derivative);
    nodes(i) = -x;
    nodes(n - 1 - i) = x;
    weights(i) = w;
    weights(n - 1 - i) = w;
  }
  const Scalar half = (b - a) / 2, mid = (a + b) / 2;
  return {(nodes.array() * half + mid).matrix(), (weights * half).eval()};
}

}  // namespace gaussfit
