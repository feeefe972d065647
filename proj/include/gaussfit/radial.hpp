#pragma once

#include "gaussfit/checks.hpp"
#include "gaussfit/geometry.hpp"
#include "gaussfit/sampler.hpp"

#include <Eigen/Core>

#include <span>
#include <string>
#include <vector>

namespace gaussfit {

/// Radial moments of |X - x0| under the sampled law: mean E, standard
/// deviation S and root mean square E2, with batch-means standard errors.
/// E2 is formed as hypot(E, S) from the same two-pass sums, so
/// E2^2 = E^2 + S^2 holds to rounding.
struct RadialStats {
  Eigen::VectorXd x0;
  double E = 0;
  double S = 0;
  double E2 = 0;
  Eigen::Index m = 0;
  double se_E = 0;
  double se_S = 0;
  double se_E2 = 0;
};

/// |x - x0| for every sample, keeping the chain layout.
Series radial_distances(const SampleBatch& batch, const Eigen::VectorXd& x0);

RadialStats radial_stats(const SampleBatch& batch, const Eigen::VectorXd& x0, int batches = 50);
RadialStats radial_stats(const Series& distances, const Eigen::VectorXd& x0, int batches = 50);

enum class CdfMethod { MonteCarlo, BallOracle, BoxQuadrature };
const char* to_string(CdfMethod m) noexcept;

/// r -> mu_K{|x - x0| <= r} on an increasing grid.
struct RadialCdf {
  Eigen::VectorXd x0;
  std::vector<double> radii;
  std::vector<double> values;
  std::vector<double> se;
  CdfMethod method = CdfMethod::MonteCarlo;
};

/// Counting estimate; the standard error is the batch-means error of the
/// indicator, never below the binomial value.
RadialCdf radial_cdf(const Series& distances, const Eigen::VectorXd& x0, std::span<const double> radii,
                     int batches = 50);
RadialCdf radial_cdf(const SampleBatch& batch, const Eigen::VectorXd& x0, std::span<const double> radii);

/// Exact CDF for a ball about its center, any one-dimensional interval, and a
/// planar box (one-dimensional quadrature). Throws InvalidConfig otherwise.
RadialCdf radial_cdf_oracle(const Body& body, const Eigen::VectorXd& x0, std::span<const double> radii);
bool has_radial_cdf_oracle(const Body& body, const Eigen::VectorXd& x0);

/// `points` radii at evenly spaced sample quantiles of the distances.
std::vector<double> quantile_radial_grid(const Series& distances, int points = 64);

/// Evenly spaced radii on [0, E2 - 3S] (when nonempty) together with E - 2S,
/// the points at which the small-ball checks are evaluated.
std::vector<double> small_ball_grid(const RadialStats& stats, int points = 32);

CheckResult check_radial_identity(const RadialStats& stats);

/// Discrete concavity of log F on an uneven grid: every second divided
/// difference must stay below 4 propagated standard errors. Grid points with
/// F = 0 are dropped.
CheckResult check_radial_logconcavity(const RadialCdf& cdf);

struct SmallBallReport {
  CheckResult tail;
  CheckResult chebyshev_anchor;
};

/// F(r) <= exp(-small_ball_rate (E2 - r) / S) for grid radii in [0, E2 - 3S]
/// (skipped when E2 < 3S), and F(E - 2S) <= 1/4.
SmallBallReport check_small_ball_tail(const RadialStats& stats, const RadialCdf& cdf);

/// Ratio E2 / E against the threshold C_khin.
CheckResult check_khinchine(const RadialStats& stats, double C_khin);

struct ReverseChebyshevCurve {
  std::vector<double> c0;
  std::vector<double> p;
  std::vector<double> se;
  std::vector<bool> holds;
  /// Largest grid c0 with P(|X - x0| <= E - c0 S) >= c0 confirmed at 4 sigma;
  /// zero if none.
  double largest_c0 = 0;
  CheckResult floor_check;
};

ReverseChebyshevCurve check_reverse_chebyshev(const Series& distances, const RadialStats& stats,
                                              std::span<const double> c0_grid, double floor, int batches = 50);

}  // namespace gaussfit
