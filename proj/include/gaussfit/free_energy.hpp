#pragma once

#include "gaussfit/checks.hpp"
#include "gaussfit/geometry.hpp"
#include "gaussfit/radial.hpp"
#include "gaussfit/sampler.hpp"

#include <Eigen/Core>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gaussfit {

// Throughout, Z_K(w) = -log E_{mu_K} exp(-w |x - x0|^2 / 2).

enum class FreeEnergyMethod { MonteCarlo, Thermo, BoxQuadrature, BallQuadrature, Interpolated };
const char* to_string(FreeEnergyMethod m) noexcept;

struct FreeEnergyPoint {
  double w = 0;
  double Z = 0;
  double se = 0;
  FreeEnergyMethod method = FreeEnergyMethod::MonteCarlo;
  /// Kish effective sample size of the importance weights (mc only).
  double ess = std::numeric_limits<double>::quiet_NaN();
  std::string warning;
};

struct FreeEnergyCurve {
  std::string body_id;
  Eigen::VectorXd x0;
  std::vector<FreeEnergyPoint> points;
  RadialStats stats;
};

/// Plain estimator -log mean exp(-w r^2 / 2) over uniform draws, evaluated
/// with the exponent shifted by its maximum. Delta-method SE from batch means.
/// Sets a warning when the effective sample size drops below 100.
FreeEnergyPoint free_energy_mc(const Series& distances, double w, int batches = 50);
FreeEnergyPoint free_energy_mc(const SampleBatch& uniform, const Eigen::VectorXd& x0, double w);

struct ThermoConfig {
  SamplerConfig sampler;
  Eigen::Index samples_per_node = 10000;
  /// Gauss-Legendre nodes per piece of the curve integration.
  int nodes_per_piece = 3;
  /// Pieces are split until they are at most this wide in t = log(1 + s/s0).
  double max_piece_width = 1.0;
  /// Nodes of the single-point rule.
  int single_point_nodes = 16;
  /// Scale s0 of the substitution; 0 means 1/E2^2 from a short uniform pilot run.
  double scale = 0;
  /// Threads used to evaluate nodes concurrently; 0 means sampler.workers.
  int workers = 0;
};

/// Thermodynamic integration Z(w) = int_0^w (1/2) E_{gamma_K^s} |x - x0|^2 ds.
/// The integral is taken in t = log(1 + s / s0), which keeps the integrand
/// smooth both for s << s0 (where it is nearly constant) and s >> s0 (where it
/// decays like n / (2 s)). Each node runs its own Gibbs sampler with a seed
/// derived from the node position.
FreeEnergyPoint free_energy_thermo(const Body& body, const Eigen::VectorXd& x0, double w, const ThermoConfig& config);

/// The same integral accumulated along an increasing grid; SEs are summed in
/// quadrature over the independent nodes below each grid point.
std::vector<FreeEnergyPoint> free_energy_thermo_curve(const Body& body, const Eigen::VectorXd& x0,
                                                      std::span<const double> w_grid, const ThermoConfig& config);

/// Product of one-dimensional quadratures for a box; x0 anywhere.
FreeEnergyPoint free_energy_oracle_box(const Box<double>& box, const Eigen::VectorXd& x0, double w);
/// Radial quadrature for a ball about its center.
FreeEnergyPoint free_energy_oracle_ball(double R, int n, double w);
/// Dispatches to an oracle for boxes (any x0), balls about their center and
/// one-dimensional intervals, looking through translations.
std::optional<FreeEnergyPoint> free_energy_oracle(const Body& body, const Eigen::VectorXd& x0, double w);

/// log of int_a^b exp(-w t^2 / 2) dt, computed without underflow.
double log_gaussian_segment(double a, double b, double w);

/// Compares z with (n/2) log(w / 2 pi) - log gamma(sqrt(w) (K - x0)) + log Vol(K),
/// gamma estimated by counting standard Gaussian draws. Skips when the
/// volume is unknown or the estimated mass is below 1e-3.
CheckResult gaussian_identity_check(const Body& body, const Eigen::VectorXd& x0, const FreeEnergyPoint& z,
                                    Eigen::Index draws, std::uint64_t seed);

/// Default grid: `points` log-spaced values over [lo, hi] / (E2 S) plus the
/// given anchors (in units of 1 / (E2 S)), merged and sorted.
std::vector<double> default_w_grid(const RadialStats& stats, std::span<const double> anchors, int points = 24,
                                   double lo = 1e-3, double hi = 1e3);

/// mc where w E2^2 <= 20 and the effective sample size is at least m / 10,
/// thermo elsewhere.
const FreeEnergyPoint& select_estimate(const FreeEnergyPoint& mc, const FreeEnergyPoint& thermo, double E2,
                                       Eigen::Index m);

/// Z(w) / w >= E2^2 / 2 - C E2 S wherever w <= c / (E2 S).
CheckResult check_free_energy_lower_bound(const FreeEnergyCurve& curve);
/// Z(w) / w >= (max(E2 - 3S, 0))^2 / 2 wherever w <= c_refined / (E2 S).
CheckResult check_free_energy_refined_bound(const FreeEnergyCurve& curve, double c_refined);
/// Z(w) / w <= E2^2 / 2 - c_u E2 S wherever w >= C_u / (E2 S). The witness
/// carries the empirical c_u at the first such grid point.
CheckResult check_free_energy_upper_bound(const FreeEnergyCurve& curve, double c_u, double C_u);

/// Empirical (E2^2 / 2 - Z / w) / (E2 S) at w, with its SE.
std::pair<double, double> empirical_c_u(const RadialStats& stats, const FreeEnergyPoint& z);

CheckResult check_z_nondecreasing(const FreeEnergyCurve& curve);
CheckResult check_z_concave(const FreeEnergyCurve& curve);
CheckResult check_z_over_w_nonincreasing(const FreeEnergyCurve& curve);
/// Z(w1) / w1 at the smallest positive grid point against E2^2 / 2, within
/// max(4 SE, 1%).
CheckResult check_slope_at_origin(const FreeEnergyCurve& curve);

/// Pairwise agreement within 4 combined SEs of two estimates at equal w.
bool estimates_agree(const FreeEnergyPoint& a, const FreeEnergyPoint& b, double sigmas = kSigmas);

/// Linear interpolation of Z in w between the bracketing grid points; exact
/// grid hits are returned unchanged.
FreeEnergyPoint interpolate_curve(const FreeEnergyCurve& curve, double w);

}  // namespace gaussfit
