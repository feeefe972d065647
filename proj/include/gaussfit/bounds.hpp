#pragma once

#include "gaussfit/checks.hpp"
#include "gaussfit/geometry.hpp"
#include "gaussfit/radial.hpp"
#include "gaussfit/sampler.hpp"

#include <Eigen/Core>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace gaussfit {

/// Closed-form constants of the Gaussian gamma^w, inherited by gamma_K^w.
struct GaussianReference {
  double w = 0;
  double d_che = 0;
  double lambda1 = 0;
  double d_exp2 = 0;
};
GaussianReference gaussian_reference(double w);

struct BobkovBound {
  /// c_bob / sqrt(E S)
  double via_E = 0;
  /// c_bob / sqrt(E2 S)
  double via_E2 = 0;
  double se_via_E2 = 0;
};
BobkovBound bobkov_bound(const RadialStats& stats, double c_bob = 1.0);

/// log 2 / E.
double kls_bound(const RadialStats& stats);

/// pi^2 / diam^2 with the certified diameter bound.
double payne_weinberger_bound(const Body& body);

/// c (1/sqrt 2) / (1/sqrt(w) + sqrt(H / w)).
double transfer_cheeger(double w, double H, double c_transfer = 1.0);

/// Total-variation route: c eps^2 / log(1/eps) times the Gaussian rate
/// sqrt(2/pi) sqrt(w), with eps = 1 - d_TV. The factor is capped at 1 (at
/// eps = 1 the two measures coincide). Reported, never asserted.
double transfer_cheeger_tv(double w, double dtv, double c_transfer_tv = 1.0);

struct BasePointResult {
  Eigen::VectorXd x0;
  Eigen::VectorXd start;
  double objective = 0;
  double start_objective = 0;
  int evaluations = 0;
};

/// Nelder-Mead on E(x0) * S(x0) over a fixed uniform sample (common random
/// numbers), starting at the sample centroid. At most `max_evaluations`
/// objective calls.
BasePointResult optimize_base_point(const SampleBatch& uniform, int max_evaluations = 100);
BasePointResult optimize_base_point(const Body& body, const SamplerConfig& config, Eigen::Index m = 20000,
                                    int max_evaluations = 100);

/// D_Che of a density given on a grid: min over interior nodes of
/// rho / min(F, 1 - F), F the trapezoid cumulative mass. Throws NotNormalized
/// when the trapezoid mass differs from 1 by more than 1e-8.
double cheeger_1d_exact(const Eigen::VectorXd& x, const Eigen::VectorXd& rho);

/// exp(-V) on an odd uniform grid of [a, b], normalized by the trapezoid rule.
std::pair<Eigen::VectorXd, Eigen::VectorXd> density_grid(double a, double b, const std::function<double(double)>& V,
                                                         int points = 200001);

struct Lambda1Result {
  double value = 0;
  double coarse = 0;
  double fine = 0;
};

/// First nonzero Neumann eigenvalue of -(rho u')' = lambda rho u on [a, b],
/// rho = exp(-V). Vertex-centred finite differences (ghost-point Neumann
/// condition), Richardson extrapolation from N and 2N. ConvergenceFailure when
/// the two differ by more than 1%.
Lambda1Result lambda1_1d_solver(double a, double b, const std::function<double(double)>& V, int N = 4096);

struct HalfspaceBound {
  double value = 0;
  double se = 0;
  Eigen::VectorXd direction;
  double offset = 0;
  double mass = 0;
  int window = 0;
};

/// Upper bound on D_Che from halfspace test sets. For each direction and each
/// offset at the 5%, 10%, ..., 95% quantiles of the projections, the boundary
/// term is the slab density k / (m delta) with the narrowest slab holding k
/// samples, k = max(500, m / 100). InsufficientSamples below 1000 samples.
HalfspaceBound halfspace_cheeger_upper(const SampleBatch& uniform, const std::vector<Eigen::VectorXd>& directions,
                                       int workers = 1);

/// Coordinate axes followed by the eigenvectors of the sample covariance.
std::vector<Eigen::VectorXd> default_directions(const SampleBatch& uniform);

struct OneDimInstance {
  std::string name;
  double lambda1 = 0;
  double d_che = 0;
};

/// sqrt(lambda1) >= D_Che / 2 on every instance; the ratios D_Che / sqrt(lambda1)
/// go into the witness.
CheckResult consistency_relations(const std::vector<OneDimInstance>& instances);

struct BoundReport {
  Eigen::VectorXd x0_used;
  double bobkov_che = 0;
  double bobkov_che_E = 0;
  double bobkov_se = 0;
  double kls_che = 0;
  double pw_lambda1 = 0;
  double transfer_che = 0;
  double transfer_tv_che = 0;
  double transfer_w = 0;
  double transfer_H = 0;
  double c_bob = 1;
  double c_transfer = 1;
  double c_transfer_tv = 1;
  std::optional<HalfspaceBound> reference_che_upper;
  std::optional<double> exact_lambda1;
  std::optional<double> exact_che;
  GaussianReference gaussian_w0;
};

/// Exact D_Che (1D only) and lambda1 (1D and boxes) of the uniform measure,
/// from the grid solvers.
std::optional<double> exact_cheeger(const Body& body);
std::optional<double> exact_lambda1(const Body& body);

/// Every lower bound against the exact or halfspace references (lower <=
/// reference + 4 SE). Bounds whose constants are uncalibrated (all defaults 1)
/// are only asserted where the check is meaningful: PW against exact lambda1.
/// Comparisons with the eigenvalue solver allow a relative slack of 1e-6.
CheckResult check_bound_sandwich(const BoundReport& report);

}  // namespace gaussfit
