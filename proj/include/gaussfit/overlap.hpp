#pragma once

#include "gaussfit/checks.hpp"
#include "gaussfit/free_energy.hpp"
#include "gaussfit/radial.hpp"
#include "gaussfit/sampler.hpp"

#include <vector>

namespace gaussfit {

struct EntropyEstimate {
  double H = 0;
  double se = 0;
  /// True when a slightly negative estimate was raised to 0.
  bool clipped = false;
};

/// H(mu_K | gamma_K^w) = E2^2 w / 2 - Z(w). Negative values within 4 SE of 0
/// are clipped to 0; larger negative values are kept so they show up as
/// failures downstream.
EntropyEstimate relative_entropy(const RadialStats& stats, const FreeEnergyPoint& z);

/// Pinsker: d_TV <= sqrt(H / 2).
double tv_pinsker(double H);

struct TvEstimate {
  double dtv = 0;
  double se = 0;
  /// Bound on the shift caused by the error in Z: |d dtv / dZ| <= 1/2.
  double bias_bound = 0;
};

/// d_TV(mu_K, gamma_K^w) = (1/2) E_{mu_K} |1 - exp(Z - w |x - x0|^2 / 2)| with
/// the plug-in Z.
TvEstimate tv_direct(const Series& distances, const FreeEnergyPoint& z, int batches = 50);

/// w0 = c_prime / (E2 S); DegenerateBody when S = 0.
double choose_w0(const RadialStats& stats, double c_prime);

struct OverlapReport {
  double w0 = 0;
  FreeEnergyPoint z;
  bool interpolated = false;
  double H = 0;
  double se_H = 0;
  double dtv_pinsker = 0;
  double dtv_direct = 0;
  double se_dtv = 0;
  double dtv_bias = 0;
  CheckResult entropy_check;
  CheckResult tv_check;
  CheckResult pinsker_check;
};

/// Pinsker domination dtv_direct <= sqrt(H/2) at 4 sigma.
CheckResult check_pinsker(const EntropyEstimate& h, const TvEstimate& tv, double w);

/// Evaluates H and both TV figures at w and asserts H <= 1/2 and d_TV <= 1/2
/// at 4 sigma. Z comes from the curve, linearly interpolated (and flagged)
/// when w is not a grid point.
OverlapReport overlap_at(const Series& distances, const FreeEnergyCurve& curve, double w, int batches = 50);

/// overlap_at(choose_w0(stats, c_prime)).
OverlapReport corollary_check(const Series& distances, const FreeEnergyCurve& curve, double c_prime,
                              int batches = 50);

/// H(w) along the curve: nondecreasing and convex, discrete checks at 2 sigma.
CheckResult check_entropy_shape(const FreeEnergyCurve& curve);

/// Pinsker domination at every curve point.
CheckResult check_pinsker_on_curve(const Series& distances, const FreeEnergyCurve& curve, int batches = 50);

}  // namespace gaussfit
