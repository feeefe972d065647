#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

namespace gaussfit {

enum class Verdict { Pass, Skip, Fail };

const char* to_string(Verdict v) noexcept;

/// Outcome of one verification check, with the numbers that decided it.
struct CheckResult {
  CheckResult() = default;
  explicit CheckResult(std::string check_name) : name(std::move(check_name)) {}

  std::string name;
  Verdict verdict = Verdict::Skip;
  std::string detail;
  std::vector<std::pair<std::string, double>> witness;

  bool passed() const { return verdict == Verdict::Pass; }
  bool failed() const { return verdict == Verdict::Fail; }
  CheckResult& add(std::string key, double value) {
    witness.emplace_back(std::move(key), value);
    return *this;
  }
  double get(const std::string& key) const {
    for (const auto& [k, v] : witness)
      if (k == key) return v;
    return std::nan("");
  }
};

/// Statistical tolerance, in standard errors, for every theorem check.
inline constexpr double kSigmas = 4.0;
/// Slack, in standard errors, for discrete shape checks on curves.
inline constexpr double kShapeSigmas = 2.0;

/// Constants of the free-energy argument.
namespace constants {
/// Small-ball decay rate: mu{|x| <= r} <= exp(-rate (E2 - r) / S) on [0, E2 - 3S].
inline const double small_ball_rate = std::log(3.0) / 4.0;
/// Z(w)/w >= E2^2 / 2 - lower_bound_slack * E2 S holds for w <= lower_bound_threshold / (E2 S).
inline const double lower_bound_threshold = small_ball_rate / 2.0;
inline const double lower_bound_slack = 3.0 + std::log(4.0) / small_ball_rate;
/// w0 = default_w0_scale / (E2 S) = min(threshold, 1 / (2 slack)) / (E2 S).
inline const double default_w0_scale = std::min(lower_bound_threshold, 1.0 / (2.0 * lower_bound_slack));
}  // namespace constants

/// Tunable constants. The universal constants the theory leaves unspecified
/// default to 1; the rest are calibration choices.
struct Constants {
  double c_bob = 1.0;
  double c_transfer = 1.0;
  double c_transfer_tv = 1.0;
  double c_prime = constants::default_w0_scale;
  double c_u = 0.01;
  double C_u = 50.0;
  double C_khin = 10.0;
  /// Threshold scale for the refined bound Z/w >= (E2 - 3S)^2 / 2. Not a proven
  /// value; chosen as the small-ball rate divided by five.
  double c_refined = std::log(3.0) / 20.0;
  /// Floor asserted for the reverse-Chebyshev constant.
  double c0_floor = 0.1;
  /// Floor asserted for the empirically feasible Bobkov constant.
  double bobkov_floor = 0.1;
};

}  // namespace gaussfit
