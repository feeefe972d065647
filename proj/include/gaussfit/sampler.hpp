#pragma once

#include "gaussfit/error.hpp"
#include "gaussfit/geometry.hpp"
#include "gaussfit/rng.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace gaussfit {

/// Hit-and-run settings. Non-positive chains/workers and negative
/// burn_in/thinning mean "use the default for this body".
struct SamplerConfig {
  std::uint64_t seed = 20111;
  int chains = 0;
  long burn_in = -1;
  long thinning = 0;
  std::optional<Eigen::VectorXd> start;
  int workers = 0;
  /// Target number of batches for batch-means standard errors.
  int batches = 50;
};

/// Worker count from GAUSSFIT_WORKERS, else the hardware concurrency.
int default_workers();

/// Fills in per-body defaults: burn_in = 100 n, thinning = max(1, n / 2),
/// chains = workers = default_workers(). Throws InvalidConfig on bad values.
SamplerConfig resolve(const SamplerConfig& config, int dimension);

struct Target {
  enum class Kind { Uniform, Gibbs };
  Kind kind = Kind::Uniform;
  double w = 0;
  std::string tag() const;
};

/// Points stored one per column. Chain c owns columns
/// [chain_offsets[c], chain_offsets[c + 1]).
struct SampleBatch {
  Eigen::MatrixXd points;
  std::vector<Eigen::Index> chain_offsets;
  SamplerConfig config;
  Target target;

  int dimension() const { return static_cast<int>(points.rows()); }
  Eigen::Index size() const { return points.cols(); }
};

/// One scalar per draw, with the same chain layout as SampleBatch.
struct Series {
  Eigen::VectorXd values;
  std::vector<Eigen::Index> chain_offsets;
};

/// Each step moves along a random coordinate axis with this probability and
/// along a uniform direction otherwise. The mixture is reversible for both
/// targets; the axis moves let elongated axis-aligned bodies mix.
inline constexpr double kCoordinateMoveProbability = 0.5;

/// Hit-and-run for the uniform measure on K: random direction, uniform point
/// on the chord. Deterministic given (body, config, m); m draws are split over
/// the chains as evenly as possible.
SampleBatch sample_uniform(const Body& body, const SamplerConfig& config, Eigen::Index m);

/// Hit-and-run for the Gaussian of precision w conditioned on K. Along each
/// chord the exact truncated Gaussian conditional is drawn. w = 0 takes the
/// uniform code path and reproduces sample_uniform bit for bit.
SampleBatch sample_gibbs(const Body& body, double w, const SamplerConfig& config, Eigen::Index m);

/// Same chain as sample_gibbs, but only f(x) is kept for each draw.
/// `f` is called concurrently from the chain threads.
Series sample_gibbs_series(const Body& body, double w, const SamplerConfig& config, Eigen::Index m,
                           const std::function<double(const Eigen::VectorXd&)>& f);

/// Writes the batch as little-endian float64 rows (one point per row) to
/// `path` and a text header (dimension, count, seed, target) to `path`.hdr.
void write_sample_dump(const SampleBatch& batch, const std::filesystem::path& path);

/// Reads back a dump written by write_sample_dump (points only).
Eigen::MatrixXd read_sample_dump(const std::filesystem::path& path);

namespace detail {

template <typename Rng>
double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

// Standard normal restricted to [a, b] with 0 <= a < b.
template <typename Rng>
double standard_tail(double a, double b, Rng& rng) {
  const double rate = 0.5 * (a + std::sqrt(a * a + 4.0));
  if (rate * (b - a) <= 1.0) {
    // Short interval: uniform proposal, accept with exp(-(x^2 - a^2) / 2).
    for (;;) {
      const double x = a + (b - a) * uniform01(rng);
      if (uniform01(rng) <= std::exp(-0.5 * (x - a) * (x + a))) return x;
    }
  }
  // Translated exponential proposal (Robert 1995).
  std::exponential_distribution<double> expo(rate);
  for (;;) {
    const double x = a + expo(rng);
    if (x > b) continue;
    if (uniform01(rng) <= std::exp(-0.5 * (x - rate) * (x - rate))) return x;
  }
}

}  // namespace detail

/// Exact draw from N(mean, stddev^2) conditioned on [lo, hi]. Rejection
/// samplers are chosen by where the standardized interval sits, so intervals
/// deep in a tail cost O(1) draws and never difference CDF values.
/// An infinite stddev yields the uniform law on [lo, hi].
template <typename Rng>
double sample_truncated_gaussian_1d(double lo, double hi, double mean, double stddev, Rng& rng) {
  if (!(lo < hi)) throw Error(ErrorCode::EmptyInterval, "truncation interval is empty");
  if (!(stddev > 0)) throw Error(ErrorCode::InvalidConfig, "stddev must be positive");
  if (std::isinf(stddev)) return lo + (hi - lo) * detail::uniform01(rng);
  const double a = (lo - mean) / stddev;
  const double b = (hi - mean) / stddev;
  double z;
  if (a >= 0) {
    z = detail::standard_tail(a, b, rng);
  } else if (b <= 0) {
    z = -detail::standard_tail(-b, -a, rng);
  } else if (b - a >= std::sqrt(2.0 * std::numbers::pi)) {
    std::normal_distribution<double> normal;
    do {
      z = normal(rng);
    } while (z < a || z > b);
  } else {
    for (;;) {
      z = a + (b - a) * detail::uniform01(rng);
      if (detail::uniform01(rng) <= std::exp(-0.5 * z * z)) break;
    }
  }
  return std::clamp(mean + stddev * z, lo, hi);
}

}  // namespace gaussfit
