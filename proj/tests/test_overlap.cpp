#include "support.hpp"

#include "gaussfit/overlap.hpp"

#include <doctest.h>

using namespace gaussfit;
using oracle::vec;

namespace {

SamplerConfig config(std::uint64_t seed) {
  SamplerConfig c;
  c.seed = seed;
  c.chains = 4;
  c.workers = 1;
  return c;
}

RadialStats exact_stats(double E, double E2) {
  RadialStats s;
  s.E = E;
  s.E2 = E2;
  s.S = std::sqrt(E2 * E2 - E * E);
  return s;
}

FreeEnergyCurve oracle_curve(const Body& body, const Eigen::VectorXd& x0, const RadialStats& stats,
                             std::vector<double> grid) {
  FreeEnergyCurve c;
  c.x0 = x0;
  c.stats = stats;
  for (double w : grid) c.points.push_back(*free_energy_oracle(body, x0, w));
  return c;
}

const RadialStats kInterval = exact_stats(0.5, 1 / std::sqrt(3.0));

}  // namespace

TEST_CASE("relative entropy") {
  FreeEnergyPoint z;
  CHECK(relative_entropy(kInterval, z).H == 0);
  z.w = 1;
  z.Z = oracle::unit_interval_Z(1);
  const EntropyEstimate h = relative_entropy(kInterval, z);
  CHECK(h.H == doctest::Approx(1.0 / 6 - oracle::unit_interval_Z(1)));
  CHECK(h.H == doctest::Approx(0.010743).epsilon(1e-4));
  for (double w : {0.1, 1.0, 10.0, 100.0}) {
    FreeEnergyPoint a, b;
    a.w = w;
    a.Z = oracle::unit_interval_Z(w);
    b.w = 2 * w;
    b.Z = oracle::unit_interval_Z(2 * w);
    CHECK(relative_entropy(kInterval, b).H >= relative_entropy(kInterval, a).H);
  }
  SUBCASE("clipping") {
    FreeEnergyPoint noisy;
    noisy.w = 1e-4;
    noisy.Z = 0.5 * kInterval.E2 * kInterval.E2 * noisy.w + 1e-6;
    noisy.se = 1e-6;
    const EntropyEstimate c = relative_entropy(kInterval, noisy);
    CHECK(c.H == 0);
    CHECK(c.clipped);
    noisy.Z += 1;
    CHECK(relative_entropy(kInterval, noisy).H < 0);
  }
}

TEST_CASE("Pinsker bound") {
  CHECK(tv_pinsker(0) == 0);
  CHECK(tv_pinsker(0.5) == doctest::Approx(0.5));
  const double H = 1.0 / 6 - oracle::unit_interval_Z(1);
  CHECK(tv_pinsker(H) == doctest::Approx(0.07329).epsilon(1e-4));
  CHECK_THROWS_AS(tv_pinsker(-1), Error);
}

TEST_CASE("direct total variation") {
  const SampleBatch b = sample_uniform(oracle::unit_cube(1), config(1), 100000);
  const Series d = radial_distances(b, vec({0}));
  FreeEnergyPoint z0;
  CHECK(tv_direct(d, z0).dtv == 0);

  FreeEnergyPoint z;
  z.w = 1;
  z.Z = oracle::unit_interval_Z(1);
  const TvEstimate tv = tv_direct(d, z);
  const double exact =
      0.5 * oracle::simpson([&](double x) { return std::abs(1 - std::exp(z.Z - 0.5 * x * x)); }, 0, 1, 200000);
  CHECK(std::abs(tv.dtv - exact) <= kSigmas * tv.se + tv.bias_bound);
  CHECK(tv.dtv <= tv_pinsker(1.0 / 6 - z.Z) + kSigmas * tv.se);
  CHECK(tv.dtv >= 0);
  CHECK(tv.dtv <= 1);
}

TEST_CASE("choice of w0") {
  const RadialStats s = exact_stats(std::sqrt(1 - 0.01), 1.0);
  CHECK(choose_w0(s, constants::default_w0_scale) == doctest::Approx(0.6213).epsilon(1e-4));
  CHECK(choose_w0(kInterval, constants::default_w0_scale) == doctest::Approx(0.3727).epsilon(1e-3));
  CHECK(choose_w0(kInterval, 2 * constants::default_w0_scale) ==
        doctest::Approx(2 * choose_w0(kInterval, constants::default_w0_scale)));
  RadialStats flat = s;
  flat.S = 0;
  CHECK_THROWS_AS(choose_w0(flat, 0.06), Error);
}

TEST_CASE("corollary at w0") {
  SUBCASE("50-ball") {
    const RadialStats s = exact_stats(oracle::ball_moment(50, 1), std::sqrt(oracle::ball_moment(50, 2)));
    const double w0 = choose_w0(s, constants::default_w0_scale);
    const FreeEnergyCurve c = oracle_curve(oracle::unit_ball(50), Eigen::VectorXd::Zero(50), s, {w0 / 2, w0, 2 * w0});
    const SampleBatch b = sample_uniform(oracle::unit_ball(50), config(2), 20000);
    const OverlapReport r = corollary_check(radial_distances(b, Eigen::VectorXd::Zero(50)), c, constants::default_w0_scale);
    CHECK(r.entropy_check.passed());
    CHECK(r.tv_check.passed());
    CHECK(r.H < 0.05);
    CHECK_FALSE(r.interpolated);
  }
  SUBCASE("unit interval, interpolated") {
    const double w0 = choose_w0(kInterval, constants::default_w0_scale);
    const FreeEnergyCurve c = oracle_curve(oracle::unit_cube(1), vec({0}), kInterval, {0.1, 1.0, 10.0});
    const SampleBatch b = sample_uniform(oracle::unit_cube(1), config(3), 50000);
    const OverlapReport r = corollary_check(radial_distances(b, vec({0})), c, constants::default_w0_scale);
    CHECK(r.interpolated);
    // Linear interpolation of a concave Z sits below Z, so H is an upper estimate.
    CHECK(r.H >= 0.5 * kInterval.E2 * kInterval.E2 * w0 - oracle::unit_interval_Z(w0) - 1e-12);
    CHECK(r.entropy_check.passed());
    CHECK(r.tv_check.passed());
    CHECK(r.pinsker_check.passed());
  }
  SUBCASE("far beyond w0 fails") {
    const double w = 1e3 * choose_w0(kInterval, constants::default_w0_scale);
    const FreeEnergyCurve c = oracle_curve(oracle::unit_cube(1), vec({0}), kInterval, {w});
    const SampleBatch b = sample_uniform(oracle::unit_cube(1), config(4), 50000);
    const OverlapReport r = overlap_at(radial_distances(b, vec({0})), c, w);
    CHECK(r.H > 0.5);
    CHECK(r.entropy_check.failed());
  }
}

TEST_CASE("entropy shape and Pinsker along a curve") {
  std::vector<double> grid;
  for (int i = -3; i <= 3; ++i) grid.push_back(std::pow(10.0, i) * 6);
  const FreeEnergyCurve c = oracle_curve(oracle::unit_cube(1), vec({0}), kInterval, grid);
  CHECK(check_entropy_shape(c).passed());
  const SampleBatch b = sample_uniform(oracle::unit_cube(1), config(5), 50000);
  CHECK(check_pinsker_on_curve(radial_distances(b, vec({0})), c).passed());

  FreeEnergyCurve bad = c;
  bad.points[3].Z += 0.3;
  CHECK(check_entropy_shape(bad).failed());
}
