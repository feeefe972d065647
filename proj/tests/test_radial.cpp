#include "support.hpp"

#include "gaussfit/radial.hpp"
#include "gaussfit/statistics.hpp"

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

SampleBatch constant_batch(const Eigen::VectorXd& point, Eigen::Index m) {
  SampleBatch b;
  b.points = point.replicate(1, m);
  b.chain_offsets = {0, m};
  return b;
}

RadialStats exact_stats(double E, double E2) {
  RadialStats s;
  s.E = E;
  s.E2 = E2;
  s.S = std::sqrt(E2 * E2 - E * E);
  return s;
}

bool within(double estimate, double truth, double se) { return std::abs(estimate - truth) <= kSigmas * se; }

}  // namespace

TEST_CASE("radial stats of the unit interval from its end") {
  const SampleBatch b = sample_uniform(oracle::unit_cube(1), config(1), 100000);
  const RadialStats s = radial_stats(b, vec({0}));
  CHECK(within(s.E, 0.5, s.se_E));
  CHECK(within(s.E2, 1 / std::sqrt(3.0), s.se_E2));
  CHECK(within(s.S, 1 / (2 * std::sqrt(3.0)), s.se_S));
  CHECK(std::abs(s.E2 * s.E2 - (s.E * s.E + s.S * s.S)) <= 1e-12 * s.E2 * s.E2);
  CHECK(check_radial_identity(s).passed());
}

TEST_CASE("radial stats of the disk") {
  const SampleBatch b = sample_uniform(oracle::unit_ball(2), config(2), 100000);
  const RadialStats s = radial_stats(b, Eigen::VectorXd::Zero(2));
  CHECK(within(s.E, 2.0 / 3.0, s.se_E));
  CHECK(within(s.E2, 1 / std::sqrt(2.0), s.se_E2));
  CHECK(s.m == 100000);
}

TEST_CASE("degenerate point mass") {
  const RadialStats s = radial_stats(constant_batch(vec({0.6, 0.8}), 100), Eigen::VectorXd::Zero(2));
  CHECK(s.E == doctest::Approx(1));
  CHECK(s.E2 == doctest::Approx(1));
  CHECK(s.S == 0);
  CHECK(check_khinchine(s, 10).get("ratio") == doctest::Approx(1));
  CHECK_THROWS_AS(radial_stats(SampleBatch{}, vec({0})), Error);
}

TEST_CASE("translation of the base point is exact") {
  const SampleBatch b = sample_uniform(oracle::unit_ball(3), config(3), 4000);
  const Eigen::VectorXd x0 = vec({0.1, -0.2, 0.3});
  SampleBatch shifted = b;
  shifted.points = b.points.colwise() - x0;
  const RadialStats a = radial_stats(b, x0);
  const RadialStats c = radial_stats(shifted, Eigen::VectorXd::Zero(3));
  CHECK(a.E == c.E);
  CHECK(a.S == c.S);
  CHECK(a.E2 == c.E2);
}

TEST_CASE("exact radial CDFs") {
  const double half[] = {0.5};
  CHECK(radial_cdf_oracle(oracle::unit_ball(3), Eigen::VectorXd::Zero(3), half).values[0] == doctest::Approx(0.125));
  const double quarter[] = {0.25};
  CHECK(radial_cdf_oracle(oracle::unit_cube(1), vec({0}), quarter).values[0] == doctest::Approx(0.25));
  const double one[] = {1.0};
  CHECK(radial_cdf_oracle(oracle::unit_cube(2), vec({0, 0}), one).values[0] ==
        doctest::Approx(std::numbers::pi / 4).epsilon(1e-9));
  const double big[] = {3.0};
  CHECK(radial_cdf_oracle(oracle::unit_ball(4), Eigen::VectorXd::Zero(4), big).values[0] == 1.0);
  CHECK_FALSE(has_radial_cdf_oracle(oracle::unit_ball(2), vec({0.5, 0})));
  CHECK(has_radial_cdf_oracle(Body::translated(oracle::unit_ball(2), vec({2, 2})), vec({2, 2})));
}

TEST_CASE("counting CDF agrees with the oracles") {
  struct Case {
    Body body;
    Eigen::VectorXd x0;
  };
  const Case cases[] = {{oracle::unit_ball(3), Eigen::VectorXd::Zero(3)},
                        {oracle::unit_cube(2), vec({0, 0})},
                        {oracle::unit_cube(2), vec({0.3, 0.6})}};
  for (const auto& c : cases) {
    const SampleBatch b = sample_uniform(c.body, config(4), 100000);
    const Series d = radial_distances(b, c.x0);
    const std::vector<double> grid = quantile_radial_grid(d, 64);
    const RadialCdf mc = radial_cdf(d, c.x0, grid);
    const RadialCdf exact = radial_cdf_oracle(c.body, c.x0, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(within(mc.values[i], exact.values[i], mc.se[i]));
  }
}

TEST_CASE("quarter disk by counting") {
  const SampleBatch b = sample_uniform(oracle::unit_cube(2), config(5), 100000);
  const double one[] = {1.0};
  const RadialCdf cdf = radial_cdf(b, vec({0, 0}), one);
  CHECK(within(cdf.values[0], std::numbers::pi / 4, cdf.se[0]));
}

TEST_CASE("log-concavity of the radial CDF") {
  SUBCASE("exact ball CDF") {
    std::vector<double> grid;
    for (int i = 1; i <= 20; ++i) grid.push_back(0.05 * i);
    CHECK(check_radial_logconcavity(radial_cdf_oracle(oracle::unit_ball(6), Eigen::VectorXd::Zero(6), grid)).passed());
  }
  SUBCASE("square about its center") {
    const SampleBatch b = sample_uniform(oracle::unit_cube(2), config(6), 100000);
    const Series d = radial_distances(b, vec({0.5, 0.5}));
    CHECK(check_radial_logconcavity(radial_cdf(d, vec({0.5, 0.5}), quantile_radial_grid(d, 50))).passed());
  }
  SUBCASE("constructed violation") {
    RadialCdf cdf;
    cdf.radii = {1, 2, 3};
    cdf.values = {0.1, 0.11, 0.9};
    cdf.se = {0, 0, 0};
    CHECK(check_radial_logconcavity(cdf).failed());
  }
}

TEST_CASE("small-ball tail") {
  SUBCASE("50-ball with the exact CDF") {
    // Exact moments about the center: E = 50/51, E2^2 = 50/52.
    const RadialStats s = exact_stats(oracle::ball_moment(50, 1), std::sqrt(oracle::ball_moment(50, 2)));
    const RadialCdf cdf = radial_cdf_oracle(oracle::unit_ball(50), Eigen::VectorXd::Zero(50), small_ball_grid(s));
    const SmallBallReport rep = check_small_ball_tail(s, cdf);
    CHECK(rep.tail.passed());
    CHECK(rep.tail.get("points") > 10);
    CHECK(rep.chebyshev_anchor.passed());
    CHECK(rep.chebyshev_anchor.get("F") <= 0.25);
  }
  SUBCASE("interval from its end is skipped") {
    const RadialStats s = exact_stats(0.5, 1 / std::sqrt(3.0));
    const RadialCdf cdf = radial_cdf_oracle(oracle::unit_cube(1), vec({0}), small_ball_grid(s));
    const SmallBallReport rep = check_small_ball_tail(s, cdf);
    CHECK(rep.tail.verdict == Verdict::Skip);
    CHECK(rep.chebyshev_anchor.passed());
  }
  SUBCASE("sampled 10-ball") {
    const SampleBatch b = sample_uniform(oracle::unit_ball(10), config(7), 100000);
    const Series d = radial_distances(b, Eigen::VectorXd::Zero(10));
    const RadialStats s = radial_stats(d, Eigen::VectorXd::Zero(10));
    const SmallBallReport rep = check_small_ball_tail(s, radial_cdf(d, s.x0, small_ball_grid(s)));
    CHECK(rep.tail.passed());
    CHECK(rep.chebyshev_anchor.passed());
  }
}

TEST_CASE("Khinchine ratio") {
  CHECK(check_khinchine(exact_stats(2.0 / 3.0, 1 / std::sqrt(2.0)), 10).get("ratio") ==
        doctest::Approx(1.0607).epsilon(1e-4));
  const CheckResult box = check_khinchine(exact_stats(0.5, 1 / std::sqrt(3.0)), 10);
  CHECK(box.get("ratio") == doctest::Approx(1.1547).epsilon(1e-4));
  CHECK(box.passed());
  CHECK(check_khinchine(exact_stats(0.5, 1 / std::sqrt(3.0)), 1.1).failed());
}

TEST_CASE("reverse Chebyshev") {
  SUBCASE("interval from its end") {
    const SampleBatch b = sample_uniform(oracle::unit_cube(1), config(8), 100000);
    const Series d = radial_distances(b, vec({0}));
    const RadialStats s = radial_stats(d, vec({0}));
    const double grid[] = {0.1};
    const ReverseChebyshevCurve c = check_reverse_chebyshev(d, s, grid, 0.1);
    // P(X <= 1/2 - 0.1 / (2 sqrt 3)) for X uniform on [0, 1].
    CHECK(within(c.p[0], 0.5 - 0.1 / (2 * std::sqrt(3.0)), c.se[0] + 0.1 * s.se_S + s.se_E));
    CHECK(c.floor_check.passed());
  }
  SUBCASE("10-ball against its CDF") {
    const SampleBatch b = sample_uniform(oracle::unit_ball(10), config(9), 100000);
    const Series d = radial_distances(b, Eigen::VectorXd::Zero(10));
    const RadialStats s = radial_stats(d, Eigen::VectorXd::Zero(10));
    const double grid[] = {0.1, 0.5, 0.99};
    const ReverseChebyshevCurve c = check_reverse_chebyshev(d, s, grid, 0.1);
    const double E = oracle::ball_moment(10, 1);
    const double S = std::sqrt(oracle::ball_moment(10, 2) - E * E);
    const double exact = std::pow(E - 0.1 * S, 10);
    // The radius E - 0.1 S is itself estimated; add its effect on F (density 10 r^9).
    const double slope = 10 * std::pow(E - 0.1 * S, 9);
    CHECK(within(c.p[0], exact, c.se[0] + slope * (s.se_E + 0.1 * s.se_S)));
    CHECK(c.floor_check.passed());
    CHECK(c.largest_c0 >= 0.1);
    CHECK_FALSE(c.holds[2]);
  }
}
