#include "support.hpp"

#include "gaussfit/bounds.hpp"

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

const double kPi2 = std::numbers::pi * std::numbers::pi;

}  // namespace

TEST_CASE("Bobkov bound") {
  const RadialStats interval = exact_stats(0.5, 1 / std::sqrt(3.0));
  CHECK(bobkov_bound(interval).via_E2 == doctest::Approx(std::sqrt(6.0)));
  CHECK(bobkov_bound(interval).via_E2 == doctest::Approx(2.449).epsilon(1e-3));
  const RadialStats ball = exact_stats(oracle::ball_moment(50, 1), std::sqrt(oracle::ball_moment(50, 2)));
  CHECK(bobkov_bound(ball).via_E2 == doctest::Approx(7.28).epsilon(2e-3));
  CHECK(bobkov_bound(ball).via_E >= bobkov_bound(ball).via_E2);

  // Scaling the body by t scales E, E2 and S by t and the bound by 1/t.
  const RadialStats scaled = exact_stats(3 * interval.E, 3 * interval.E2);
  CHECK(bobkov_bound(scaled).via_E2 == doctest::Approx(bobkov_bound(interval).via_E2 / 3));
  CHECK(bobkov_bound(interval, 0.5).via_E2 == doctest::Approx(0.5 * std::sqrt(6.0)));

  RadialStats flat = interval;
  flat.S = 0;
  CHECK_THROWS_AS(bobkov_bound(flat), Error);
}

TEST_CASE("KLS and Payne-Weinberger") {
  CHECK(kls_bound(exact_stats(0.5, 1 / std::sqrt(3.0))) == doctest::Approx(2 * std::log(2.0)));
  CHECK(payne_weinberger_bound(oracle::unit_cube(1)) == doctest::Approx(kPi2));
  CHECK(payne_weinberger_bound(Body::box(vec({0}), vec({2}))) == doctest::Approx(kPi2 / 4));
  CHECK(payne_weinberger_bound(oracle::unit_cube(2)) == doctest::Approx(kPi2 / 2));
  CHECK(payne_weinberger_bound(oracle::unit_ball(7)) == doctest::Approx(kPi2 / 4));
}

TEST_CASE("Gaussian reference and transference") {
  const GaussianReference g = gaussian_reference(4);
  CHECK(g.d_che == doctest::Approx(2 * std::sqrt(2 / std::numbers::pi)));
  CHECK(g.lambda1 == 4);
  CHECK(g.d_exp2 == doctest::Approx(std::sqrt(2.0)));

  CHECK(transfer_cheeger(4, 0) == doctest::Approx(std::sqrt(2.0)));
  CHECK(transfer_cheeger(4, 1) == doctest::Approx(1 / std::sqrt(2.0)));
  CHECK(transfer_cheeger(4, 1, 2) == doctest::Approx(std::sqrt(2.0)));
  CHECK(transfer_cheeger(16, 0.3) > transfer_cheeger(4, 0.3));
  CHECK_THROWS_AS(transfer_cheeger(0, 0.1), Error);

  CHECK(transfer_cheeger_tv(4, 0) == doctest::Approx(g.d_che));
  CHECK(transfer_cheeger_tv(4, 1) == 0);
  const double eps = 0.9;
  CHECK(transfer_cheeger_tv(4, 1 - eps) == doctest::Approx(std::min(1.0, eps * eps / std::log(1 / eps)) * g.d_che));
  const double small = 0.2;
  CHECK(transfer_cheeger_tv(4, 1 - small) ==
        doctest::Approx(small * small / std::log(1 / small) * g.d_che));
}

TEST_CASE("exact 1D Cheeger constants") {
  SUBCASE("uniform on the unit interval") {
    const auto [x, rho] = density_grid(0, 1, [](double) { return 0.0; }, 20001);
    CHECK(cheeger_1d_exact(x, rho) == doctest::Approx(2).epsilon(1e-6));
  }
  SUBCASE("wide Gaussian") {
    const auto [x, rho] = density_grid(-12, 12, [](double t) { return 0.5 * t * t; });
    CHECK(std::abs(cheeger_1d_exact(x, rho) - std::sqrt(2 / std::numbers::pi)) < 1e-3);
  }
  SUBCASE("truncated Gaussian dominates the full one") {
    for (double w : {0.5, 1.0, 5.0}) {
      const auto [x, rho] = density_grid(0, 1, [w](double t) { return 0.5 * w * t * t; });
      CHECK(cheeger_1d_exact(x, rho) >= std::sqrt(2 / std::numbers::pi) * std::sqrt(w));
    }
  }
  SUBCASE("unnormalized input") {
    Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(11, 0, 1);
    Eigen::VectorXd rho = Eigen::VectorXd::Constant(11, 2.0);
    CHECK_THROWS_AS(cheeger_1d_exact(x, rho), Error);
  }
}

TEST_CASE("Neumann eigenvalue solver") {
  const Lambda1Result flat = lambda1_1d_solver(0, 1, [](double) { return 0.0; });
  CHECK(flat.value == doctest::Approx(kPi2).epsilon(1e-3));
  CHECK(lambda1_1d_solver(0, 2, [](double) { return 0.0; }).value == doctest::Approx(kPi2 / 4).epsilon(1e-3));
  for (double w : {0.5, 2.0, 8.0}) {
    const double L = 8 / std::sqrt(w);
    const double lam = lambda1_1d_solver(-L, L, [w](double t) { return 0.5 * w * t * t; }).value;
    CHECK(lam == doctest::Approx(w).epsilon(1e-2));
  }
  for (double w : {0.5, 1.0, 5.0}) CHECK(lambda1_1d_solver(0, 1, [w](double t) { return 0.5 * w * t * t; }).value >= w);
  CHECK(exact_lambda1(oracle::unit_cube(1)).value() == doctest::Approx(kPi2).epsilon(1e-3));
  CHECK(exact_lambda1(Body::box(vec({0, 0}), vec({1, 3}))).value() == doctest::Approx(kPi2 / 9).epsilon(1e-3));
  CHECK_FALSE(exact_lambda1(oracle::unit_ball(3)).has_value());
  CHECK(exact_cheeger(oracle::unit_cube(1)).value() == doctest::Approx(2).epsilon(1e-6));
  CHECK_FALSE(exact_cheeger(oracle::unit_cube(2)).has_value());
}

TEST_CASE("halfspace upper bound") {
  SUBCASE("disk") {
    const SampleBatch b = sample_uniform(oracle::unit_ball(2), config(1), 100000);
    const HalfspaceBound h = halfspace_cheeger_upper(b, default_directions(b));
    // Best halfspace cut through the center: boundary 2 over mass pi / 2.
    CHECK(h.value >= 4 / std::numbers::pi - kSigmas * h.se - 0.02);
    CHECK(h.value <= 4 / std::numbers::pi + kSigmas * h.se + 0.05);
  }
  SUBCASE("square") {
    const SampleBatch b = sample_uniform(oracle::unit_cube(2), config(2), 100000);
    const HalfspaceBound h = halfspace_cheeger_upper(b, default_directions(b));
    CHECK(h.value == doctest::Approx(2).epsilon(0.05));
    CHECK(h.mass == doctest::Approx(0.5).epsilon(0.1));
  }
  SUBCASE("too few samples") {
    const SampleBatch b = sample_uniform(oracle::unit_cube(2), config(3), 999);
    CHECK_THROWS_AS(halfspace_cheeger_upper(b, default_directions(b)), Error);
  }
}

TEST_CASE("base point search") {
  SUBCASE("ball center") {
    const BasePointResult r = optimize_base_point(oracle::unit_ball(3), config(4), 20000);
    CHECK(r.x0.norm() < 0.05);
    CHECK(r.objective <= r.start_objective);
    CHECK(r.evaluations <= 100);
  }
  SUBCASE("box center") {
    const BasePointResult r = optimize_base_point(oracle::unit_cube(2), config(5), 20000);
    CHECK((r.x0 - vec({0.5, 0.5})).norm() < 0.05);
  }
  SUBCASE("budget of one") {
    const SampleBatch b = sample_uniform(oracle::unit_cube(2), config(6), 5000);
    const BasePointResult r = optimize_base_point(b, 1);
    CHECK(r.x0.isApprox(b.points.rowwise().mean(), 1e-12));
    CHECK(r.evaluations == 1);
  }
}

TEST_CASE("Cheeger inequality across 1D instances") {
  std::vector<OneDimInstance> inst;
  for (double w : {0.0, 1.0, 10.0}) {
    auto V = [w](double t) { return 0.5 * w * t * t; };
    const auto [x, rho] = density_grid(0, 1, V, 20001);
    inst.push_back({"w" + std::to_string(int(w)), lambda1_1d_solver(0, 1, V).value, cheeger_1d_exact(x, rho)});
  }
  CHECK(consistency_relations(inst).passed());
  CHECK(consistency_relations(inst).get("min_ratio") <= 2);
  CHECK(consistency_relations({{"bad", 1.0, 3.0}}).failed());
  CHECK(consistency_relations({}).verdict == Verdict::Skip);
}

TEST_CASE("bound sandwich") {
  BoundReport r;
  CHECK(check_bound_sandwich(r).verdict == Verdict::Skip);
  r.pw_lambda1 = payne_weinberger_bound(oracle::unit_cube(1));
  r.exact_lambda1 = exact_lambda1(oracle::unit_cube(1));
  r.exact_che = exact_cheeger(oracle::unit_cube(1));
  CHECK(check_bound_sandwich(r).passed());
  r.pw_lambda1 = 2 * kPi2;
  CHECK(check_bound_sandwich(r).failed());
}
