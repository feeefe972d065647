#include "support.hpp"

#include "gaussfit/error.hpp"
#include "gaussfit/geometry.hpp"
#include "gaussfit/rng.hpp"

#include <doctest.h>

#include <random>

using namespace gaussfit;
using oracle::vec;

namespace {

Body triangle(bool with_vertices) {
  Eigen::MatrixXd A(3, 2);
  A << -1, 0, 0, -1, 1, 1;
  Eigen::MatrixXd V;
  if (with_vertices) {
    V.resize(2, 3);
    V << 0, 1, 0, 0, 0, 1;
  }
  return Body::hpolytope(A, vec({0, 0, 1}), vec({0.25, 0.25}), V);
}

template <typename F>
void expect_error(F&& f, ErrorCode code) {
  try {
    f();
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == code);
  }
}

}  // namespace

TEST_CASE("membership") {
  CHECK(contains(oracle::unit_ball(4), Eigen::VectorXd::Zero(4)));
  CHECK_FALSE(contains(oracle::unit_cube(2), vec({1.5, 0.5})));
  const Body tri = triangle(false);
  CHECK(contains(tri, vec({0.3, 0.3})));
  CHECK_FALSE(contains(tri, vec({0.6, 0.6})));
  CHECK(contains(oracle::unit_cube(2), vec({1.0, 1.0})));

  Eigen::MatrixXd shape = Eigen::MatrixXd::Identity(2, 2);
  shape(1, 1) = 4;
  const Body ell = Body::ellipsoid(shape, vec({1, 1}));
  CHECK(contains(ell, vec({1.9, 1})));
  CHECK_FALSE(contains(ell, vec({1, 1.6})));

  const Body shifted = Body::translated(oracle::unit_ball(2), vec({3, 0}));
  CHECK(contains(shifted, vec({3.5, 0})));
  CHECK_FALSE(contains(shifted, vec({0, 0})));
}

TEST_CASE("far points are outside") {
  const Body bodies[] = {oracle::unit_ball(3), oracle::unit_cube(3), triangle(true)};
  for (const Body& b : bodies) {
    Eigen::VectorXd far = b.interior_point();
    far(0) += 2.01 * b.bounding_radius();
    CHECK_FALSE(contains(b, far));
    CHECK(contains(b, b.interior_point()));
  }
}

TEST_CASE("chord intervals") {
  SUBCASE("ball diameter") {
    const Chord<double> c = chord_interval(oracle::unit_ball(3), Eigen::VectorXd::Zero(3), vec({1, 0, 0}));
    CHECK(c.lo == doctest::Approx(-1).epsilon(1e-14));
    CHECK(c.hi == doctest::Approx(1).epsilon(1e-14));
  }
  SUBCASE("box faces") {
    const Chord<double> c = chord_interval(oracle::unit_cube(2), vec({0.5, 0.5}), vec({1, 0}));
    CHECK(c.lo == doctest::Approx(-0.5));
    CHECK(c.hi == doctest::Approx(0.5));
  }
  SUBCASE("triangle diagonal") {
    const double r = 1 / std::sqrt(2.0);
    const Chord<double> c = chord_interval(triangle(false), vec({0.25, 0.25}), vec({r, r}));
    // Solve the three constraints for t by hand: t >= -0.25 sqrt 2 from x, y >= 0;
    // t <= 0.5 / sqrt 2 = 0.25 sqrt 2 from x + y <= 1.
    CHECK(c.lo == doctest::Approx(-0.25 * std::sqrt(2.0)).epsilon(1e-12));
    CHECK(c.hi == doctest::Approx(0.25 * std::sqrt(2.0)).epsilon(1e-12));
  }
  SUBCASE("outside base point") {
    expect_error([] { chord_interval(oracle::unit_ball(2), vec({2, 0}), vec({1, 0})); }, ErrorCode::NotInterior);
  }
}

TEST_CASE("chord consistency on random lines") {
  Eigen::MatrixXd shape = Eigen::MatrixXd::Identity(3, 3);
  shape(0, 0) = 0.25;
  shape(2, 2) = 9;
  Eigen::MatrixXd simplex_vertices(3, 4);
  simplex_vertices << 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1;
  const Body bodies[] = {
      oracle::unit_ball(3),
      Body::box(vec({-1, 0, 2}), vec({1, 0.5, 3})),
      Body::simplex(simplex_vertices),
      Body::ellipsoid(shape, vec({0, 1, 0})),
      Body::translated(oracle::unit_cube(3), vec({5, -5, 1})),
      Body::membership_oracle([](const Eigen::VectorXd& x) { return x.lpNorm<1>() <= 1; }, Eigen::VectorXd::Zero(3),
                              1.0),
  };
  StreamRng rng(7, 0);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;
  for (const Body& body : bodies) {
    const double eps = 10 * body.chord_tolerance();
    int tested = 0;
    while (tested < 1000) {
      // Random interior point: walk from the interior point along a random chord.
      Eigen::VectorXd u(3);
      for (int i = 0; i < 3; ++i) u(i) = normal(rng);
      u.normalize();
      const Chord<double> c0 = chord_interval(body, body.interior_point(), u);
      const Eigen::VectorXd p = body.interior_point() + (c0.lo + unif(rng) * (c0.hi - c0.lo)) * u;
      if (!contains(body, p)) continue;
      for (int i = 0; i < 3; ++i) u(i) = normal(rng);
      u.normalize();
      const Chord<double> c = chord_interval(body, p, u);
      REQUIRE(c.lo <= 0);
      REQUIRE(c.hi >= 0);
      if (c.hi - c.lo < 4 * eps) continue;
      CHECK_FALSE(contains(body, p + (c.hi + eps) * u));
      CHECK(contains(body, p + (c.hi - eps) * u));
      CHECK_FALSE(contains(body, p + (c.lo - eps) * u));
      CHECK(contains(body, p + (c.lo + eps) * u));
      ++tested;
    }
  }
}

TEST_CASE("translation covariance of chords") {
  const Body inner = triangle(false);
  const Eigen::VectorXd x0 = vec({2, -1});
  const Body shifted = Body::translated(inner, x0);
  const Eigen::VectorXd p = vec({0.2, 0.1});
  const Eigen::VectorXd u = vec({0.6, 0.8});
  const Chord<double> a = chord_interval(shifted, p + x0, u);
  const Chord<double> b = chord_interval(inner, p, u);
  CHECK(a.lo == doctest::Approx(b.lo).epsilon(1e-12));
  CHECK(a.hi == doctest::Approx(b.hi).epsilon(1e-12));
}

TEST_CASE("diameter upper bounds") {
  CHECK(diameter_upper_bound(oracle::unit_ball(5)) == doctest::Approx(2));
  CHECK(diameter_upper_bound(oracle::unit_cube(3)) == doctest::Approx(std::sqrt(3.0)));
  CHECK(diameter_upper_bound(triangle(true)) == doctest::Approx(std::sqrt(2.0)));
  const Body tri = triangle(false);
  CHECK(diameter_upper_bound(tri) == doctest::Approx(2 * tri.bounding_radius()));
  CHECK(diameter_upper_bound(tri) >= std::sqrt(2.0));
}

TEST_CASE("construction errors") {
  Eigen::MatrixXd A(2, 2);
  A << 1, 0, 0, 1;
  expect_error([&] { Body::hpolytope(A, vec({1, 1}), vec({0, 0})); }, ErrorCode::Unbounded);
  expect_error([] { Body::box(vec({0, 0}), vec({1, 0})); }, ErrorCode::Degenerate);
  expect_error([] { Body::ball(vec({0, 0}), 0.0); }, ErrorCode::Degenerate);
  Eigen::MatrixXd flat(2, 3);
  flat << 0, 1, 2, 0, 1, 2;
  expect_error([&] { Body::simplex(flat); }, ErrorCode::Degenerate);
  Eigen::MatrixXd tri_rows(3, 2);
  tri_rows << -1, 0, 0, -1, 1, 1;
  expect_error([&] { Body::hpolytope(tri_rows, vec({0, 0, 1}), vec({2, 2})); }, ErrorCode::NotInterior);
}

TEST_CASE("closed-form volumes") {
  CHECK(std::exp(*log_volume(oracle::unit_ball(2))) == doctest::Approx(std::numbers::pi));
  CHECK(std::exp(*log_volume(oracle::unit_ball(3))) == doctest::Approx(4 * std::numbers::pi / 3));
  CHECK(std::exp(*log_volume(Body::box(vec({0, 0}), vec({2, 3})))) == doctest::Approx(6));
  Eigen::MatrixXd v(2, 3);
  v << 0, 1, 0, 0, 0, 1;
  CHECK(std::exp(*log_volume(Body::simplex(v))) == doctest::Approx(0.5));
  CHECK_FALSE(log_volume(triangle(false)).has_value());
}
