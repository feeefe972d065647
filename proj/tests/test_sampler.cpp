#include "support.hpp"

#include "gaussfit/error.hpp"
#include "gaussfit/rng.hpp"
#include "gaussfit/sampler.hpp"
#include "gaussfit/statistics.hpp"

#include <doctest.h>

#include <filesystem>
#include <set>

using namespace gaussfit;
using oracle::vec;

namespace {

SamplerConfig config(std::uint64_t seed, long burn_in = -1, long thinning = 0) {
  SamplerConfig c;
  c.seed = seed;
  c.chains = 4;
  c.workers = 1;
  c.burn_in = burn_in;
  c.thinning = thinning;
  return c;
}

std::vector<double> row(const SampleBatch& b, int i) {
  const Eigen::VectorXd r = b.points.row(i).transpose();
  return std::vector<double>(r.data(), r.data() + r.size());
}

// Effective sample size of a correlated coordinate series: m / inflation.
double effective_n(const SampleBatch& b, int i) {
  const std::vector<double> v = row(b, i);
  return static_cast<double>(b.size()) / variance_inflation(v, b.chain_offsets, b.config.batches);
}

double truncated_cdf(double x, double a, double b, double sd) {
  const double lo = normal_cdf(a / sd), hi = normal_cdf(b / sd);
  return (normal_cdf(std::clamp(x, a, b) / sd) - lo) / (hi - lo);
}

}  // namespace

TEST_CASE("uniform box coordinate means") {
  const SampleBatch b = sample_uniform(oracle::unit_cube(10), config(1, 1000, 10), 100000);
  const double tol = 4 * (1 / std::sqrt(12.0)) / std::sqrt(1e5);
  for (int i = 0; i < 10; ++i) CHECK(std::abs(b.points.row(i).mean() - 0.5) <= tol);
}

TEST_CASE("uniform disk mean radius") {
  const SampleBatch b = sample_uniform(oracle::unit_ball(2), config(2), 100000);
  std::vector<double> r(b.size());
  for (Eigen::Index j = 0; j < b.size(); ++j) r[j] = b.points.col(j).norm();
  const MeanEstimate est = batch_mean(r, b.chain_offsets);
  CHECK(std::abs(est.mean - 2.0 / 3.0) <= 4 * est.se);
}

TEST_CASE("reproducible single draw") {
  const SamplerConfig c = config(99, 0, 1);
  Eigen::MatrixXd simplex_vertices(3, 4);
  simplex_vertices << 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1;
  const Body body = Body::simplex(simplex_vertices);
  const SampleBatch a = sample_uniform(body, c, 1);
  const SampleBatch b = sample_uniform(body, c, 1);
  CHECK(a.size() == 1);
  CHECK(a.points == b.points);
}

TEST_CASE("seed determinism and worker independence") {
  SamplerConfig c = config(5);
  const SampleBatch a = sample_uniform(oracle::unit_ball(3), c, 5000);
  c.workers = 3;
  const SampleBatch b = sample_uniform(oracle::unit_ball(3), c, 5000);
  CHECK(a.points == b.points);
  c.seed = 6;
  const SampleBatch d = sample_uniform(oracle::unit_ball(3), c, 5000);
  CHECK(a.points != d.points);
}

TEST_CASE("w = 0 reproduces the uniform sampler") {
  const SamplerConfig c = config(11);
  const SampleBatch u = sample_uniform(oracle::unit_ball(4), c, 3000);
  const SampleBatch g = sample_gibbs(oracle::unit_ball(4), 0.0, c, 3000);
  CHECK(u.points == g.points);
  CHECK_THROWS_AS(sample_gibbs(oracle::unit_ball(4), -1.0, c, 10), Error);
}

TEST_CASE("every draw is a member") {
  Eigen::MatrixXd A(3, 2);
  A << -1, 0, 0, -1, 1, 1;
  const Body bodies[] = {oracle::unit_ball(5), Body::hpolytope(A, vec({0, 0, 1}), vec({0.25, 0.25})),
                         Body::translated(oracle::unit_cube(3), vec({-4, 0, 9}))};
  for (const Body& body : bodies) {
    for (double w : {0.0, 30.0}) {
      const SampleBatch b = sample_gibbs(body, w, config(3), 4000);
      for (Eigen::Index j = 0; j < b.size(); ++j) REQUIRE(contains(body, b.points.col(j)));
    }
  }
}

TEST_CASE("uniform box marginals pass KS") {
  for (int n : {2, 10}) {
    const SampleBatch b = sample_uniform(oracle::unit_cube(n), config(100 + n), 100000);
    for (int i = 0; i < n; ++i) {
      const double d = ks_distance(row(b, i), [](double x) { return std::clamp(x, 0.0, 1.0); });
      CHECK(d < ks_critical(0.01, effective_n(b, i)));
    }
  }
}

TEST_CASE("Gibbs box marginals pass KS against truncated Gaussians") {
  // Box [-0.5, 1.5] x [0, 1], x0 = 0: the law is a product of 1D truncated Gaussians.
  const Body box = Body::box(vec({-0.5, 0}), vec({1.5, 1}));
  const double w = 4, sd = 0.5;
  const SampleBatch b = sample_gibbs(box, w, config(17), 100000);
  const double lo[] = {-0.5, 0}, hi[] = {1.5, 1};
  for (int i = 0; i < 2; ++i) {
    const double d = ks_distance(row(b, i), [&](double x) { return truncated_cdf(x, lo[i], hi[i], sd); });
    CHECK(d < ks_critical(0.01, effective_n(b, i)));
  }
}

TEST_CASE("Gibbs on the unit interval at w = 4") {
  const SampleBatch b = sample_gibbs(oracle::unit_cube(1), 4.0, config(23), 100000);
  const double d = ks_distance(row(b, 0), [](double x) {
    return (normal_cdf(2 * std::clamp(x, 0.0, 1.0)) - 0.5) / (normal_cdf(2.0) - 0.5);
  });
  CHECK(d < 0.01);
}

TEST_CASE("Gibbs ball second moment") {
  const int n = 5;
  const double w = 10;
  const double num = oracle::simpson([&](double r) { return std::pow(r, n + 1) * std::exp(-0.5 * w * r * r); }, 0, 1);
  const double den = oracle::simpson([&](double r) { return std::pow(r, n - 1) * std::exp(-0.5 * w * r * r); }, 0, 1);
  const SampleBatch b = sample_gibbs(oracle::unit_ball(n), w, config(29), 100000);
  std::vector<double> r2(b.size());
  for (Eigen::Index j = 0; j < b.size(); ++j) r2[j] = b.points.col(j).squaredNorm();
  const MeanEstimate est = batch_mean(r2, b.chain_offsets);
  CHECK(std::abs(est.mean - num / den) <= 4 * est.se);
}

TEST_CASE("series sampler matches the batch sampler") {
  const SamplerConfig c = config(31);
  const SampleBatch b = sample_gibbs(oracle::unit_ball(3), 2.0, c, 2000);
  const Series s = sample_gibbs_series(oracle::unit_ball(3), 2.0, c, 2000,
                                       [](const Eigen::VectorXd& x) { return x.squaredNorm(); });
  for (Eigen::Index j = 0; j < b.size(); ++j) REQUIRE(s.values(j) == b.points.col(j).squaredNorm());
  CHECK(s.chain_offsets == b.chain_offsets);
}

TEST_CASE("chain split and defaults") {
  const SamplerConfig c = resolve(SamplerConfig{}, 6);
  CHECK(c.burn_in == 600);
  CHECK(c.thinning == 3);
  CHECK(c.chains >= 1);
  const SampleBatch b = sample_uniform(oracle::unit_ball(2), config(1), 10);
  CHECK(b.chain_offsets == std::vector<Eigen::Index>{0, 3, 6, 8, 10});
  SamplerConfig bad = config(1);
  bad.batches = 0;
  CHECK_THROWS_AS(resolve(bad, 2), Error);
  CHECK_THROWS_AS(sample_uniform(oracle::unit_ball(2), config(1), 0), Error);
}

TEST_CASE("distinct streams") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 8; ++s) {
    StreamRng rng(42, s);
    for (int k = 0; k < 1000; ++k) seen.insert(rng());
  }
  CHECK(seen.size() == 8000);
}

TEST_CASE("truncated Gaussian draws") {
  StreamRng rng(3, 0);
  SUBCASE("symmetric interval") {
    double sum = 0;
    const int m = 100000;
    for (int i = 0; i < m; ++i) sum += sample_truncated_gaussian_1d(-1, 1, 0, 1, rng);
    // Variance of N(0,1) on [-1, 1] is below 1.
    CHECK(std::abs(sum / m) <= 4 / std::sqrt(1.0 * m));
  }
  SUBCASE("deep tail") {
    const int m = 100000;
    double sum = 0, sq = 0;
    for (int i = 0; i < m; ++i) {
      const double x = sample_truncated_gaussian_1d(8, 9, 0, 1, rng);
      REQUIRE(x >= 8);
      REQUIRE(x <= 9);
      sum += x;
      sq += x * x;
    }
    // Ratio of Simpson integrals after factoring out exp(-32).
    auto phi = [](double t) { return std::exp(-0.5 * t * t + 32); };
    const double mean =
        oracle::simpson([&](double t) { return t * phi(t); }, 8, 9) / oracle::simpson(phi, 8, 9);
    const double var = sq / m - (sum / m) * (sum / m);
    CHECK(std::abs(sum / m - mean) <= 4 * std::sqrt(var / m));
  }
  SUBCASE("infinite stddev") {
    const int m = 100000;
    std::vector<double> xs(m);
    for (auto& x : xs) x = sample_truncated_gaussian_1d(2, 5, 0, std::numeric_limits<double>::infinity(), rng);
    CHECK(ks_distance(xs, [](double x) { return std::clamp((x - 2) / 3, 0.0, 1.0); }) < ks_critical(0.01, m));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(sample_truncated_gaussian_1d(1, 1, 0, 1, rng), Error);
    CHECK_THROWS_AS(sample_truncated_gaussian_1d(0, 1, 0, 0, rng), Error);
  }
}

TEST_CASE("sample dump round trip") {
  const SampleBatch b = sample_uniform(oracle::unit_ball(3), config(8), 123);
  const auto dir = std::filesystem::temp_directory_path() / "gaussfit_dump_test";
  std::filesystem::create_directories(dir);
  write_sample_dump(b, dir / "s.bin");
  CHECK(read_sample_dump(dir / "s.bin") == b.points);
  CHECK(std::filesystem::file_size(dir / "s.bin") == 123 * 3 * 8);
  std::filesystem::remove_all(dir);
}
