// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.
// Usage: acceptance <run.json> [out_dir]

#include "support.hpp"

#include "gaussfit/bounds.hpp"
#include "gaussfit/error.hpp"
#include "gaussfit/pipeline.hpp"
#include "gaussfit/statistics.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

using namespace gaussfit;
namespace fs = std::filesystem;

namespace {

constexpr int kAllStages =
    int(Stage::Radial) | int(Stage::FreeEnergy) | int(Stage::Overlap) | int(Stage::Bounds);

int failures = 0;

void verdict(int criterion, bool ok, const std::string& what, const std::string& detail) {
  if (!ok) ++failures;
  std::printf("%s criterion %d: %s (%s)\n", ok ? "PASS" : "FAIL", criterion, what.c_str(), detail.c_str());
  std::fflush(stdout);
}

std::string fmt(double v, const char* spec = "%.4g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const CheckResult* find_check(const BodyResult& r, const std::string& name) {
  for (const auto& c : r.checks)
    if (c.name == name) return &c;
  return nullptr;
}

// Tallies verdicts of the named checks across a report; fails on a missing check.
struct Tally {
  int pass = 0, skip = 0, fail = 0, missing = 0;
  std::vector<std::string> failed;
};

Tally tally(const RunReport& report, const std::vector<std::string>& names) {
  Tally t;
  for (const auto& b : report.bodies) {
    for (const auto& name : names) {
      const CheckResult* c = find_check(b, name);
      if (!c) {
        ++t.missing;
        t.failed.push_back(b.name + "/" + name + " missing");
      } else if (c->passed()) {
        ++t.pass;
      } else if (c->failed()) {
        ++t.fail;
        t.failed.push_back(b.name + "/" + name);
      } else {
        ++t.skip;
      }
    }
  }
  return t;
}

std::string describe(const Tally& t) {
  std::string s = std::to_string(t.pass) + " pass, " + std::to_string(t.skip) + " skip, " +
                  std::to_string(t.fail + t.missing) + " fail";
  for (std::size_t i = 0; i < std::min<std::size_t>(t.failed.size(), 4); ++i) s += "; " + t.failed[i];
  return s;
}

// Z of a body about x0 from closed forms in the test oracles; nullopt when none applies.
std::optional<double> independent_Z(const Body& body, const Eigen::VectorXd& x0, double w) {
  if (const auto* b = std::get_if<Box<double>>(&body.shape())) {
    const Eigen::VectorXd mid = 0.5 * (b->lower + b->upper);
    if ((mid - x0).norm() > 1e-12) return std::nullopt;
    double Z = 0;
    for (Eigen::Index i = 0; i < mid.size(); ++i) {
      const double h = 0.5 * (b->upper(i) - b->lower(i));
      Z -= std::log(oracle::gauss_segment(h, w) / h);
    }
    return Z;
  }
  if (const auto* b = std::get_if<Ball<double>>(&body.shape())) {
    if ((b->center - x0).norm() > 1e-12) return std::nullopt;
    return oracle::ball_Z(int(x0.size()), w * b->radius * b->radius);
  }
  return std::nullopt;
}

BodySpec make_spec(const std::string& name, Body body) {
  BodySpec s{name, std::move(body), {}, {}};
  s.source = body_to_json(s.body);
  return s;
}

// 1. Estimators against the oracles on boxes and balls at m = 1e5.
void criterion_estimators(const RunConfig& base) {
  RunConfig cfg = base;
  cfg.bodies.clear();
  cfg.samples = 100000;
  cfg.w_grid = WGridConfig{};
  cfg.checks.clear();
  for (int n : {1, 2, 10})
    cfg.bodies.push_back(make_spec("box" + std::to_string(n),
                                   Body::box(Eigen::VectorXd::Zero(n), Eigen::VectorXd::Ones(n))));
  for (int n : {2, 5, 50})
    cfg.bodies.push_back(make_spec("ball" + std::to_string(n), Body::ball(Eigen::VectorXd::Zero(n), 1.0)));

  const auto t0 = std::chrono::steady_clock::now();
  const RunReport report = run_suite(cfg, int(Stage::Radial) | int(Stage::FreeEnergy), "acceptance");
  const double elapsed = seconds_since(t0);

  int points = 0, bad = 0, mc = 0, thermo = 0;
  double worst = 0;
  std::string where;
  for (std::size_t k = 0; k < report.bodies.size(); ++k) {
    const BodyResult& r = report.bodies[k];
    if (!r.error.empty()) {
      ++bad;
      where = r.name + ": " + r.error;
      continue;
    }
    for (const auto& p : r.curve.points) {
      const auto z = independent_Z(cfg.bodies[k].body, r.x0, p.w);
      if (!z) {
        ++bad;
        where = r.name + ": no oracle";
        continue;
      }
      ++points;
      (p.method == FreeEnergyMethod::MonteCarlo ? mc : thermo) += 1;
      const double dev = std::abs(p.Z - *z) / std::max(p.se, 1e-300);
      // The oracle carries quadrature error far below 1e-10 relative.
      const bool ok = std::abs(p.Z - *z) <= kSigmas * p.se + 1e-10 * std::max(1.0, std::abs(*z));
      if (dev > worst) worst = dev;
      if (!ok) {
        ++bad;
        where = r.name + " w=" + fmt(p.w);
      }
    }
  }
  verdict(1, bad == 0 && points > 0 && elapsed < 300,
          "free-energy estimates match the oracles within 4 SE on boxes n=1,2,10 and balls n=2,5,50",
          std::to_string(points) + " points (" + std::to_string(mc) + " mc, " + std::to_string(thermo) +
              " thermo), worst |dZ|/SE " + fmt(worst) + ", " + fmt(elapsed, "%.1f") + " s" +
              (bad ? ", first miss " + where : ""));
}

// 5. One-dimensional exact references.
void criterion_exact_1d(const RunReport& suite) {
  const double pi2 = std::numbers::pi * std::numbers::pi;
  auto flat = [](double) { return 0.0; };
  const double lam = lambda1_1d_solver(0, 1, flat, 4096).value;
  const auto [xu, rhou] = density_grid(0, 1, flat);
  const double che = cheeger_1d_exact(xu, rhou);
  bool ok = std::abs(lam - pi2) <= 1e-3 * pi2 && std::abs(che - 2) <= 1e-6;
  std::vector<OneDimInstance> inst{{"uniform", lam, che}};
  std::string gauss;
  for (double w : {0.5, 1.0, 5.0}) {
    auto V = [w](double t) { return 0.5 * w * t * t; };
    const double l = lambda1_1d_solver(0, 1, V, 4096).value;
    const auto [x, rho] = density_grid(0, 1, V);
    inst.push_back({"gauss_w" + fmt(w, "%g"), l, cheeger_1d_exact(x, rho)});
    ok = ok && l >= w;
    gauss += " " + fmt(l, "%.5g");
  }
  for (const auto& b : suite.bodies)
    if (b.dimension == 1 && b.bounds && b.bounds->exact_lambda1 && b.bounds->exact_che)
      inst.push_back({b.name, *b.bounds->exact_lambda1, *b.bounds->exact_che});
  const CheckResult cm = consistency_relations(inst);
  ok = ok && cm.passed();
  verdict(5, ok, "1D exact references and sqrt(lambda1) >= D_Che/2",
          "lambda1 " + fmt(lam, "%.8g") + " vs pi^2 " + fmt(pi2, "%.8g") + ", D_Che " + fmt(che, "%.10g") +
              ", truncated Gaussian lambda1" + gauss + ", " + std::to_string(inst.size()) + " instances, min ratio " +
              fmt(cm.get("min_ratio")));
}

// 8a. KS tests on marginals with known laws.
std::string ks_line(const char* label, const std::vector<double>& v, const std::vector<Eigen::Index>& offsets,
                    int batches, const std::function<double(double)>& cdf, bool& ok) {
  const double d = ks_distance(v, cdf);
  const double n_eff = double(v.size()) / variance_inflation(v, offsets, batches);
  const double crit = ks_critical(0.01, n_eff);
  ok = ok && d < crit;
  return std::string(label) + " " + fmt(d) + "<" + fmt(crit);
}

std::vector<double> coordinate(const SampleBatch& b, int i) {
  const Eigen::VectorXd r = b.points.row(i).transpose();
  return {r.data(), r.data() + r.size()};
}

void criterion_sampler(const RunConfig& base) {
  SamplerConfig sc = base.sampler;
  sc.seed = base.seed;
  sc.workers = 1;
  sc.chains = 4;
  bool ok = true;
  std::vector<std::string> parts;

  const SampleBatch box = sample_uniform(oracle::unit_cube(10), sc, 100000);
  for (int i : {0, 9})
    parts.push_back(ks_line(i == 0 ? "box10 x1" : "box10 x10", coordinate(box, i), box.chain_offsets,
                            box.config.batches, [](double x) { return std::clamp(x, 0.0, 1.0); }, ok));

  const SampleBatch ball = sample_uniform(oracle::unit_ball(5), sc, 100000);
  std::vector<double> r(ball.size());
  for (Eigen::Index j = 0; j < ball.size(); ++j) r[j] = ball.points.col(j).norm();
  parts.push_back(ks_line("ball5 radius", r, ball.chain_offsets, ball.config.batches,
                          [](double x) { return std::pow(std::clamp(x, 0.0, 1.0), 5); }, ok));

  const SampleBatch gibbs = sample_gibbs(oracle::unit_cube(1), 4.0, sc, 100000);
  parts.push_back(ks_line("gibbs [0,1] w=4", coordinate(gibbs, 0), gibbs.chain_offsets, gibbs.config.batches,
                          [](double x) {
                            return (normal_cdf(2 * std::clamp(x, 0.0, 1.0)) - 0.5) / (normal_cdf(2.0) - 0.5);
                          },
                          ok));

  // Determinism: the full report twice, with different worker counts.
  RunConfig cfg = base;
  cfg.samples = 20000;
  cfg.thermo.samples_per_node = 2000;
  cfg.identity_draws = 20000;
  std::vector<BodySpec> subset;
  for (const auto& b : base.bodies)
    if (b.name == "cube2" || b.name == "ball10" || b.name == "triangle") subset.push_back(b);
  if (subset.empty()) subset.assign(base.bodies.begin(), base.bodies.begin() + std::min<std::size_t>(3, base.bodies.size()));
  cfg.bodies = subset;
  cfg.workers = 1;
  const std::string a = report_to_json(run_suite(cfg, kAllStages, "verify"), cfg, false).dump();
  cfg.workers = 3;
  const std::string b = report_to_json(run_suite(cfg, kAllStages, "verify"), cfg, false).dump();
  const bool same = a == b;
  ok = ok && same;
  std::string detail;
  for (const auto& p : parts) detail += p + ", ";
  detail += same ? "reports byte-identical (" + std::to_string(a.size()) + " bytes)" : "reports differ";
  verdict(8, ok, "KS at significance 0.01 and byte-exact determinism", detail);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: acceptance <run.json> [out_dir]\n";
    return 2;
  }
  try {
    RunConfig config = load_run_config(argv[1]);
    config.out_dir = argc > 2 ? fs::path(argv[2]) : fs::current_path() / "acceptance_out";
    config.checks.clear();

    criterion_estimators(config);

    const auto t0 = std::chrono::steady_clock::now();
    const RunReport suite = run_suite(config, kAllStages, "verify");
    write_outputs(suite, config);
    const double suite_seconds = seconds_since(t0);
    int errored = 0;
    for (const auto& b : suite.bodies) errored += !b.error.empty();

    const Tally theorems = tally(suite, {"small_ball_tail", "chebyshev_anchor", "free_energy_lower_bound",
                                         "free_energy_refined_bound", "corollary_entropy", "corollary_tv",
                                         "pinsker_domination"});
    verdict(2, theorems.fail + theorems.missing == 0 && theorems.pass > 0 && errored == 0,
            "theorem checks hold on the suite",
            std::to_string(suite.bodies.size()) + " bodies in " + fmt(suite_seconds, "%.1f") + " s, " +
                describe(theorems));

    const Tally shape = tally(suite, {"z_nondecreasing", "z_concave", "z_over_w_nonincreasing", "slope_at_origin",
                                      "entropy_convex_nondecreasing"});
    verdict(3, shape.fail + shape.missing == 0 && shape.pass > 0, "shape checks on every curve", describe(shape));

    {
      bool ok = errored == 0;
      int oracle_backed = 0;
      double min_cu = std::numeric_limits<double>::infinity();
      std::string miss;
      for (std::size_t k = 0; k < suite.bodies.size(); ++k) {
        const BodyResult& r = suite.bodies[k];
        const CheckResult* c = find_check(r, "free_energy_upper_bound");
        const double w_sharp = config.constants.C_u / (r.stats.E2 * r.stats.S);
        const bool at_anchor = c && std::abs(c->get("empirical_c_u_w") - w_sharp) <= 1e-9 * w_sharp;
        const double cu = c ? c->get("empirical_c_u") : std::nan("");
        if (!c || !c->passed() || !at_anchor || !(cu > 0)) {
          ok = false;
          miss = r.name;
          continue;
        }
        min_cu = std::min(min_cu, cu);
        if (const auto z = independent_Z(config.bodies[k].body, r.x0, w_sharp)) {
          ++oracle_backed;
          const double cu_oracle = (0.5 * r.stats.E2 * r.stats.E2 - *z / w_sharp) / (r.stats.E2 * r.stats.S);
          if (!(cu_oracle > 0)) {
            ok = false;
            miss = r.name + " (oracle)";
          }
        }
      }
      const fs::path table = config.out_dir / "sharpness.csv";
      std::ifstream in(table);
      std::size_t rows = 0;
      for (std::string line; std::getline(in, line);) rows += !line.empty();
      ok = ok && rows == suite.bodies.size() + 1;
      verdict(4, ok, "empirical c_u > 0 at w = C_u/(E2 S) and the default upper-bound check passes",
              "min empirical c_u " + fmt(min_cu) + ", " + std::to_string(oracle_backed) + " oracle-backed, table " +
                  table.string() + " with " + std::to_string(rows ? rows - 1 : 0) + " rows" +
                  (miss.empty() ? "" : ", first miss " + miss));
    }

    criterion_exact_1d(suite);

    {
      double feasible = std::numeric_limits<double>::infinity();
      int counted = 0;
      bool finite = true;
      for (const auto& r : suite.bodies) {
        if (!r.bounds) continue;
        std::optional<double> ref = r.bounds->exact_che;
        if (!ref && r.bounds->reference_che_upper) ref = r.bounds->reference_che_upper->value;
        if (!ref) continue;
        const double ratio = *ref * std::sqrt(r.stats.E2 * r.stats.S);
        finite = finite && std::isfinite(ratio) && ratio > 0;
        feasible = std::min(feasible, ratio);
        ++counted;
      }
      const bool reported = suite.feasible_bobkov_constant.has_value() &&
                            std::abs(*suite.feasible_bobkov_constant - feasible) <= 1e-9 * feasible;
      verdict(6, finite && counted == int(suite.bodies.size()) && reported && feasible >= config.constants.bobkov_floor,
              "feasible Bobkov constant is finite, positive and >= floor",
              "min D_Che_ref * sqrt(E2 S) = " + fmt(feasible) + " over " + std::to_string(counted) +
                  " bodies, floor " + fmt(config.constants.bobkov_floor));
    }

    {
      bool ok = errored == 0;
      double worst = std::numeric_limits<double>::infinity();
      std::string at;
      for (const auto& r : suite.bodies) {
        if (!r.reverse_chebyshev) {
          ok = false;
          at = r.name;
          continue;
        }
        const auto& rc = *r.reverse_chebyshev;
        for (std::size_t i = 0; i < rc.c0.size(); ++i) {
          if (std::abs(rc.c0[i] - 0.1) > 1e-12) continue;
          const double lower = rc.p[i] - kSigmas * rc.se[i];
          if (lower < worst) {
            worst = lower;
            at = r.name;
          }
          ok = ok && lower >= 0.1;
        }
        ok = ok && rc.floor_check.passed();
      }
      verdict(7, ok, "P(|X - x0| <= E - 0.1 S) >= 0.1 at 4 sigma on every body",
              "smallest P - 4 SE " + fmt(worst) + " (" + at + ")");
    }

    criterion_sampler(config);
  } catch (const std::exception& e) {
    std::printf("FAIL acceptance aborted: %s\n", e.what());
    return 1;
  }
  std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
