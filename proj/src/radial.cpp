#include "gaussfit/radial.hpp"

#include "gaussfit/quadrature.hpp"
#include "gaussfit/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace gaussfit {

const char* to_string(CdfMethod m) noexcept {
  switch (m) {
    case CdfMethod::MonteCarlo: return "mc";
    case CdfMethod::BallOracle: return "ball-oracle";
    case CdfMethod::BoxQuadrature: return "box-quadrature";
  }
  return "?";
}

Series radial_distances(const SampleBatch& batch, const Eigen::VectorXd& x0) {
  if (batch.size() == 0) throw Error(ErrorCode::EmptyBatch, "radial statistics of an empty batch");
  if (x0.size() != batch.dimension()) throw Error(ErrorCode::InvalidConfig, "base point has the wrong dimension");
  return Series{(batch.points.colwise() - x0).colwise().norm().transpose(), batch.chain_offsets};
}

RadialStats radial_stats(const Series& distances, const Eigen::VectorXd& x0, int batches) {
  const auto& r = distances.values;
  if (r.size() == 0) throw Error(ErrorCode::EmptyBatch, "radial statistics of an empty batch");
  const double m = static_cast<double>(r.size());
  RadialStats s;
  s.x0 = x0;
  s.m = r.size();
  s.E = r.mean();
  s.S = std::sqrt((r.array() - s.E).square().sum() / m);
  s.E2 = std::hypot(s.E, s.S);

  const std::span<const Eigen::Index> offsets(distances.chain_offsets);
  s.se_E = batch_mean(std::span<const double>(r.data(), r.size()), offsets, batches).se;
  // Linearizations: dE2 = d<r^2> / (2 E2), dS = (d<r^2> - 2 E dE) / (2 S).
  if (s.E2 > 0) {
    const Eigen::VectorXd lin = r.array().square() / (2 * s.E2);
    s.se_E2 = batch_mean(std::span<const double>(lin.data(), lin.size()), offsets, batches).se;
  }
  if (s.S > 0) {
    const Eigen::VectorXd lin = (r.array().square() - 2 * s.E * r.array()) / (2 * s.S);
    s.se_S = batch_mean(std::span<const double>(lin.data(), lin.size()), offsets, batches).se;
  }
  return s;
}

RadialStats radial_stats(const SampleBatch& batch, const Eigen::VectorXd& x0, int batches) {
  return radial_stats(radial_distances(batch, x0), x0, batches);
}

RadialCdf radial_cdf(const Series& distances, const Eigen::VectorXd& x0, std::span<const double> radii, int batches) {
  const auto& r = distances.values;
  if (r.size() == 0) throw Error(ErrorCode::EmptyBatch, "radial CDF of an empty batch");
  RadialCdf cdf;
  cdf.x0 = x0;
  cdf.method = CdfMethod::MonteCarlo;
  const double m = static_cast<double>(r.size());
  Eigen::VectorXd indicator(r.size());
  for (double radius : radii) {
    indicator = (r.array() <= radius).cast<double>();
    const MeanEstimate est = batch_mean(std::span<const double>(indicator.data(), indicator.size()),
                                        distances.chain_offsets, batches);
    const double binomial = std::sqrt(est.mean * (1 - est.mean) / m);
    cdf.radii.push_back(radius);
    cdf.values.push_back(est.mean);
    cdf.se.push_back(std::max(est.se, binomial));
  }
  return cdf;
}

RadialCdf radial_cdf(const SampleBatch& batch, const Eigen::VectorXd& x0, std::span<const double> radii) {
  return radial_cdf(radial_distances(batch, x0), x0, radii, batch.config.batches);
}

namespace {

struct Interval {
  double lo, hi;
};

// Reduces translations; returns the innermost shape and the base point
// expressed in its coordinates.
std::pair<const Body*, Eigen::VectorXd> strip_translation(const Body& body, Eigen::VectorXd x0) {
  const Body* current = &body;
  while (const auto* t = std::get_if<Translated<double>>(&current->shape())) {
    x0 -= t->shift;
    current = t->inner.get();
  }
  return {current, x0};
}

std::optional<Interval> as_interval(const Body& body) {
  if (body.dimension() != 1) return std::nullopt;
  if (const auto* b = std::get_if<Box<double>>(&body.shape())) return Interval{b->lower(0), b->upper(0)};
  if (const auto* b = std::get_if<Ball<double>>(&body.shape()))
    return Interval{b->center(0) - b->radius, b->center(0) + b->radius};
  return std::nullopt;
}

double overlap(double a, double b, double c, double d) { return std::max(0.0, std::min(b, d) - std::max(a, c)); }

double box2d_cdf(const Box<double>& box, const Eigen::VectorXd& x0, double r) {
  if (r <= 0) return 0.0;
  const double l1 = box.lower(0), u1 = box.upper(0), l2 = box.lower(1), u2 = box.upper(1);
  const double area = (u1 - l1) * (u2 - l2);
  auto section = [&](double x) {
    const double dx = x - x0(0);
    const double h = std::sqrt(std::max(r * r - dx * dx, 0.0));
    return overlap(l2, u2, x0(1) - h, x0(1) + h);
  };
  std::vector<double> cuts{x0(0) - r, x0(0), x0(0) + r};
  for (double d : {l2 - x0(1), u2 - x0(1)}) {
    if (std::abs(d) < r) {
      const double k = std::sqrt(r * r - d * d);
      cuts.push_back(x0(0) - k);
      cuts.push_back(x0(0) + k);
    }
  }
  const auto q = integrate<double>(section, std::max(l1, x0(0) - r), std::min(u1, x0(0) + r),
                                   std::span<const double>(cuts), 1e-12);
  return std::clamp(q.value / area, 0.0, 1.0);
}

}  // namespace

bool has_radial_cdf_oracle(const Body& body, const Eigen::VectorXd& x0) {
  auto [inner, y0] = strip_translation(body, x0);
  if (as_interval(*inner)) return true;
  if (const auto* b = std::get_if<Ball<double>>(&inner->shape()))
    return (y0 - b->center).norm() <= 1e-12 * b->radius;
  if (std::get_if<Box<double>>(&inner->shape())) return inner->dimension() == 2;
  return false;
}

RadialCdf radial_cdf_oracle(const Body& body, const Eigen::VectorXd& x0, std::span<const double> radii) {
  if (!has_radial_cdf_oracle(body, x0))
    throw Error(ErrorCode::InvalidConfig, "no exact radial CDF for this body and base point");
  auto [inner, y0] = strip_translation(body, x0);
  RadialCdf cdf;
  cdf.x0 = x0;
  cdf.radii.assign(radii.begin(), radii.end());
  cdf.se.assign(radii.size(), 0.0);
  if (auto iv = as_interval(*inner)) {
    cdf.method = CdfMethod::BoxQuadrature;
    for (double r : radii)
      cdf.values.push_back(r <= 0 ? 0.0 : overlap(iv->lo, iv->hi, y0(0) - r, y0(0) + r) / (iv->hi - iv->lo));
  } else if (const auto* b = std::get_if<Ball<double>>(&inner->shape())) {
    cdf.method = CdfMethod::BallOracle;
    const double n = inner->dimension();
    for (double r : radii) cdf.values.push_back(r <= 0 ? 0.0 : std::min(1.0, std::pow(r / b->radius, n)));
  } else {
    cdf.method = CdfMethod::BoxQuadrature;
    const auto& box = std::get<Box<double>>(inner->shape());
    for (double r : radii) cdf.values.push_back(box2d_cdf(box, y0, r));
  }
  return cdf;
}

std::vector<double> quantile_radial_grid(const Series& distances, int points) {
  std::vector<double> sorted(distances.values.data(), distances.values.data() + distances.values.size());
  if (sorted.empty()) throw Error(ErrorCode::EmptyBatch, "quantile grid of an empty batch");
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> grid;
  const double m = static_cast<double>(sorted.size());
  for (int i = 1; i <= points; ++i) {
    const auto idx = static_cast<std::size_t>(std::floor(m * i / (points + 1.0)));
    const double r = sorted[std::min(idx, sorted.size() - 1)];
    if (grid.empty() || r > grid.back()) grid.push_back(r);
  }
  return grid;
}

std::vector<double> small_ball_grid(const RadialStats& stats, int points) {
  std::vector<double> grid;
  const double top = stats.E2 - 3 * stats.S;
  if (top >= 0) {
    for (int i = 0; i < points; ++i) grid.push_back(points == 1 ? top : top * i / (points - 1.0));
  }
  grid.push_back(stats.E - 2 * stats.S);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

CheckResult check_radial_identity(const RadialStats& stats) {
  CheckResult res{"radial_identity"};
  const double gap = std::abs(stats.E2 * stats.E2 - (stats.E * stats.E + stats.S * stats.S));
  const double tol = 1e-12 * std::max(stats.E2 * stats.E2, 1e-300);
  res.add("E", stats.E).add("S", stats.S).add("E2", stats.E2).add("identity_gap", gap).add("tolerance", tol);
  const bool ok = gap <= tol && stats.E <= stats.E2 * (1 + 1e-15) && stats.S >= 0;
  res.verdict = ok ? Verdict::Pass : Verdict::Fail;
  res.detail = ok ? "E2^2 = E^2 + S^2 and E <= E2" : "radial moment identity violated";
  return res;
}

CheckResult check_radial_logconcavity(const RadialCdf& cdf) {
  CheckResult res{"radial_logconcavity"};
  std::vector<double> r, logf, sig;
  for (std::size_t i = 0; i < cdf.radii.size(); ++i) {
    if (cdf.values[i] <= 0) continue;
    if (!r.empty() && cdf.radii[i] <= r.back()) continue;
    r.push_back(cdf.radii[i]);
    logf.push_back(std::log(cdf.values[i]));
    sig.push_back(cdf.se[i] / cdf.values[i]);
  }
  if (r.size() < 3) {
    res.verdict = Verdict::Skip;
    res.detail = "fewer than three grid points with positive mass";
    return res;
  }
  int violations = 0;
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < r.size(); ++i) {
    const double h1 = r[i] - r[i - 1], h2 = r[i + 1] - r[i];
    const double s1 = (logf[i] - logf[i - 1]) / h1, s2 = (logf[i + 1] - logf[i]) / h2;
    const double scale = 2 / (h1 + h2);
    const double second = scale * (s2 - s1);
    const double var = scale * scale *
                       (sig[i + 1] * sig[i + 1] / (h2 * h2) + sig[i] * sig[i] * std::pow(1 / h1 + 1 / h2, 2) +
                        sig[i - 1] * sig[i - 1] / (h1 * h1));
    const double tol = kSigmas * std::sqrt(var) + 1e-9 * scale * (std::abs(s1) + std::abs(s2));
    worst = std::max(worst, second - tol);
    if (second > tol) {
      ++violations;
      res.add("violation_r", r[i]);
    }
  }
  res.add("triples", static_cast<double>(r.size() - 2)).add("violations", violations).add("worst_excess", worst);
  res.verdict = violations == 0 ? Verdict::Pass : Verdict::Fail;
  res.detail = violations == 0 ? "log F concave within 4 sigma" : "log F has convex kinks beyond 4 sigma";
  return res;
}

SmallBallReport check_small_ball_tail(const RadialStats& stats, const RadialCdf& cdf) {
  SmallBallReport rep{CheckResult{"small_ball_tail"}, CheckResult{"chebyshev_anchor"}};
  CheckResult& tail = rep.tail;
  const double top = stats.E2 - 3 * stats.S;
  const double rate = constants::small_ball_rate;
  if (!(stats.S > 0) || top < 0) {
    tail.verdict = Verdict::Skip;
    tail.detail = "E2 < 3S; the bound is only asserted when E2 >= 3S";
    tail.add("E2_over_S", stats.S > 0 ? stats.E2 / stats.S : std::numeric_limits<double>::infinity());
  } else {
    int checked = 0, violations = 0;
    double min_slack = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cdf.radii.size(); ++i) {
      const double r = cdf.radii[i];
      if (r < 0 || r > top * (1 + 1e-12)) continue;
      const double bound = std::exp(-rate * (stats.E2 - r) / stats.S);
      const double d_e2 = bound * rate / stats.S;
      const double d_s = bound * rate * (stats.E2 - r) / (stats.S * stats.S);
      const double sigma = std::sqrt(cdf.se[i] * cdf.se[i] + std::pow(d_e2 * stats.se_E2, 2) +
                                     std::pow(d_s * stats.se_S, 2));
      const double slack = bound + kSigmas * sigma - cdf.values[i];
      min_slack = std::min(min_slack, slack);
      ++checked;
      if (slack < 0) {
        ++violations;
        tail.add("violation_r", r);
      }
    }
    tail.add("rate", rate).add("range_top", top).add("points", checked).add("min_slack", min_slack);
    if (checked == 0) {
      tail.verdict = Verdict::Skip;
      tail.detail = "no grid radii inside [0, E2 - 3S]";
    } else {
      tail.verdict = violations == 0 ? Verdict::Pass : Verdict::Fail;
      tail.detail = violations == 0 ? "small-ball bound holds on the grid" : "small-ball bound violated";
    }
  }

  CheckResult& anchor = rep.chebyshev_anchor;
  const double target = stats.E - 2 * stats.S;
  anchor.add("radius", target);
  if (target < 0) {
    anchor.verdict = Verdict::Pass;
    anchor.detail = "E - 2S < 0, mass is zero";
    anchor.add("F", 0.0);
    return rep;
  }
  for (std::size_t i = 0; i < cdf.radii.size(); ++i) {
    if (std::abs(cdf.radii[i] - target) <= 1e-12 * std::max(1.0, std::abs(target))) {
      const bool ok = cdf.values[i] <= 0.25 + kSigmas * cdf.se[i];
      anchor.add("F", cdf.values[i]).add("se", cdf.se[i]);
      anchor.verdict = ok ? Verdict::Pass : Verdict::Fail;
      anchor.detail = ok ? "F(E - 2S) <= 1/4" : "F(E - 2S) exceeds 1/4";
      return rep;
    }
  }
  anchor.verdict = Verdict::Skip;
  anchor.detail = "grid does not contain E - 2S";
  return rep;
}

CheckResult check_khinchine(const RadialStats& stats, double C_khin) {
  CheckResult res{"khinchine"};
  if (!(stats.E > 0)) throw Error(ErrorCode::DegenerateBody, "Khinchine ratio needs E > 0");
  const double ratio = stats.E2 / stats.E;
  const double se = std::hypot(stats.se_E2 / stats.E, stats.E2 * stats.se_E / (stats.E * stats.E));
  res.add("ratio", ratio).add("se", se).add("threshold", C_khin);
  const bool ok = ratio <= C_khin && ratio >= 1 - 1e-12;
  res.verdict = ok ? Verdict::Pass : Verdict::Fail;
  res.detail = ok ? "1 <= E2/E <= C_khin" : "E2/E outside [1, C_khin]";
  return res;
}

ReverseChebyshevCurve check_reverse_chebyshev(const Series& distances, const RadialStats& stats,
                                              std::span<const double> c0_grid, double floor, int batches) {
  ReverseChebyshevCurve curve;
  const auto& r = distances.values;
  const double m = static_cast<double>(r.size());
  Eigen::VectorXd indicator(r.size());
  auto evaluate = [&](double c0) {
    indicator = (r.array() <= stats.E - c0 * stats.S).cast<double>();
    MeanEstimate est =
        batch_mean(std::span<const double>(indicator.data(), indicator.size()), distances.chain_offsets, batches);
    est.se = std::max(est.se, std::sqrt(est.mean * (1 - est.mean) / m));
    return est;
  };
  for (double c0 : c0_grid) {
    const MeanEstimate est = evaluate(c0);
    const bool holds = est.mean - kSigmas * est.se >= c0;
    curve.c0.push_back(c0);
    curve.p.push_back(est.mean);
    curve.se.push_back(est.se);
    curve.holds.push_back(holds);
    if (holds) curve.largest_c0 = std::max(curve.largest_c0, c0);
  }
  const MeanEstimate at_floor = evaluate(floor);
  CheckResult& res = curve.floor_check;
  res.name = "reverse_chebyshev";
  res.add("c0", floor).add("p", at_floor.mean).add("se", at_floor.se).add("largest_c0", curve.largest_c0);
  const bool ok = at_floor.mean - kSigmas * at_floor.se >= floor;
  res.verdict = ok ? Verdict::Pass : Verdict::Fail;
  res.detail = ok ? "P(|X - x0| <= E - c0 S) >= c0 at the floor" : "reverse Chebyshev floor not confirmed";
  return curve;
}

}  // namespace gaussfit
