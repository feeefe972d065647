#include "gaussfit/bounds.hpp"

#include "gaussfit/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace gaussfit {

GaussianReference gaussian_reference(double w) {
  if (w < 0) throw Error(ErrorCode::NegativeWeight, "inverse temperature must be nonnegative");
  return GaussianReference{w, std::sqrt(2 / std::numbers::pi) * std::sqrt(w), w, std::sqrt(w / 2)};
}

BobkovBound bobkov_bound(const RadialStats& stats, double c_bob) {
  if (!(stats.S > 0) || !(stats.E > 0)) throw Error(ErrorCode::DegenerateBody, "Bobkov bound needs E > 0 and S > 0");
  BobkovBound b;
  b.via_E = c_bob / std::sqrt(stats.E * stats.S);
  b.via_E2 = c_bob / std::sqrt(stats.E2 * stats.S);
  // d(E2 S)^(-1/2) = -(1/2) (E2 S)^(-3/2) (S dE2 + E2 dS)
  b.se_via_E2 = 0.5 * b.via_E2 / (stats.E2 * stats.S) * std::hypot(stats.S * stats.se_E2, stats.E2 * stats.se_S);
  return b;
}

double kls_bound(const RadialStats& stats) {
  if (!(stats.E > 0)) throw Error(ErrorCode::DegenerateBody, "KLS bound needs E > 0");
  return std::numbers::ln2 / stats.E;
}

double payne_weinberger_bound(const Body& body) {
  const double d = diameter_upper_bound(body);
  return std::numbers::pi * std::numbers::pi / (d * d);
}

double transfer_cheeger(double w, double H, double c_transfer) {
  if (!(w > 0)) throw Error(ErrorCode::NegativeWeight, "transference needs w > 0");
  if (H < 0) throw Error(ErrorCode::InvalidConfig, "relative entropy must be nonnegative");
  return c_transfer * std::numbers::sqrt2 / 2 / (1 / std::sqrt(w) + std::sqrt(H / w));
}

double transfer_cheeger_tv(double w, double dtv, double c_transfer_tv) {
  if (!(w > 0)) throw Error(ErrorCode::NegativeWeight, "transference needs w > 0");
  const double eps = 1 - std::clamp(dtv, 0.0, 1.0);
  if (eps <= 0) return 0;
  const double factor = eps >= 1 ? 1.0 : std::min(1.0, eps * eps / std::log(1 / eps));
  return c_transfer_tv * factor * gaussian_reference(w).d_che;
}

namespace {

double es_product(const Eigen::MatrixXd& points, const Eigen::VectorXd& x0) {
  const Eigen::ArrayXd r = (points.colwise() - x0).colwise().norm().transpose().array();
  const double E = r.mean();
  const double S = std::sqrt((r - E).square().mean());
  return E * S;
}

}  // namespace

BasePointResult optimize_base_point(const SampleBatch& uniform, int max_evaluations) {
  if (uniform.size() == 0) throw Error(ErrorCode::EmptyBatch, "base point search on an empty batch");
  const int n = uniform.dimension();
  const Eigen::MatrixXd& pts = uniform.points;
  BasePointResult res;
  res.start = pts.rowwise().mean();
  res.x0 = res.start;
  if (max_evaluations < 1) return res;
  res.start_objective = res.objective = es_product(pts, res.start);
  res.evaluations = 1;

  // Simplex: centroid plus steps of a tenth of the per-coordinate spread.
  const Eigen::VectorXd spread = ((pts.colwise() - res.start).array().square().rowwise().mean()).sqrt().matrix();
  std::vector<Eigen::VectorXd> simplex{res.start};
  std::vector<double> values{res.objective};
  auto eval = [&](const Eigen::VectorXd& x) {
    ++res.evaluations;
    return es_product(pts, x);
  };
  for (int i = 0; i < n && res.evaluations < max_evaluations; ++i) {
    Eigen::VectorXd x = res.start;
    x(i) += 0.1 * std::max(spread(i), 1e-12);
    simplex.push_back(x);
    values.push_back(eval(x));
  }
  if (static_cast<int>(simplex.size()) == n + 1) {
    std::vector<int> order(n + 1);
    while (res.evaluations < max_evaluations) {
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](int a, int b) { return values[a] < values[b]; });
      const int best = order.front(), worst = order.back(), second = order[n - 1];
      Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
      for (int k = 0; k < n; ++k) centroid += simplex[order[k]];
      centroid /= n;
      const Eigen::VectorXd reflected = centroid + (centroid - simplex[worst]);
      const double fr = eval(reflected);
      if (fr < values[best] && res.evaluations < max_evaluations) {
        const Eigen::VectorXd expanded = centroid + 2 * (centroid - simplex[worst]);
        const double fe = eval(expanded);
        if (fe < fr) {
          simplex[worst] = expanded;
          values[worst] = fe;
        } else {
          simplex[worst] = reflected;
          values[worst] = fr;
        }
      } else if (fr < values[second]) {
        simplex[worst] = reflected;
        values[worst] = fr;
      } else if (res.evaluations < max_evaluations) {
        const Eigen::VectorXd contracted = centroid + 0.5 * (simplex[worst] - centroid);
        const double fc = eval(contracted);
        if (fc < values[worst]) {
          simplex[worst] = contracted;
          values[worst] = fc;
        } else {
          for (int k = 0; k <= n && res.evaluations < max_evaluations; ++k) {
            if (k == best) continue;
            simplex[k] = simplex[best] + 0.5 * (simplex[k] - simplex[best]);
            values[k] = eval(simplex[k]);
          }
        }
      }
    }
  }
  const auto it = std::min_element(values.begin(), values.end());
  if (*it < res.objective) {
    res.objective = *it;
    res.x0 = simplex[it - values.begin()];
  }
  return res;
}

BasePointResult optimize_base_point(const Body& body, const SamplerConfig& config, Eigen::Index m,
                                    int max_evaluations) {
  return optimize_base_point(sample_uniform(body, config, m), max_evaluations);
}

double cheeger_1d_exact(const Eigen::VectorXd& x, const Eigen::VectorXd& rho) {
  const Eigen::Index N = x.size();
  if (N < 3 || rho.size() != N) throw Error(ErrorCode::InvalidConfig, "density grid needs at least 3 matching points");
  std::vector<double> F(N, 0.0);
  for (Eigen::Index i = 1; i < N; ++i) {
    const double h = x(i) - x(i - 1);
    if (!(h > 0)) throw Error(ErrorCode::InvalidConfig, "density grid must be increasing");
    if (rho(i) < 0 || rho(i - 1) < 0) throw Error(ErrorCode::InvalidConfig, "density must be nonnegative");
    F[i] = F[i - 1] + 0.5 * h * (rho(i) + rho(i - 1));
  }
  if (std::abs(F[N - 1] - 1) > 1e-8) throw Error(ErrorCode::NotNormalized, "density grid is not normalized");
  // Upper tail summed from the right; 1 - F[i] cancels to noise in a thin tail.
  std::vector<double> G(N, 0.0);
  for (Eigen::Index i = N - 1; i > 0; --i) G[i - 1] = G[i] + 0.5 * (x(i) - x(i - 1)) * (rho(i) + rho(i - 1));
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 1; i + 1 < N; ++i) {
    const double mass = std::min(F[i], G[i]) / F[N - 1];
    if (mass > 0) best = std::min(best, rho(i) / mass);
  }
  return best;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> density_grid(double a, double b, const std::function<double(double)>& V,
                                                         int points) {
  if (!(a < b)) throw Error(ErrorCode::EmptyInterval, "density interval is empty");
  if (points % 2 == 0) ++points;
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(points, a, b);
  Eigen::VectorXd v(points);
  for (int i = 0; i < points; ++i) v(i) = V(x(i));
  Eigen::VectorXd rho = (-(v.array() - v.minCoeff())).exp().matrix();
  const double h = (b - a) / (points - 1);
  const double mass = h * (rho.sum() - 0.5 * (rho(0) + rho(points - 1)));
  rho /= mass;
  return {x, rho};
}

namespace {

double lambda1_grid(double a, double b, const std::function<double(double)>& V, int N) {
  const double h = (b - a) / N;
  Eigen::VectorXd v_node(N + 1), v_mid(N);
  for (int i = 0; i <= N; ++i) v_node(i) = V(a + i * h);
  for (int i = 0; i < N; ++i) v_mid(i) = V(a + (i + 0.5) * h);
  const double shift = std::min(v_node.minCoeff(), v_mid.minCoeff());
  Eigen::VectorXd mass(N + 1), cond(N);
  for (int i = 0; i <= N; ++i) mass(i) = std::exp(-(v_node(i) - shift)) * h * (i == 0 || i == N ? 0.5 : 1.0);
  for (int i = 0; i < N; ++i) cond(i) = std::exp(-(v_mid(i) - shift)) / h;
  Eigen::VectorXd diag(N + 1), sub(N);
  for (int i = 0; i <= N; ++i) diag(i) = ((i > 0 ? cond(i - 1) : 0.0) + (i < N ? cond(i) : 0.0)) / mass(i);
  for (int i = 0; i < N; ++i) sub(i) = -cond(i) / std::sqrt(mass(i) * mass(i + 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw Error(ErrorCode::ConvergenceFailure, "tridiagonal eigensolver failed");
  return solver.eigenvalues()(1);
}

}  // namespace

Lambda1Result lambda1_1d_solver(double a, double b, const std::function<double(double)>& V, int N) {
  if (!(a < b)) throw Error(ErrorCode::EmptyInterval, "solver interval is empty");
  if (N < 64) throw Error(ErrorCode::InvalidConfig, "grid size must be at least 64");
  Lambda1Result r;
  r.coarse = lambda1_grid(a, b, V, N);
  r.fine = lambda1_grid(a, b, V, 2 * N);
  if (!std::isfinite(r.coarse) || !std::isfinite(r.fine) || std::abs(r.coarse - r.fine) > 0.01 * std::abs(r.fine))
    throw Error(ErrorCode::ConvergenceFailure, "N and 2N eigenvalues disagree by more than 1%");
  r.value = (4 * r.fine - r.coarse) / 3;
  return r;
}

std::vector<Eigen::VectorXd> default_directions(const SampleBatch& uniform) {
  const int n = uniform.dimension();
  std::vector<Eigen::VectorXd> dirs;
  for (int i = 0; i < n; ++i) dirs.push_back(Eigen::VectorXd::Unit(n, i));
  if (n > 1) {
    const Eigen::MatrixXd centered = uniform.points.colwise() - uniform.points.rowwise().mean();
    const Eigen::MatrixXd cov = centered * centered.transpose() / static_cast<double>(uniform.size());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    for (int i = n - 1; i >= 0; --i) dirs.push_back(eig.eigenvectors().col(i).normalized());
  }
  return dirs;
}

HalfspaceBound halfspace_cheeger_upper(const SampleBatch& uniform, const std::vector<Eigen::VectorXd>& directions,
                                       int workers) {
  const Eigen::Index m = uniform.size();
  if (m < 1000) throw Error(ErrorCode::InsufficientSamples, "halfspace scan needs at least 1000 samples");
  if (directions.empty()) throw Error(ErrorCode::InvalidConfig, "no directions given");
  const Eigen::Index k = std::max<Eigen::Index>(500, m / 100);
  std::vector<HalfspaceBound> per_dir(directions.size());
  parallel_for(directions.size(), workers, [&](std::size_t d) {
    const Eigen::VectorXd theta = directions[d].normalized();
    Eigen::VectorXd proj = uniform.points.transpose() * theta;
    std::vector<double> p(proj.data(), proj.data() + m);
    std::sort(p.begin(), p.end());
    HalfspaceBound best;
    best.value = std::numeric_limits<double>::infinity();
    for (int q = 1; q <= 19; ++q) {
      const Eigen::Index idx = m * q / 20;
      const double t = p[idx];
      // Narrowest symmetric slab around t holding k points: k-th smallest |p - t|.
      Eigen::Index lo = idx, hi = idx;  // current window [lo, hi)
      double half = 0;
      for (Eigen::Index taken = 0; taken < k; ++taken) {
        const double left = lo > 0 ? t - p[lo - 1] : std::numeric_limits<double>::infinity();
        const double right = hi < m ? p[hi] - t : std::numeric_limits<double>::infinity();
        if (left <= right) {
          half = left;
          --lo;
        } else {
          half = right;
          ++hi;
        }
      }
      if (!(half > 0)) continue;
      const double density = static_cast<double>(k) / (static_cast<double>(m) * 2 * half);
      const double below = static_cast<double>(std::upper_bound(p.begin(), p.end(), t) - p.begin()) / m;
      const double mass = std::min(below, 1 - below);
      if (!(mass > 0)) continue;
      const double ratio = density / mass;
      if (ratio < best.value) {
        best.value = ratio;
        best.se = ratio / std::sqrt(static_cast<double>(k));
        best.direction = theta;
        best.offset = t;
        best.mass = mass;
        best.window = static_cast<int>(k);
      }
    }
    per_dir[d] = best;
  });
  const auto it = std::min_element(per_dir.begin(), per_dir.end(),
                                   [](const HalfspaceBound& a, const HalfspaceBound& b) { return a.value < b.value; });
  if (!std::isfinite(it->value)) throw Error(ErrorCode::InsufficientSamples, "no usable halfspace cut");
  return *it;
}

CheckResult consistency_relations(const std::vector<OneDimInstance>& instances) {
  CheckResult res{"cheeger_mazya"};
  int violations = 0;
  double min_ratio = std::numeric_limits<double>::infinity(), max_ratio = 0;
  for (const auto& inst : instances) {
    const double root = std::sqrt(inst.lambda1);
    const double ratio = inst.d_che / root;
    min_ratio = std::min(min_ratio, ratio);
    max_ratio = std::max(max_ratio, ratio);
    res.add("ratio_" + inst.name, ratio);
    if (root < 0.5 * inst.d_che * (1 - 1e-9)) ++violations;
  }
  res.add("min_ratio", min_ratio).add("max_ratio", max_ratio).add("violations", violations);
  if (instances.empty()) {
    res.verdict = Verdict::Skip;
    res.detail = "no one-dimensional instances";
  } else {
    res.verdict = violations == 0 ? Verdict::Pass : Verdict::Fail;
    res.detail = violations == 0 ? "sqrt(lambda1) >= D_Che / 2 on every instance" : "Cheeger inequality violated";
  }
  return res;
}

namespace {

std::optional<std::pair<double, double>> as_segment(const Body& body) {
  if (body.dimension() != 1) return std::nullopt;
  const Body* current = &body;
  while (const auto* t = std::get_if<Translated<double>>(&current->shape())) current = t->inner.get();
  if (const auto* b = std::get_if<Box<double>>(&current->shape())) return std::pair{b->lower(0), b->upper(0)};
  if (const auto* b = std::get_if<Ball<double>>(&current->shape()))
    return std::pair{b->center(0) - b->radius, b->center(0) + b->radius};
  // Any other one-dimensional convex body is a segment; take its chord.
  const Eigen::VectorXd p = body.interior_point();
  const Chord<double> c = chord_interval(body, p, Eigen::VectorXd::Ones(1));
  return std::pair{p(0) + c.lo, p(0) + c.hi};
}

}  // namespace

std::optional<double> exact_cheeger(const Body& body) {
  const auto seg = as_segment(body);
  if (!seg) return std::nullopt;
  const auto [x, rho] = density_grid(seg->first, seg->second, [](double) { return 0.0; }, 4097);
  return cheeger_1d_exact(x, rho);
}

std::optional<double> exact_lambda1(const Body& body) {
  if (const auto seg = as_segment(body)) return lambda1_1d_solver(seg->first, seg->second, [](double) { return 0.0; }).value;
  const Body* current = &body;
  while (const auto* t = std::get_if<Translated<double>>(&current->shape())) current = t->inner.get();
  if (const auto* b = std::get_if<Box<double>>(&current->shape())) {
    // The spectrum of a product is the union of sums; the gap is the smallest factor gap.
    const Eigen::Index longest = [&] {
      Eigen::Index i;
      (b->upper - b->lower).maxCoeff(&i);
      return i;
    }();
    return lambda1_1d_solver(b->lower(longest), b->upper(longest), [](double) { return 0.0; }).value;
  }
  return std::nullopt;
}

CheckResult check_bound_sandwich(const BoundReport& r) {
  CheckResult res{"bound_sandwich"};
  int checked = 0, violations = 0;
  auto expect = [&](const char* what, double lower, double upper, double sigma) {
    ++checked;
    res.add(std::string(what) + "_lower", lower).add(std::string(what) + "_upper", upper);
    // Deterministic references come from a discretized solver; allow for its error.
    if (lower > upper + kSigmas * sigma + 1e-6 * std::abs(upper)) ++violations;
  };
  if (r.exact_lambda1) expect("pw_vs_lambda1", r.pw_lambda1, *r.exact_lambda1, 0.0);
  if (r.exact_che && r.reference_che_upper)
    expect("exact_che_vs_halfspace", *r.exact_che, r.reference_che_upper->value, r.reference_che_upper->se);
  if (r.exact_lambda1 && r.exact_che) expect("cheeger_mazya", 0.5 * *r.exact_che, std::sqrt(*r.exact_lambda1), 0.0);
  res.add("comparisons", checked).add("violations", violations);
  if (checked == 0) {
    res.verdict = Verdict::Skip;
    res.detail = "no exact or reference values for this body";
  } else {
    res.verdict = violations == 0 ? Verdict::Pass : Verdict::Fail;
    res.detail = violations == 0 ? "lower bounds sit below the references" : "a lower bound exceeds its reference";
  }
  return res;
}

}  // namespace gaussfit
