#include "gaussfit/pipeline.hpp"

#include "gaussfit/parallel.hpp"
#include "gaussfit/rng.hpp"

#include <Eigen/Core>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace gaussfit {

using nlohmann::json;

namespace {

constexpr int kAllStages = static_cast<int>(Stage::Radial) | static_cast<int>(Stage::FreeEnergy) |
                           static_cast<int>(Stage::Overlap) | static_cast<int>(Stage::Bounds);

bool has(int stages, Stage s) { return (stages & static_cast<int>(s)) != 0; }

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); }

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) config_error(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : keys) ok = ok || key == k;
    if (!ok) config_error("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T positive(const json& j, const char* key, const std::string& where) {
  const T v = j.at(key).get<T>();
  if (!(v > 0)) config_error(std::string(key) + " in " + where + " must be positive");
  return v;
}

}  // namespace

const std::vector<std::pair<std::string, Stage>>& check_catalog() {
  static const std::vector<std::pair<std::string, Stage>> catalog{
      {"radial_identity", Stage::Radial},
      {"radial_logconcavity", Stage::Radial},
      {"radial_cdf_oracle_agreement", Stage::Radial},
      {"small_ball_tail", Stage::Radial},
      {"chebyshev_anchor", Stage::Radial},
      {"khinchine", Stage::Radial},
      {"reverse_chebyshev", Stage::Radial},
      {"free_energy_oracle_agreement", Stage::FreeEnergy},
      {"cross_estimator", Stage::FreeEnergy},
      {"free_energy_lower_bound", Stage::FreeEnergy},
      {"free_energy_refined_bound", Stage::FreeEnergy},
      {"free_energy_upper_bound", Stage::FreeEnergy},
      {"z_nondecreasing", Stage::FreeEnergy},
      {"z_concave", Stage::FreeEnergy},
      {"z_over_w_nonincreasing", Stage::FreeEnergy},
      {"slope_at_origin", Stage::FreeEnergy},
      {"gaussian_identity", Stage::FreeEnergy},
      {"corollary_entropy", Stage::Overlap},
      {"corollary_tv", Stage::Overlap},
      {"pinsker_domination", Stage::Overlap},
      {"entropy_convex_nondecreasing", Stage::Overlap},
      {"bound_sandwich", Stage::Bounds},
      {"bobkov_calibration", Stage::Bounds},
  };
  return catalog;
}

std::set<std::string> expand_checks(const std::vector<std::string>& names) {
  static const std::vector<std::pair<std::string, Stage>> stages{{"radial", Stage::Radial},
                                                                 {"free_energy", Stage::FreeEnergy},
                                                                 {"overlap", Stage::Overlap},
                                                                 {"bounds", Stage::Bounds}};
  std::set<std::string> out;
  for (const auto& name : names) {
    if (name.empty()) continue;
    if (name == "all") {
      for (const auto& [check, stage] : check_catalog()) out.insert(check);
      continue;
    }
    bool matched = false;
    for (const auto& [stage_name, stage] : stages) {
      if (name != stage_name) continue;
      matched = true;
      for (const auto& [check, s] : check_catalog())
        if (s == stage) out.insert(check);
    }
    for (const auto& [check, stage] : check_catalog()) {
      if (name == check) {
        matched = true;
        out.insert(check);
      }
    }
    if (!matched) config_error("unknown check '" + name + "'");
  }
  return out;
}

void apply_constant(Constants& c, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) config_error("constant override must look like KEY=VALUE: " + assignment);
  const std::string key = assignment.substr(0, eq);
  double value = 0;
  try {
    std::size_t used = 0;
    value = std::stod(assignment.substr(eq + 1), &used);
    if (used != assignment.size() - eq - 1) throw std::invalid_argument("trailing characters");
  } catch (const std::exception&) {
    config_error("constant value is not a number: " + assignment);
  }
  if (!(value > 0) || !std::isfinite(value)) config_error("constant " + key + " must be positive");
  double* slot = nullptr;
  if (key == "c_bob") slot = &c.c_bob;
  else if (key == "c_transfer") slot = &c.c_transfer;
  else if (key == "c_transfer_tv") slot = &c.c_transfer_tv;
  else if (key == "c_prime") slot = &c.c_prime;
  else if (key == "c_u") slot = &c.c_u;
  else if (key == "C_u") slot = &c.C_u;
  else if (key == "C_khin") slot = &c.C_khin;
  else if (key == "c_refined") slot = &c.c_refined;
  else if (key == "c0_floor") slot = &c.c0_floor;
  else if (key == "bobkov_floor") slot = &c.bobkov_floor;
  if (!slot) config_error("unknown constant '" + key + "'");
  *slot = value;
}

RunConfig parse_run_config(const json& j, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  reject_unknown(j,
                 {"schema", "bodies", "seed", "samples", "workers", "out", "checks", "dump_samples", "sampler",
                  "thermo", "w_grid", "constants", "identity_draws", "optimize_samples"},
                 "run config");
  try {
    if (j.contains("schema") && j["schema"].get<std::string>() != kRunSchema)
      config_error("unsupported schema '" + j["schema"].get<std::string>() + "', expected " + kRunSchema);
    if (j.contains("bodies")) cfg.bodies = parse_bodies(j["bodies"], base_dir, "body");
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("samples")) cfg.samples = positive<long>(j, "samples", "run config");
    if (j.contains("workers")) cfg.workers = positive<int>(j, "workers", "run config");
    if (j.contains("out")) cfg.out_dir = base_dir / j["out"].get<std::string>();
    if (j.contains("dump_samples")) cfg.dump_samples = j["dump_samples"].get<bool>();
    if (j.contains("identity_draws")) cfg.identity_draws = positive<long>(j, "identity_draws", "run config");
    if (j.contains("optimize_samples")) cfg.optimize_samples = positive<long>(j, "optimize_samples", "run config");
    if (j.contains("checks")) cfg.checks = expand_checks(j["checks"].get<std::vector<std::string>>());
    if (j.contains("sampler")) {
      const json& s = j["sampler"];
      reject_unknown(s, {"chains", "burn_in", "thinning", "batches"}, "sampler");
      if (s.contains("chains")) cfg.sampler.chains = positive<int>(s, "chains", "sampler");
      if (s.contains("burn_in")) {
        cfg.sampler.burn_in = s["burn_in"].get<long>();
        if (cfg.sampler.burn_in < 0) config_error("burn_in must be nonnegative");
      }
      if (s.contains("thinning")) cfg.sampler.thinning = positive<long>(s, "thinning", "sampler");
      if (s.contains("batches")) cfg.sampler.batches = positive<int>(s, "batches", "sampler");
    }
    if (j.contains("thermo")) {
      const json& t = j["thermo"];
      reject_unknown(t, {"samples_per_node", "nodes_per_piece", "max_piece_width", "single_point_nodes"}, "thermo");
      if (t.contains("samples_per_node")) cfg.thermo.samples_per_node = positive<long>(t, "samples_per_node", "thermo");
      if (t.contains("nodes_per_piece")) cfg.thermo.nodes_per_piece = positive<int>(t, "nodes_per_piece", "thermo");
      if (t.contains("max_piece_width")) cfg.thermo.max_piece_width = positive<double>(t, "max_piece_width", "thermo");
      if (t.contains("single_point_nodes"))
        cfg.thermo.single_point_nodes = positive<int>(t, "single_point_nodes", "thermo");
    }
    if (j.contains("w_grid")) {
      const json& g = j["w_grid"];
      reject_unknown(g, {"points", "lo", "hi", "values", "scaled"}, "w_grid");
      if (g.contains("points")) cfg.w_grid.points = positive<int>(g, "points", "w_grid");
      if (g.contains("lo")) cfg.w_grid.lo = positive<double>(g, "lo", "w_grid");
      if (g.contains("hi")) cfg.w_grid.hi = positive<double>(g, "hi", "w_grid");
      if (g.contains("scaled")) cfg.w_grid.scaled = g["scaled"].get<bool>();
      if (g.contains("values")) {
        cfg.w_grid.values = g["values"].get<std::vector<double>>();
        for (double v : cfg.w_grid.values)
          if (!(v > 0)) config_error("w_grid values must be positive");
      }
      if (cfg.w_grid.hi < cfg.w_grid.lo) config_error("w_grid.hi must not be below w_grid.lo");
    }
    if (j.contains("constants")) {
      const json& c = j["constants"];
      if (!c.is_object()) config_error("constants must be an object");
      for (const auto& [key, value] : c.items()) {
        if (!value.is_number()) config_error("constant " + key + " must be a number");
        std::ostringstream os;
        os.precision(17);
        os << key << "=" << value.get<double>();
        apply_constant(cfg.constants, os.str());
      }
    }
  } catch (const json::exception& e) {
    config_error(std::string("malformed run config: ") + e.what());
  }
  cfg.sampler.seed = cfg.seed;
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    config_error(path.string() + ": " + e.what());
  }
  return parse_run_config(j, path.parent_path());
}

namespace {

bool centered_kind(const Body& body) {
  const Body* current = &body;
  while (const auto* t = std::get_if<Translated<double>>(&current->shape())) current = t->inner.get();
  return std::holds_alternative<Ball<double>>(current->shape()) ||
         std::holds_alternative<Box<double>>(current->shape()) ||
         std::holds_alternative<Ellipsoid<double>>(current->shape());
}

CheckResult aggregate(const std::string& name, int checked, int violations, const char* ok, const char* bad,
                      const char* skip) {
  CheckResult res{name};
  res.add("comparisons", checked).add("violations", violations);
  if (checked == 0) {
    res.verdict = Verdict::Skip;
    res.detail = skip;
  } else {
    res.verdict = violations == 0 ? Verdict::Pass : Verdict::Fail;
    res.detail = violations == 0 ? ok : bad;
  }
  return res;
}

double elapsed(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

}  // namespace

BodyResult run_body(const BodySpec& spec, const RunConfig& config, int stages, std::size_t index) {
  (void)index;
  const auto start = std::chrono::steady_clock::now();
  BodyResult r;
  r.name = spec.name;
  r.kind = kind_name(spec.body);
  r.dimension = spec.body.dimension();
  const Body& body = spec.body;
  const Constants& k = config.constants;
  const std::uint64_t body_seed = StreamRng::derive(config.seed, fnv1a(spec.name));
  auto seeded = [&](std::uint64_t tag) {
    SamplerConfig s = config.sampler;
    s.seed = StreamRng::derive(body_seed, tag);
    return s;
  };
  std::vector<CheckResult> checks;
  auto emit = [&](CheckResult c) {
    if (config.checks.empty() || config.checks.count(c.name)) checks.push_back(std::move(c));
  };
  if (has(stages, Stage::FreeEnergy) || has(stages, Stage::Overlap) || has(stages, Stage::Bounds))
    stages |= static_cast<int>(Stage::FreeEnergy);
  if (has(stages, Stage::Bounds)) stages |= static_cast<int>(Stage::Overlap);

  try {
    // Base point.
    using Mode = BasePointSpec::Mode;
    Mode mode = spec.base_point.mode;
    if (mode == Mode::Auto) mode = centered_kind(body) ? Mode::Interior : Mode::Optimize;
    switch (mode) {
      case Mode::Interior:
      case Mode::Auto:
        r.x0 = body.interior_point();
        r.base_point_mode = "interior";
        break;
      case Mode::Optimize:
        r.x0 = optimize_base_point(body, seeded(3), config.optimize_samples, 100).x0;
        r.base_point_mode = "optimize";
        break;
      case Mode::Explicit:
        r.x0 = spec.base_point.point;
        r.base_point_mode = "explicit";
        break;
    }

    const SampleBatch uniform = sample_uniform(body, seeded(1), config.samples);
    if (config.dump_samples && !config.out_dir.empty()) {
      std::filesystem::create_directories(config.out_dir / "samples");
      write_sample_dump(uniform, config.out_dir / "samples" / (spec.name + ".bin"));
    }
    const int batches = uniform.config.batches;
    const Series dist = radial_distances(uniform, r.x0);
    r.stats = radial_stats(dist, r.x0, batches);
    const RadialStats& st = r.stats;

    if (has(stages, Stage::Radial)) {
      emit(check_radial_identity(st));
      const std::vector<double> qgrid = quantile_radial_grid(dist, 64);
      const RadialCdf cdf = radial_cdf(dist, r.x0, qgrid, batches);
      emit(check_radial_logconcavity(cdf));
      if (has_radial_cdf_oracle(body, r.x0)) {
        const RadialCdf exact = radial_cdf_oracle(body, r.x0, qgrid);
        int violations = 0;
        double worst = 0;
        for (std::size_t i = 0; i < qgrid.size(); ++i) {
          const double z = std::abs(cdf.values[i] - exact.values[i]) / std::max(cdf.se[i], 1e-300);
          worst = std::max(worst, z);
          if (z > kSigmas) ++violations;
        }
        CheckResult agree = aggregate("radial_cdf_oracle_agreement", static_cast<int>(qgrid.size()), violations,
                                      "MC radial CDF matches the exact CDF", "MC radial CDF departs from the exact CDF",
                                      "");
        agree.add("max_abs_z", worst);
        emit(agree);
      } else {
        CheckResult skip{"radial_cdf_oracle_agreement"};
        skip.detail = "no exact radial CDF for this body and base point";
        emit(skip);
      }
      const std::vector<double> sgrid = small_ball_grid(st, 32);
      const SmallBallReport sb = check_small_ball_tail(st, radial_cdf(dist, r.x0, sgrid, batches));
      emit(sb.tail);
      emit(sb.chebyshev_anchor);
      emit(check_khinchine(st, k.C_khin));
      std::vector<double> c0_grid;
      for (int i = 1; i <= 19; ++i) c0_grid.push_back(0.05 * i);
      r.reverse_chebyshev = check_reverse_chebyshev(dist, st, c0_grid, k.c0_floor, batches);
      emit(r.reverse_chebyshev->floor_check);
    }

    if (has(stages, Stage::FreeEnergy)) {
      const double anchors[] = {constants::lower_bound_threshold, k.c_prime, k.c_refined, k.C_u};
      std::vector<double> grid;
      if (config.w_grid.values.empty()) {
        grid = default_w_grid(st, anchors, config.w_grid.points, config.w_grid.lo, config.w_grid.hi);
      } else {
        const double unit = config.w_grid.scaled ? 1 / (st.E2 * st.S) : 1.0;
        grid = default_w_grid(st, anchors, 0);
        for (double v : config.w_grid.values) grid.push_back(v * unit);
        std::sort(grid.begin(), grid.end());
        grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
      }
      ThermoConfig tc = config.thermo;
      tc.sampler = seeded(2);
      tc.scale = 1 / (st.E2 * st.E2);
      r.thermo = free_energy_thermo_curve(body, r.x0, grid, tc);
      r.curve.body_id = spec.name;
      r.curve.x0 = r.x0;
      r.curve.stats = st;
      int oracle_checked = 0, oracle_bad = 0, cross_checked = 0, cross_bad = 0;
      double oracle_worst = 0;
      for (std::size_t i = 0; i < grid.size(); ++i) {
        r.mc.push_back(free_energy_mc(dist, grid[i], batches));
        r.oracle.push_back(free_energy_oracle(body, r.x0, grid[i]));
        const FreeEnergyPoint& chosen = select_estimate(r.mc[i], r.thermo[i], st.E2, uniform.size());
        r.curve.points.push_back(chosen);
        if (r.oracle[i]) {
          ++oracle_checked;
          const double z = std::abs(chosen.Z - r.oracle[i]->Z) / std::max(chosen.se, 1e-300);
          oracle_worst = std::max(oracle_worst, z);
          if (!estimates_agree(chosen, *r.oracle[i])) ++oracle_bad;
        }
        if (chosen.method == FreeEnergyMethod::MonteCarlo) {
          ++cross_checked;
          if (!estimates_agree(r.mc[i], r.thermo[i])) ++cross_bad;
        }
      }
      CheckResult oracle_check =
          aggregate("free_energy_oracle_agreement", oracle_checked, oracle_bad, "estimates match the quadrature oracle",
                    "estimate departs from the quadrature oracle", "no quadrature oracle for this body");
      oracle_check.add("max_abs_z", oracle_worst);
      emit(oracle_check);
      emit(aggregate("cross_estimator", cross_checked, cross_bad, "mc and thermo agree where mc is used",
                     "mc and thermo disagree", "mc is not used on this grid"));
      emit(check_free_energy_lower_bound(r.curve));
      emit(check_free_energy_refined_bound(r.curve, k.c_refined));
      emit(check_free_energy_upper_bound(r.curve, k.c_u, k.C_u));
      emit(check_z_nondecreasing(r.curve));
      emit(check_z_concave(r.curve));
      emit(check_z_over_w_nonincreasing(r.curve));
      emit(check_slope_at_origin(r.curve));
      const FreeEnergyPoint at_w0 = interpolate_curve(r.curve, choose_w0(st, k.c_prime));
      emit(gaussian_identity_check(body, r.x0, at_w0, config.identity_draws, StreamRng::derive(body_seed, 4)));
    }

    if (has(stages, Stage::Overlap)) {
      r.overlap = corollary_check(dist, r.curve, k.c_prime, batches);
      for (const auto& p : r.curve.points) r.entropy.push_back(relative_entropy(st, p));
      emit(r.overlap->entropy_check);
      emit(r.overlap->tv_check);
      emit(check_pinsker_on_curve(dist, r.curve, batches));
      emit(check_entropy_shape(r.curve));
    }

    if (has(stages, Stage::Bounds)) {
      BoundReport b;
      b.x0_used = r.x0;
      b.c_bob = k.c_bob;
      b.c_transfer = k.c_transfer;
      b.c_transfer_tv = k.c_transfer_tv;
      const BobkovBound bob = bobkov_bound(st, k.c_bob);
      b.bobkov_che = bob.via_E2;
      b.bobkov_che_E = bob.via_E;
      b.bobkov_se = bob.se_via_E2;
      b.kls_che = kls_bound(st);
      b.pw_lambda1 = payne_weinberger_bound(body);
      b.transfer_w = r.overlap->w0;
      b.transfer_H = std::max(r.overlap->H, 0.0);
      b.transfer_che = transfer_cheeger(b.transfer_w, b.transfer_H, k.c_transfer);
      b.transfer_tv_che = transfer_cheeger_tv(b.transfer_w, r.overlap->dtv_direct, k.c_transfer_tv);
      b.gaussian_w0 = gaussian_reference(b.transfer_w);
      b.reference_che_upper = halfspace_cheeger_upper(uniform, default_directions(uniform), 1);
      b.exact_che = exact_cheeger(body);
      b.exact_lambda1 = exact_lambda1(body);
      r.bounds = b;
      emit(check_bound_sandwich(b));

      const double dimensional = 1 / std::sqrt(st.E2 * st.S);
      const double reference = b.exact_che ? *b.exact_che : b.reference_che_upper->value;
      r.bobkov_ratio = reference / dimensional;
      CheckResult cal{"bobkov_calibration"};
      cal.add("reference_che", reference).add("dimensional_rate", dimensional).add("ratio", *r.bobkov_ratio);
      cal.add("floor", k.bobkov_floor).add("reference_is_exact", b.exact_che ? 1 : 0);
      const bool ok = std::isfinite(*r.bobkov_ratio) && *r.bobkov_ratio >= k.bobkov_floor;
      cal.verdict = ok ? Verdict::Pass : Verdict::Fail;
      cal.detail = ok ? "D_Che reference / (1 / sqrt(E2 S)) at or above the floor"
                      : "feasible Bobkov constant below the floor";
      emit(cal);
    }
  } catch (const std::exception& e) {
    r.error = e.what();
    CheckResult err{"pipeline_error"};
    err.verdict = Verdict::Fail;
    err.detail = e.what();
    checks.push_back(err);
  }
  r.checks = std::move(checks);
  r.elapsed_seconds = elapsed(start);
  return r;
}

RunReport run_suite(const RunConfig& config, int stages, const std::string& command) {
  if (config.bodies.empty()) config_error("no bodies to process");
  const auto start = std::chrono::steady_clock::now();
  RunReport report;
  report.command = command;
  report.seed = config.seed;
  const int workers = config.workers > 0 ? config.workers : default_workers();
  const int body_workers = std::min<int>(workers, static_cast<int>(config.bodies.size()));
  RunConfig inner = config;
  inner.sampler.workers = std::max(1, workers / body_workers);
  inner.thermo.workers = inner.sampler.workers;
  report.bodies.resize(config.bodies.size());
  parallel_for(config.bodies.size(), body_workers,
               [&](std::size_t i) { report.bodies[i] = run_body(config.bodies[i], inner, stages, i); });
  for (const auto& b : report.bodies) {
    for (const auto& c : b.checks) {
      if (c.passed()) ++report.passes;
      else if (c.failed()) ++report.failures;
      else ++report.skips;
    }
    if (b.bobkov_ratio)
      report.feasible_bobkov_constant =
          report.feasible_bobkov_constant ? std::min(*report.feasible_bobkov_constant, *b.bobkov_ratio)
                                          : *b.bobkov_ratio;
  }
  report.wall_clock_seconds = elapsed(start);
  return report;
}

namespace {

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vec_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
  return a;
}

json check_json(const CheckResult& c) {
  json w = json::object();
  json extra = json::array();
  for (const auto& [key, value] : c.witness) {
    if (w.contains(key)) extra.push_back({{key, num(value)}});
    else w[key] = num(value);
  }
  json j{{"name", c.name}, {"verdict", to_string(c.verdict)}, {"detail", c.detail}, {"witness", w}};
  if (!extra.empty()) j["witness_repeated"] = extra;
  return j;
}

json point_json(const FreeEnergyPoint& p) {
  json j{{"w", num(p.w)}, {"Z", num(p.Z)}, {"se", num(p.se)}, {"method", to_string(p.method)}};
  if (std::isfinite(p.ess)) j["ess"] = p.ess;
  if (!p.warning.empty()) j["warning"] = p.warning;
  return j;
}

}  // namespace

json report_to_json(const RunReport& report, const RunConfig& config, bool include_timing) {
  json j;
  j["schema"] = kReportSchema;
  j["command"] = report.command;
  j["seed"] = report.seed;
  j["versions"] = {{"gaussfit", "1.0.0"},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"compiler", __VERSION__}};
  const Constants& k = config.constants;
  j["config"] = {
      {"samples", config.samples},
      {"sampler",
       {{"chains", config.sampler.chains},
        {"burn_in", config.sampler.burn_in},
        {"thinning", config.sampler.thinning},
        {"batches", config.sampler.batches}}},
      {"thermo",
       {{"samples_per_node", config.thermo.samples_per_node},
        {"nodes_per_piece", config.thermo.nodes_per_piece},
        {"max_piece_width", config.thermo.max_piece_width}}},
      {"w_grid", {{"points", config.w_grid.points}, {"lo", config.w_grid.lo}, {"hi", config.w_grid.hi}}},
      {"constants",
       {{"c", constants::lower_bound_threshold},
        {"C", constants::lower_bound_slack},
        {"c1", constants::small_ball_rate},
        {"c_bob", k.c_bob},
        {"c_transfer", k.c_transfer},
        {"c_transfer_tv", k.c_transfer_tv},
        {"c_prime", k.c_prime},
        {"c_u", k.c_u},
        {"C_u", k.C_u},
        {"C_khin", k.C_khin},
        {"c_refined", k.c_refined},
        {"c0_floor", k.c0_floor},
        {"bobkov_floor", k.bobkov_floor}}},
  };
  j["summary"] = {{"passed", report.passed()},
                  {"passes", report.passes},
                  {"failures", report.failures},
                  {"skips", report.skips},
                  {"feasible_bobkov_constant",
                   report.feasible_bobkov_constant ? num(*report.feasible_bobkov_constant) : json(nullptr)}};
  json bodies = json::array();
  for (const auto& b : report.bodies) {
    json jb;
    jb["name"] = b.name;
    jb["kind"] = b.kind;
    jb["dimension"] = b.dimension;
    jb["base_point"] = {{"mode", b.base_point_mode}, {"x0", vec_json(b.x0)}};
    if (!b.error.empty()) jb["error"] = b.error;
    const auto& st = b.stats;
    jb["radial"] = {{"E", num(st.E)},       {"S", num(st.S)},         {"E2", num(st.E2)},
                    {"m", st.m},            {"se_E", num(st.se_E)},   {"se_S", num(st.se_S)},
                    {"se_E2", num(st.se_E2)}, {"E2_over_S", num(st.S > 0 ? st.E2 / st.S : NAN)}};
    if (b.reverse_chebyshev) {
      const auto& rc = *b.reverse_chebyshev;
      json curve = json::array();
      for (std::size_t i = 0; i < rc.c0.size(); ++i)
        curve.push_back({{"c0", rc.c0[i]}, {"p", num(rc.p[i])}, {"se", num(rc.se[i])}, {"holds", bool(rc.holds[i])}});
      jb["reverse_chebyshev"] = {{"largest_c0", rc.largest_c0}, {"curve", curve}};
    }
    if (!b.curve.points.empty()) {
      json pts = json::array();
      for (std::size_t i = 0; i < b.curve.points.size(); ++i) {
        json p = point_json(b.curve.points[i]);
        p["mc"] = point_json(b.mc[i]);
        p["thermo"] = point_json(b.thermo[i]);
        if (b.oracle[i]) p["oracle"] = point_json(*b.oracle[i]);
        if (i < b.entropy.size()) p["H"] = {{"value", num(b.entropy[i].H)}, {"se", num(b.entropy[i].se)}};
        pts.push_back(p);
      }
      jb["free_energy"] = {{"points", pts}};
    }
    if (b.overlap) {
      const auto& o = *b.overlap;
      jb["overlap"] = {{"w0", num(o.w0)},
                       {"Z", point_json(o.z)},
                       {"interpolated", o.interpolated},
                       {"H", num(o.H)},
                       {"se_H", num(o.se_H)},
                       {"dtv_pinsker", num(o.dtv_pinsker)},
                       {"dtv_direct", num(o.dtv_direct)},
                       {"se_dtv", num(o.se_dtv)},
                       {"dtv_bias_bound", num(o.dtv_bias)},
                       {"H_le_half", o.entropy_check.passed()},
                       {"dtv_le_half", o.tv_check.passed()}};
    }
    if (b.bounds) {
      const auto& bd = *b.bounds;
      json jbd{{"x0_used", vec_json(bd.x0_used)},
               {"bobkov_che", num(bd.bobkov_che)},
               {"bobkov_che_via_E", num(bd.bobkov_che_E)},
               {"bobkov_se", num(bd.bobkov_se)},
               {"kls_che", num(bd.kls_che)},
               {"pw_lambda1", num(bd.pw_lambda1)},
               {"transfer_che", num(bd.transfer_che)},
               {"transfer_tv_che", num(bd.transfer_tv_che)},
               {"transfer_w", num(bd.transfer_w)},
               {"transfer_H", num(bd.transfer_H)},
               {"constants", {{"c_bob", bd.c_bob}, {"c_transfer", bd.c_transfer}, {"c_transfer_tv", bd.c_transfer_tv}}},
               {"gaussian_reference_w0",
                {{"w", bd.gaussian_w0.w},
                 {"d_che", bd.gaussian_w0.d_che},
                 {"lambda1", bd.gaussian_w0.lambda1},
                 {"d_exp2", bd.gaussian_w0.d_exp2}}}};
      if (bd.reference_che_upper) {
        const auto& h = *bd.reference_che_upper;
        jbd["reference_che_upper"] = {{"value", num(h.value)},  {"se", num(h.se)},
                                      {"direction", vec_json(h.direction)}, {"offset", num(h.offset)},
                                      {"mass", num(h.mass)},    {"window", h.window}};
      }
      jbd["exact_che"] = bd.exact_che ? num(*bd.exact_che) : json(nullptr);
      jbd["exact_lambda1"] = bd.exact_lambda1 ? num(*bd.exact_lambda1) : json(nullptr);
      if (b.bobkov_ratio) jbd["bobkov_ratio"] = num(*b.bobkov_ratio);
      jb["bounds"] = jbd;
    }
    json cj = json::array();
    int passes = 0;
    for (const auto& c : b.checks) {
      cj.push_back(check_json(c));
      passes += c.passed();
    }
    jb["checks"] = cj;
    jb["checks_passed"] = passes;
    bodies.push_back(jb);
  }
  j["bodies"] = bodies;
  if (include_timing) {
    json per_body = json::object();
    for (const auto& b : report.bodies) per_body[b.name] = b.elapsed_seconds;
    j["timing"] = {{"wall_clock_seconds", report.wall_clock_seconds}, {"per_body_seconds", per_body}};
  }
  return j;
}

namespace {

std::string fmt(double v, const char* spec = "%.6g") {
  if (!std::isfinite(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

}  // namespace

std::string report_table(const RunReport& report) {
  std::ostringstream os;
  os << "gaussfit " << report.command << "  seed " << report.seed << "\n\n";
  os << pad("body", 22) << pad("n", 5) << pad("E", 11) << pad("S", 11) << pad("E2", 11) << pad("pass", 6)
     << pad("skip", 6) << "fail\n";
  for (const auto& b : report.bodies) {
    int p = 0, s = 0, f = 0;
    for (const auto& c : b.checks) (c.passed() ? p : c.failed() ? f : s)++;
    os << pad(b.name, 22) << pad(std::to_string(b.dimension), 5) << pad(fmt(b.stats.E), 11)
       << pad(fmt(b.stats.S), 11) << pad(fmt(b.stats.E2), 11) << pad(std::to_string(p), 6)
       << pad(std::to_string(s), 6) << f << "\n";
  }
  bool any_bounds = false;
  for (const auto& b : report.bodies) any_bounds = any_bounds || b.bounds.has_value();
  if (any_bounds) {
    os << "\n" << pad("body", 22) << pad("bobkov", 11) << pad("kls", 11) << pad("pw", 11) << pad("transfer", 11)
       << pad("upper", 11) << pad("exact_che", 11) << "exact_l1\n";
    for (const auto& b : report.bodies) {
      if (!b.bounds) continue;
      const auto& bd = *b.bounds;
      os << pad(b.name, 22) << pad(fmt(bd.bobkov_che), 11) << pad(fmt(bd.kls_che), 11) << pad(fmt(bd.pw_lambda1), 11)
         << pad(fmt(bd.transfer_che), 11)
         << pad(bd.reference_che_upper ? fmt(bd.reference_che_upper->value) : "-", 11)
         << pad(bd.exact_che ? fmt(*bd.exact_che) : "-", 11) << (bd.exact_lambda1 ? fmt(*bd.exact_lambda1) : "-")
         << "\n";
    }
  }
  bool header = false;
  for (const auto& b : report.bodies) {
    for (const auto& c : b.checks) {
      if (c.passed()) continue;
      if (!header) {
        os << "\nchecks not passed:\n";
        header = true;
      }
      os << "  " << pad(to_string(c.verdict), 5) << pad(b.name, 22) << pad(c.name, 32) << c.detail << "\n";
    }
  }
  if (report.feasible_bobkov_constant)
    os << "\nempirically feasible Bobkov constant (suite minimum): " << fmt(*report.feasible_bobkov_constant) << "\n";
  os << "\n" << report.passes << " passed, " << report.skips << " skipped, " << report.failures << " failed  ("
     << (report.passed() ? "PASS" : "FAIL") << ")\n";
  return os.str();
}

void write_outputs(const RunReport& report, const RunConfig& config) {
  if (config.out_dir.empty()) return;
  namespace fs = std::filesystem;
  const fs::path out = config.out_dir;
  fs::create_directories(out / "curves");
  fs::create_directories(out / "plots");
  {
    std::ofstream f(out / "report.json");
    f << report_to_json(report, config).dump(2) << "\n";
  }
  {
    std::ofstream f(out / "report.txt");
    f << report_table(report);
  }
  const double C = constants::lower_bound_slack;
  for (const auto& b : report.bodies) {
    if (b.curve.points.empty()) continue;
    const auto& st = b.stats;
    const double unit = st.E2 * st.S;
    std::ofstream csv(out / "curves" / (b.name + ".csv"));
    csv << "w,Z,se,method,Z_over_w,lower_bound_rhs,upper_bound_rhs\n";
    std::ofstream zw(out / "plots" / (b.name + "_z_over_w.dat"));
    zw << "# w Z/w se(Z/w)\n";
    std::ofstream hw(out / "plots" / (b.name + "_entropy.dat"));
    hw << "# w H se(H)\n";
    for (std::size_t i = 0; i < b.curve.points.size(); ++i) {
      const auto& p = b.curve.points[i];
      const bool low = p.w <= constants::lower_bound_threshold / unit * (1 + 1e-12);
      const bool high = p.w >= config.constants.C_u / unit * (1 - 1e-12);
      csv << fmt(p.w, "%.12g") << "," << fmt(p.Z, "%.12g") << "," << fmt(p.se, "%.6g") << "," << to_string(p.method)
          << "," << fmt(p.Z / p.w, "%.12g") << ","
          << (low ? fmt(0.5 * st.E2 * st.E2 - C * st.E2 * st.S, "%.12g") : "") << ","
          << (high ? fmt(0.5 * st.E2 * st.E2 - config.constants.c_u * st.E2 * st.S, "%.12g") : "") << "\n";
      zw << fmt(p.w, "%.12g") << " " << fmt(p.Z / p.w, "%.12g") << " " << fmt(p.se / p.w, "%.6g") << "\n";
      if (i < b.entropy.size())
        hw << fmt(p.w, "%.12g") << " " << fmt(b.entropy[i].H, "%.12g") << " " << fmt(b.entropy[i].se, "%.6g") << "\n";
    }
  }
  std::ofstream bcsv(out / "bounds.csv");
  bcsv << "body,bobkov,kls,pw,transfer,transfer_tv,upper,upper_se,exact_che,exact_lambda1,bobkov_ratio\n";
  std::ofstream sharp(out / "sharpness.csv");
  sharp << "body,w,empirical_c_u,se,c_u,passes\n";
  for (const auto& b : report.bodies) {
    if (b.bounds) {
      const auto& bd = *b.bounds;
      bcsv << b.name << "," << fmt(bd.bobkov_che, "%.8g") << "," << fmt(bd.kls_che, "%.8g") << ","
           << fmt(bd.pw_lambda1, "%.8g") << "," << fmt(bd.transfer_che, "%.8g") << ","
           << fmt(bd.transfer_tv_che, "%.8g") << ","
           << (bd.reference_che_upper ? fmt(bd.reference_che_upper->value, "%.8g") : "") << ","
           << (bd.reference_che_upper ? fmt(bd.reference_che_upper->se, "%.4g") : "") << ","
           << (bd.exact_che ? fmt(*bd.exact_che, "%.10g") : "") << ","
           << (bd.exact_lambda1 ? fmt(*bd.exact_lambda1, "%.10g") : "") << ","
           << (b.bobkov_ratio ? fmt(*b.bobkov_ratio, "%.6g") : "") << "\n";
    }
    for (const auto& c : b.checks) {
      if (c.name != "free_energy_upper_bound") continue;
      sharp << b.name << "," << fmt(c.get("empirical_c_u_w"), "%.8g") << "," << fmt(c.get("empirical_c_u"), "%.8g")
            << "," << fmt(c.get("empirical_c_u_se"), "%.4g") << "," << fmt(c.get("c_u"), "%.4g") << ","
            << (c.passed() ? "yes" : "no") << "\n";
    }
  }
}

}  // namespace gaussfit
