#pragma once

#include "gaussfit/body_io.hpp"
#include "gaussfit/bounds.hpp"
#include "gaussfit/checks.hpp"
#include "gaussfit/free_energy.hpp"
#include "gaussfit/overlap.hpp"
#include "gaussfit/radial.hpp"
#include "gaussfit/sampler.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace gaussfit {

inline constexpr const char* kRunSchema = "gaussfit.run/1";
inline constexpr const char* kReportSchema = "gaussfit.report/1";

enum class Stage { Radial = 1, FreeEnergy = 2, Overlap = 4, Bounds = 8 };

struct WGridConfig {
  int points = 24;
  double lo = 1e-3;
  double hi = 1e3;
  /// Explicit grid, in units of 1 / (E2 S) when `scaled`, else absolute.
  std::vector<double> values;
  bool scaled = true;
};

struct RunConfig {
  std::vector<BodySpec> bodies;
  std::uint64_t seed = 20111;
  Eigen::Index samples = 100000;
  /// Chains are pinned (not tied to the worker count) so reports do not
  /// depend on the machine.
  SamplerConfig sampler = [] {
    SamplerConfig s;
    s.chains = 4;
    return s;
  }();
  ThermoConfig thermo;
  WGridConfig w_grid;
  Constants constants;
  /// Empty means every check.
  std::set<std::string> checks;
  std::filesystem::path out_dir;
  Eigen::Index identity_draws = 100000;
  Eigen::Index optimize_samples = 20000;
  int workers = 0;
  bool dump_samples = false;
};

/// Every check name the pipeline can emit, grouped by stage.
const std::vector<std::pair<std::string, Stage>>& check_catalog();

/// Accepts stage names (radial, free_energy, overlap, bounds), individual
/// check names and "all". Throws InvalidConfig on unknown names.
std::set<std::string> expand_checks(const std::vector<std::string>& names);

/// Parses a run configuration document. Relative body paths resolve against
/// `base_dir`. Unknown keys and non-positive constants are rejected.
RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

/// KEY=VAL constant override.
void apply_constant(Constants& c, const std::string& assignment);

struct BodyResult {
  std::string name;
  std::string kind;
  int dimension = 0;
  Eigen::VectorXd x0;
  std::string base_point_mode;
  RadialStats stats;
  std::optional<ReverseChebyshevCurve> reverse_chebyshev;
  FreeEnergyCurve curve;
  std::vector<FreeEnergyPoint> mc;
  std::vector<FreeEnergyPoint> thermo;
  std::vector<std::optional<FreeEnergyPoint>> oracle;
  std::optional<OverlapReport> overlap;
  std::vector<EntropyEstimate> entropy;
  std::optional<BoundReport> bounds;
  std::optional<double> bobkov_ratio;
  std::vector<CheckResult> checks;
  double elapsed_seconds = 0;
  std::string error;
};

struct RunReport {
  std::vector<BodyResult> bodies;
  std::string command;
  std::uint64_t seed = 0;
  double wall_clock_seconds = 0;
  int failures = 0;
  int passes = 0;
  int skips = 0;
  /// Minimum of D_Che reference / (1 / sqrt(E2 S)) over the suite.
  std::optional<double> feasible_bobkov_constant;
  bool passed() const { return failures == 0; }
};

/// Runs the requested stages on one body.
BodyResult run_body(const BodySpec& spec, const RunConfig& config, int stages, std::size_t index);

/// Runs every body (in parallel up to the worker cap; report order follows
/// the input order) and fills the summary counts.
RunReport run_suite(const RunConfig& config, int stages, const std::string& command);

nlohmann::json report_to_json(const RunReport& report, const RunConfig& config, bool include_timing = true);
std::string report_table(const RunReport& report);

/// Writes report.json, report.txt, curves/*.csv, plots/*.dat, bounds.csv and
/// sharpness.csv into config.out_dir.
void write_outputs(const RunReport& report, const RunConfig& config);

}  // namespace gaussfit
