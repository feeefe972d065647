#include "gaussfit/cli.hpp"

#include "gaussfit/error.hpp"
#include "gaussfit/pipeline.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace gaussfit {

namespace {

struct Options {
  std::string config;
  std::vector<std::string> bodies;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string checks;
  std::optional<long> samples;
  std::optional<int> workers;
  std::vector<std::string> constants;
  bool dump_samples = false;
  bool json = false;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

RunConfig build_config(const Options& o) {
  RunConfig cfg;
  if (!o.config.empty()) cfg = load_run_config(o.config);
  for (const auto& path : o.bodies)
    for (auto& b : load_bodies(path)) cfg.bodies.push_back(std::move(b));
  if (o.seed) {
    cfg.seed = *o.seed;
    cfg.sampler.seed = *o.seed;
  }
  if (!o.out.empty()) cfg.out_dir = o.out;
  if (!o.checks.empty()) cfg.checks = expand_checks(split_list(o.checks));
  if (o.samples) cfg.samples = *o.samples;
  if (o.workers) cfg.workers = *o.workers;
  for (const auto& c : o.constants) apply_constant(cfg.constants, c);
  if (o.dump_samples) cfg.dump_samples = true;
  return cfg;
}

int stages_for(const std::string& command, const std::set<std::string>& checks) {
  const int all = static_cast<int>(Stage::Radial) | static_cast<int>(Stage::FreeEnergy) |
                  static_cast<int>(Stage::Overlap) | static_cast<int>(Stage::Bounds);
  if (command == "stats") return static_cast<int>(Stage::Radial);
  if (command == "free-energy") return static_cast<int>(Stage::FreeEnergy);
  if (command == "overlap") return static_cast<int>(Stage::Overlap);
  if (command == "bounds") return static_cast<int>(Stage::Bounds);
  if (checks.empty()) return all;
  int stages = 0;
  for (const auto& [name, stage] : check_catalog())
    if (checks.count(name)) stages |= static_cast<int>(stage);
  return stages;
}

std::string curve_table(const RunReport& report) {
  std::ostringstream os;
  char line[160];
  for (const auto& b : report.bodies) {
    if (b.curve.points.empty()) continue;
    os << "\n" << b.name << "  (E2 S = " << b.stats.E2 * b.stats.S << ")\n";
    std::snprintf(line, sizeof line, "  %-14s %-14s %-11s %-14s %s\n", "w", "Z", "se", "Z/w", "method");
    os << line;
    for (const auto& p : b.curve.points) {
      std::snprintf(line, sizeof line, "  %-14.6g %-14.8g %-11.3g %-14.8g %s\n", p.w, p.Z, p.se, p.Z / p.w,
                    to_string(p.method));
      os << line;
    }
  }
  return os.str();
}

std::string overlap_table(const RunReport& report) {
  std::ostringstream os;
  char line[200];
  std::snprintf(line, sizeof line, "\n%-22s %-12s %-12s %-11s %-12s %-12s %s\n", "body", "w0", "H", "se_H",
                "dtv_pinsker", "dtv_direct", "se_dtv");
  os << line;
  for (const auto& b : report.bodies) {
    if (!b.overlap) continue;
    const auto& o = *b.overlap;
    std::snprintf(line, sizeof line, "%-22s %-12.6g %-12.6g %-11.3g %-12.6g %-12.6g %.3g\n", b.name.c_str(), o.w0, o.H,
                  o.se_H, o.dtv_pinsker, o.dtv_direct, o.se_dtv);
    os << line;
  }
  return os.str();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gaussian fitting diagnostics for convex bodies", "gaussfit"};
  app.require_subcommand(1);
  Options o;
  struct Command {
    const char* name;
    const char* help;
  };
  const Command commands[] = {
      {"stats", "radial moments and radial checks"},
      {"free-energy", "free energy curve and its shape checks"},
      {"overlap", "relative entropy and total variation at w0"},
      {"bounds", "Cheeger and spectral gap bounds with reference values"},
      {"verify", "every check; exit 0 iff nothing fails"},
  };
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("bodies", o.bodies, "body files (JSON)")->check(CLI::ExistingFile);
    sub->add_option("--config", o.config, "run configuration (JSON)")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--checks", o.checks, "comma-separated checks or stages");
    sub->add_option("--samples", o.samples, "uniform samples per body")->check(CLI::PositiveNumber);
    sub->add_option("--workers", o.workers, "worker threads (default GAUSSFIT_WORKERS or all cores)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--constants", o.constants, "constant overrides KEY=VAL")->expected(1, -1);
    sub->add_flag("--dump-samples", o.dump_samples, "write uniform samples to OUT/samples");
    sub->add_flag("--json", o.json, "print the report document instead of the table");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitPass;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitPass;
  } catch (const CLI::ParseError& e) {
    err << "gaussfit: " << e.what() << "\n";
    return kExitUsage;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  RunConfig cfg;
  try {
    cfg = build_config(o);
    if (cfg.bodies.empty()) {
      err << "gaussfit: no bodies given (pass body files or a config with a 'bodies' list)\n";
      return kExitUsage;
    }
    std::set<std::string> names;
    for (const auto& b : cfg.bodies)
      if (!names.insert(b.name).second) {
        err << "gaussfit: duplicate body name '" << b.name << "'\n";
        return kExitUsage;
      }
  } catch (const Error& e) {
    err << "gaussfit: " << to_string(e.code()) << ": " << e.what() << "\n";
    return kExitUsage;
  }

  const int stages = stages_for(command, cfg.checks);
  RunReport report;
  try {
    report = run_suite(cfg, stages, command);
    write_outputs(report, cfg);
  } catch (const Error& e) {
    err << "gaussfit: " << to_string(e.code()) << ": " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "gaussfit: " << e.what() << "\n";
    return kExitUsage;
  }

  if (o.json) {
    out << report_to_json(report, cfg).dump(2) << "\n";
  } else {
    std::string table = report_table(report);
    if (command == "free-energy") table += curve_table(report);
    if (command == "overlap") table += overlap_table(report);
    out << table;
    if (!cfg.out_dir.empty()) out << "outputs written to " << cfg.out_dir.string() << "\n";
  }
  return report.passed() ? kExitPass : kExitCheckFailure;
}

}  // namespace gaussfit
