#include "gaussfit/body_io.hpp"
#include "gaussfit/cli.hpp"
#include "gaussfit/error.hpp"
#include "gaussfit/pipeline.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace gaussfit;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

ErrorCode error_code(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidConfig;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path write(const std::string& file, const json& j) const {
    std::ofstream(path / file) << j.dump(2);
    return path / file;
  }
};

const json kInterval = json::parse(R"({"name": "interval", "kind": "box", "dimension": 1, "lower": [0], "upper": [1]})");

int cli(const std::vector<std::string>& args, std::string* out_text = nullptr) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  if (out_text) *out_text = out.str();
  return code;
}

}  // namespace

TEST_CASE("body parsing") {
  const BodySpec box = parse_body(kInterval, "x");
  CHECK(box.name == "interval");
  CHECK(std::string(kind_name(box.body)) == "box");
  CHECK(box.base_point.mode == BasePointSpec::Mode::Auto);

  json ball = {{"kind", "ball"}, {"dimension", 3}, {"radius", 2.0}, {"base_point", {0.5, 0, 0}}};
  const BodySpec b = parse_body(ball, "fallback");
  CHECK(b.name == "fallback");
  CHECK(b.base_point.mode == BasePointSpec::Mode::Explicit);
  CHECK(b.base_point.point(0) == 0.5);

  ball["base_point"] = "optimize";
  CHECK(parse_body(ball, "x").base_point.mode == BasePointSpec::Mode::Optimize);
  ball["base_point"] = "nowhere";
  CHECK(error_code([&] { parse_body(ball, "x"); }) == ErrorCode::InvalidBody);

  json extra = kInterval;
  extra["colour"] = "red";
  CHECK(error_code([&] { parse_body(extra, "x"); }) == ErrorCode::InvalidBody);
  json wrong_dim = kInterval;
  wrong_dim["upper"] = {1, 2};
  CHECK(error_code([&] { parse_body(wrong_dim, "x"); }) == ErrorCode::InvalidBody);
  CHECK(error_code([] { parse_body(json{{"kind", "torus"}, {"dimension", 2}}, "x"); }) == ErrorCode::InvalidBody);
  json flat = kInterval;
  flat["upper"] = {0};
  CHECK(error_code([&] { parse_body(flat, "x"); }) == ErrorCode::Degenerate);
}

TEST_CASE("body JSON round trip") {
  const json docs[] = {
      kInterval,
      json::parse(R"({"kind": "ellipsoid", "dimension": 2, "shape": [[1, 0], [0, 4]], "center": [1, 1]})"),
      json::parse(R"({"kind": "simplex", "dimension": 2, "vertices": [[0, 0], [1, 0], [0, 1]]})"),
      json::parse(R"({"kind": "translated", "dimension": 2, "shift": [3, 4],
                      "body": {"kind": "ball", "dimension": 2, "radius": 1}})"),
      json::parse(R"({"kind": "hpolytope", "dimension": 2, "A": [[-1, 0], [0, -1], [1, 1]], "b": [0, 0, 1],
                      "interior_point": [0.25, 0.25]})"),
  };
  for (const json& d : docs) {
    const Body first = parse_body(d, "x").body;
    const json again = body_to_json(first);
    CHECK(again == body_to_json(parse_body(again, "x").body));
    CHECK(again["kind"] == d["kind"]);
  }
}

TEST_CASE("body lists and files") {
  TempDir dir("gaussfit_io_lists");
  dir.write("one.json", kInterval);
  const json list = {{"bodies", {"one.json", {{"kind", "ball"}, {"dimension", 2}, {"radius", 1}}}}};
  const auto bodies = parse_bodies(list, dir.path);
  REQUIRE(bodies.size() == 2);
  CHECK(bodies[0].name == "interval");
  CHECK(bodies[1].name == "body1");
  CHECK(parse_bodies(json::array({kInterval, kInterval}), dir.path).size() == 2);
  CHECK(error_code([&] { parse_bodies(json{{"bodies", 3}}, dir.path); }) == ErrorCode::InvalidBody);
  CHECK(error_code([&] { load_bodies(dir.path / "missing.json"); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("run configuration") {
  TempDir dir("gaussfit_io_config");
  dir.write("one.json", kInterval);
  const json good = json::parse(R"({"schema": "gaussfit.run/1", "bodies": ["one.json"], "seed": 7, "samples": 5000,
      "sampler": {"chains": 2, "batches": 20}, "w_grid": {"points": 8}, "constants": {"c_u": 0.02},
      "checks": ["radial", "corollary_tv"]})");
  const RunConfig c = parse_run_config(good, dir.path);
  CHECK(c.seed == 7);
  CHECK(c.sampler.seed == 7);
  CHECK(c.samples == 5000);
  CHECK(c.sampler.chains == 2);
  CHECK(c.w_grid.points == 8);
  CHECK(c.constants.c_u == 0.02);
  CHECK(c.checks.count("khinchine") == 1);
  CHECK(c.checks.count("corollary_tv") == 1);
  CHECK(c.checks.count("bound_sandwich") == 0);
  CHECK(RunConfig{}.sampler.chains == 4);

  for (const char* bad : {R"({"schema": "other/2"})", R"({"colour": 1})", R"({"samples": 0})",
                          R"({"sampler": {"walkers": 3}})", R"({"w_grid": {"lo": 10, "hi": 1}})",
                          R"({"constants": {"c_u": -1}})", R"({"constants": {"c_unknown": 1}})",
                          R"({"checks": ["nonsense"]})", R"({"seed": "abc"})"}) {
    CAPTURE(bad);
    CHECK(error_code([&] { parse_run_config(json::parse(bad), dir.path); }) == ErrorCode::InvalidConfig);
  }
}

TEST_CASE("constant overrides and check names") {
  Constants k;
  apply_constant(k, "C_u=25");
  CHECK(k.C_u == 25);
  apply_constant(k, "c_prime=0.125");
  CHECK(k.c_prime == 0.125);
  for (const char* bad : {"C_u", "C_u=", "C_u=abc", "C_u=1x", "C_u=0", "C_u=-3", "nope=1"}) {
    CAPTURE(bad);
    CHECK(error_code([&] { apply_constant(k, bad); }) == ErrorCode::InvalidConfig);
  }
  CHECK(expand_checks({"all"}).size() == check_catalog().size());
  CHECK(expand_checks({"bounds"}) == std::set<std::string>{"bound_sandwich", "bobkov_calibration"});
  CHECK(expand_checks({}).empty());
}

TEST_CASE("command line") {
  TempDir dir("gaussfit_io_cli");
  const fs::path body = dir.write("interval.json", kInterval);
  const std::string out = (dir.path / "out").string();
  const std::vector<std::string> small{"--samples", "5000", "--seed", "3", "--workers", "1", "--out", out};
  auto with = [&](std::vector<std::string> head, const std::vector<std::string>& tail = {}) {
    head.insert(head.end(), small.begin(), small.end());
    head.insert(head.end(), tail.begin(), tail.end());
    return head;
  };

  CHECK(cli({"--help"}) == kExitPass);
  CHECK(cli({}) == kExitUsage);
  CHECK(cli({"verify"}) == kExitUsage);
  CHECK(cli({"verify", (dir.path / "absent.json").string()}) == kExitUsage);
  CHECK(cli(with({"verify", body.string()}, {"--constants", "c_u=-1"})) == kExitUsage);
  CHECK(cli(with({"verify", body.string()}, {"--checks", "bogus"})) == kExitUsage);
  CHECK(cli(with({"verify", body.string(), body.string()})) == kExitUsage);
  CHECK(cli(with({"stats", body.string()}, {"--json"})) == kExitPass);
  CHECK(fs::exists(dir.path / "out" / "report.json"));

  std::string text;
  CHECK(cli(with({"verify", body.string()}), &text) == kExitPass);
  CHECK(text.find("interval") != std::string::npos);
  CHECK(fs::exists(dir.path / "out" / "sharpness.csv"));
  CHECK(fs::exists(dir.path / "out" / "curves" / "interval.csv"));

  // An infeasible sharpness constant turns the upper-bound check red.
  CHECK(cli(with({"verify", body.string()}, {"--checks", "free_energy_upper_bound", "--constants", "c_u=10"})) ==
        kExitCheckFailure);
}

TEST_CASE("reports are deterministic") {
  TempDir dir("gaussfit_io_determinism");
  dir.write("interval.json", kInterval);
  const json doc = json::parse(R"({"bodies": ["interval.json"], "samples": 4000, "seed": 11,
                                   "thermo": {"samples_per_node": 500}})");
  RunConfig a = parse_run_config(doc, dir.path);
  RunConfig b = parse_run_config(doc, dir.path);
  a.workers = 1;
  b.workers = 2;
  const int stages = int(Stage::Radial) | int(Stage::FreeEnergy) | int(Stage::Overlap) | int(Stage::Bounds);
  const std::string first = report_to_json(run_suite(a, stages, "verify"), a, false).dump();
  const std::string second = report_to_json(run_suite(b, stages, "verify"), b, false).dump();
  CHECK(first == second);
  RunConfig empty = a;
  empty.bodies.clear();
  CHECK(error_code([&] { run_suite(empty, stages, "verify"); }) == ErrorCode::InvalidConfig);
}
