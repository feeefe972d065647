#pragma once

#include "gaussfit/geometry.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace gaussfit {

/// How the base point x0 is picked for a body.
///   Auto:     the center for balls, boxes and ellipsoids (and translates of
///             them), the E*S search otherwise.
///   Interior: the body's interior point.
///   Optimize: Nelder-Mead search on E(x0) * S(x0).
///   Explicit: a given point.
struct BasePointSpec {
  enum class Mode { Auto, Interior, Optimize, Explicit };
  Mode mode = Mode::Auto;
  Eigen::VectorXd point;
};

struct BodySpec {
  std::string name;
  Body body;
  BasePointSpec base_point;
  nlohmann::json source;
};

/// Parses one body object (see docs/body_format.md). Throws Error with
/// InvalidBody on schema problems and whatever construction throws on
/// geometric ones.
BodySpec parse_body(const nlohmann::json& j, const std::string& fallback_name);

/// A body object, an array of body objects, or {"bodies": [...]}. String
/// entries are paths to further body files, resolved against `base_dir`.
std::vector<BodySpec> parse_bodies(const nlohmann::json& j, const std::filesystem::path& base_dir,
                                   const std::string& name_prefix = "body");

std::vector<BodySpec> load_bodies(const std::filesystem::path& path);

/// Inverse of parse_body for the geometric part.
nlohmann::json body_to_json(const Body& body);

const char* kind_name(const Body& body);

}  // namespace gaussfit
