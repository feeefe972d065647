#include "gaussfit/body_io.hpp"

#include "gaussfit/error.hpp"

#include <fstream>
#include <set>

namespace gaussfit {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::InvalidBody, where + ": " + what);
}

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) fail(where, "unknown key '" + key + "'");
}

const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) fail(where, std::string("missing key '") + key + "'");
  return j.at(key);
}

Eigen::VectorXd vec(const json& j, long expected, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array of numbers");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) fail(where, "expected an array of numbers");
    v(i) = j[i].get<double>();
  }
  if (expected >= 0 && v.size() != expected) fail(where, "expected " + std::to_string(expected) + " entries");
  return v;
}

// Array of rows, each of length `cols`.
Eigen::MatrixXd rows(const json& j, long cols, const std::string& where) {
  if (!j.is_array() || j.empty()) fail(where, "expected a nonempty array of rows");
  Eigen::MatrixXd m(j.size(), cols);
  for (std::size_t i = 0; i < j.size(); ++i) m.row(i) = vec(j[i], cols, where).transpose();
  return m;
}

json to_array(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json to_rows(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(to_array(m.row(i).transpose()));
  return out;
}

Body parse_shape(const json& j, const std::string& where, const std::set<std::string>& extra) {
  if (!j.is_object()) fail(where, "a body must be a JSON object");
  const std::string kind = require(j, "kind", where).get<std::string>();
  const json& dim_j = require(j, "dimension", where);
  if (!dim_j.is_number_integer() || dim_j.get<long>() < 1) fail(where, "dimension must be a positive integer");
  const long n = dim_j.get<long>();
  auto allowed = [&](std::set<std::string> keys) {
    keys.insert({"kind", "dimension"});
    keys.insert(extra.begin(), extra.end());
    reject_unknown(j, keys, where);
  };
  if (kind == "ball") {
    allowed({"center", "radius"});
    const Eigen::VectorXd c = j.contains("center") ? vec(j["center"], n, where + ".center") : Eigen::VectorXd::Zero(n);
    return Body::ball(c, require(j, "radius", where).get<double>());
  }
  if (kind == "box") {
    allowed({"lower", "upper"});
    return Body::box(vec(require(j, "lower", where), n, where + ".lower"),
                     vec(require(j, "upper", where), n, where + ".upper"));
  }
  if (kind == "simplex") {
    allowed({"vertices"});
    const Eigen::MatrixXd v = rows(require(j, "vertices", where), n, where + ".vertices");
    if (v.rows() != n + 1) fail(where, "a simplex needs dimension + 1 vertices");
    return Body::simplex(v.transpose());
  }
  if (kind == "hpolytope") {
    allowed({"A", "b", "interior_point", "vertices"});
    const Eigen::MatrixXd A = rows(require(j, "A", where), n, where + ".A");
    const Eigen::VectorXd b = vec(require(j, "b", where), A.rows(), where + ".b");
    std::optional<Eigen::VectorXd> interior;
    if (j.contains("interior_point")) interior = vec(j["interior_point"], n, where + ".interior_point");
    Eigen::MatrixXd vertices;
    if (j.contains("vertices")) vertices = rows(j["vertices"], n, where + ".vertices").transpose();
    return Body::hpolytope(A, b, interior, vertices);
  }
  if (kind == "ellipsoid") {
    allowed({"shape", "center"});
    const Eigen::MatrixXd M = rows(require(j, "shape", where), n, where + ".shape");
    if (M.rows() != n) fail(where, "shape must be dimension x dimension");
    const Eigen::VectorXd c = j.contains("center") ? vec(j["center"], n, where + ".center") : Eigen::VectorXd::Zero(n);
    return Body::ellipsoid(M, c);
  }
  if (kind == "translated") {
    allowed({"body", "shift"});
    Body inner = parse_shape(require(j, "body", where), where + ".body", {"name"});
    if (inner.dimension() != n) fail(where, "inner body has a different dimension");
    return Body::translated(std::move(inner), vec(require(j, "shift", where), n, where + ".shift"));
  }
  fail(where, "unknown kind '" + kind + "'");
}

}  // namespace

BodySpec parse_body(const json& j, const std::string& fallback_name) {
  const std::string where = j.is_object() && j.contains("name") && j["name"].is_string()
                                ? j["name"].get<std::string>()
                                : fallback_name;
  BodySpec spec{where, parse_shape(j, where, {"name", "base_point"}), {}, j};
  if (j.contains("base_point")) {
    const json& bp = j["base_point"];
    if (bp.is_string()) {
      const std::string mode = bp.get<std::string>();
      if (mode == "auto")
        spec.base_point.mode = BasePointSpec::Mode::Auto;
      else if (mode == "interior")
        spec.base_point.mode = BasePointSpec::Mode::Interior;
      else if (mode == "optimize")
        spec.base_point.mode = BasePointSpec::Mode::Optimize;
      else
        fail(where, "base_point must be auto, interior, optimize or a point");
    } else {
      spec.base_point.mode = BasePointSpec::Mode::Explicit;
      spec.base_point.point = vec(bp, spec.body.dimension(), where + ".base_point");
    }
  }
  return spec;
}

std::vector<BodySpec> parse_bodies(const json& j, const std::filesystem::path& base_dir,
                                   const std::string& name_prefix) {
  std::vector<BodySpec> out;
  auto add = [&](const json& item, const std::string& name) {
    if (item.is_string()) {
      for (auto& b : load_bodies(base_dir / item.get<std::string>())) out.push_back(std::move(b));
    } else {
      out.push_back(parse_body(item, name));
    }
  };
  if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) add(j[i], name_prefix + std::to_string(i));
  } else if (j.is_object() && j.contains("bodies")) {
    reject_unknown(j, {"bodies"}, name_prefix);
    const json& list = j["bodies"];
    if (!list.is_array()) fail(name_prefix, "'bodies' must be an array");
    for (std::size_t i = 0; i < list.size(); ++i) add(list[i], name_prefix + std::to_string(i));
  } else {
    add(j, name_prefix);
  }
  return out;
}

std::vector<BodySpec> load_bodies(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open body file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidBody, path.string() + ": " + e.what());
  }
  return parse_bodies(j, path.parent_path(), path.stem().string());
}

json body_to_json(const Body& body) {
  json j;
  j["dimension"] = body.dimension();
  std::visit(detail::overloaded{
                 [&](const Ball<double>& b) {
                   j["kind"] = "ball";
                   j["center"] = to_array(b.center);
                   j["radius"] = b.radius;
                 },
                 [&](const Box<double>& b) {
                   j["kind"] = "box";
                   j["lower"] = to_array(b.lower);
                   j["upper"] = to_array(b.upper);
                 },
                 [&](const Simplex<double>& s) {
                   j["kind"] = "simplex";
                   j["vertices"] = to_rows(s.vertices.transpose());
                 },
                 [&](const HPolytope<double>& h) {
                   j["kind"] = "hpolytope";
                   j["A"] = to_rows(h.rows);
                   j["b"] = to_array(h.offsets);
                   j["interior_point"] = to_array(body.interior_point());
                   if (h.vertices.cols() > 0) j["vertices"] = to_rows(h.vertices.transpose());
                 },
                 [&](const Ellipsoid<double>& e) {
                   j["kind"] = "ellipsoid";
                   j["shape"] = to_rows(e.shape);
                   j["center"] = to_array(e.center);
                 },
                 [&](const Translated<double>& t) {
                   j["kind"] = "translated";
                   j["body"] = body_to_json(*t.inner);
                   j["shift"] = to_array(t.shift);
                 },
                 [&](const MembershipOracle<double>&) { j["kind"] = "membership-oracle"; },
             },
             body.shape());
  return j;
}

const char* kind_name(const Body& body) {
  return std::visit(detail::overloaded{
                        [](const Ball<double>&) { return "ball"; },
                        [](const Box<double>&) { return "box"; },
                        [](const Simplex<double>&) { return "simplex"; },
                        [](const HPolytope<double>&) { return "hpolytope"; },
                        [](const Ellipsoid<double>&) { return "ellipsoid"; },
                        [](const Translated<double>&) { return "translated"; },
                        [](const MembershipOracle<double>&) { return "membership-oracle"; },
                    },
                    body.shape());
}

}  // namespace gaussfit
