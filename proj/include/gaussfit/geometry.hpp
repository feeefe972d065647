#pragma once

#include "gaussfit/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <type_traits>
#include <variant>

namespace gaussfit {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Parameter range {t : p + t u in K} of a line through an interior point.
template <typename Scalar>
struct Chord {
  Scalar lo = 0;
  Scalar hi = 0;
  Scalar length() const { return hi - lo; }
};

template <typename Scalar>
struct Ball {
  VectorX<Scalar> center;
  Scalar radius;
};

template <typename Scalar>
struct Box {
  VectorX<Scalar> lower;
  VectorX<Scalar> upper;
};

/// {x : rows * x <= offsets}. `vertices` (one per column) is optional and only
/// used to tighten the diameter bound.
template <typename Scalar>
struct HPolytope {
  MatrixX<Scalar> rows;
  VectorX<Scalar> offsets;
  MatrixX<Scalar> vertices;
};

/// Convex hull of n + 1 affinely independent columns; facets are kept in
/// H-form so chords reduce to the polytope case.
template <typename Scalar>
struct Simplex {
  MatrixX<Scalar> vertices;
  HPolytope<Scalar> facets;
};

/// {x : (x - center)^T shape (x - center) <= 1} with `shape` positive definite.
template <typename Scalar>
struct Ellipsoid {
  MatrixX<Scalar> shape;
  VectorX<Scalar> center;
};

template <typename Scalar>
class ConvexBody;

/// inner + shift.
template <typename Scalar>
struct Translated {
  std::shared_ptr<const ConvexBody<Scalar>> inner;
  VectorX<Scalar> shift;
};

/// A body known only through a membership test; chords are found by bisection.
template <typename Scalar>
struct MembershipOracle {
  std::function<bool(const VectorX<Scalar>&)> contains;
};

/// Immutable convex body with an interior point and a bounding radius R such
/// that K is contained in B(interior_point, R). Construction rejects unbounded
/// and lower-dimensional bodies.
template <typename Scalar_>
class ConvexBody {
 public:
  using Scalar = Scalar_;
  using Vector = VectorX<Scalar>;
  using Matrix = MatrixX<Scalar>;
  using Shape = std::variant<Ball<Scalar>, Box<Scalar>, Simplex<Scalar>, HPolytope<Scalar>, Ellipsoid<Scalar>,
                             Translated<Scalar>, MembershipOracle<Scalar>>;

  int dimension() const { return static_cast<int>(interior_.size()); }
  const Vector& interior_point() const { return interior_; }
  Scalar bounding_radius() const { return radius_; }
  const Shape& shape() const { return shape_; }
  /// Absolute tolerance for bisected chord endpoints.
  Scalar chord_tolerance() const { return Scalar(1e-10) * radius_; }

  static ConvexBody ball(Vector center, Scalar radius);
  static ConvexBody box(Vector lower, Vector upper);
  static ConvexBody simplex(Matrix vertices);
  static ConvexBody hpolytope(Matrix rows, Vector offsets, std::optional<Vector> interior = std::nullopt,
                              Matrix vertices = Matrix());
  static ConvexBody ellipsoid(Matrix shape, Vector center);
  static ConvexBody translated(ConvexBody inner, Vector shift);
  static ConvexBody membership_oracle(std::function<bool(const Vector&)> contains, Vector interior, Scalar radius);

 private:
  ConvexBody(Shape shape, Vector interior, Scalar radius)
      : shape_(std::move(shape)), interior_(std::move(interior)), radius_(radius) {}

  void validate() const;

  Shape shape_;
  Vector interior_;
  Scalar radius_;
};

using Body = ConvexBody<double>;

namespace detail {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

template <typename Scalar>
constexpr Scalar membership_slack() {
  return Scalar(64) * std::numeric_limits<Scalar>::epsilon();
}

// Roots of a t^2 + 2 b t + c = 0 with c <= 0, ordered, computed without
// cancellation.
template <typename Scalar>
Chord<Scalar> quadratic_chord(Scalar a, Scalar b, Scalar c) {
  c = std::min(c, Scalar(0));
  const Scalar s = std::sqrt(std::max(b * b - a * c, Scalar(0)));
  if (b >= 0) {
    const Scalar q = -(b + s);  // a * lo
    const Scalar lo = q / a;
    const Scalar hi = q != 0 ? c / q : Scalar(0);
    return {lo, hi};
  }
  const Scalar q = s - b;  // a * hi
  const Scalar hi = q / a;
  const Scalar lo = q != 0 ? c / q : Scalar(0);
  return {lo, hi};
}

template <typename Scalar>
Chord<Scalar> polytope_chord(const HPolytope<Scalar>& poly, const VectorX<Scalar>& p, const VectorX<Scalar>& u) {
  constexpr Scalar inf = std::numeric_limits<Scalar>::infinity();
  Chord<Scalar> chord{-inf, inf};
  const VectorX<Scalar> rate = poly.rows * u;
  const VectorX<Scalar> slack = poly.offsets - poly.rows * p;
  for (Eigen::Index i = 0; i < rate.size(); ++i) {
    const Scalar s = std::max(slack(i), Scalar(0));
    if (rate(i) > 0) {
      chord.hi = std::min(chord.hi, s / rate(i));
    } else if (rate(i) < 0) {
      chord.lo = std::max(chord.lo, s / rate(i));
    }
  }
  if (!std::isfinite(chord.lo) || !std::isfinite(chord.hi))
    throw Error(ErrorCode::Unbounded, "polytope chord is unbounded");
  return chord;
}

template <typename Scalar>
Scalar max_pairwise_distance(const MatrixX<Scalar>& points) {
  Scalar best = 0;
  for (Eigen::Index i = 0; i < points.cols(); ++i)
    for (Eigen::Index j = i + 1; j < points.cols(); ++j)
      best = std::max(best, (points.col(i) - points.col(j)).norm());
  return best;
}

/// max c^T y subject to rows * y <= slack with y free and slack > 0, by a dense
/// tableau simplex with Bland's rule. Returns nullopt when unbounded.
template <typename Scalar>
std::optional<Scalar> maximize_linear(const MatrixX<Scalar>& rows, const VectorX<Scalar>& slack,
                                      const VectorX<Scalar>& objective) {
  const Eigen::Index m = rows.rows(), n = rows.cols();
  const Eigen::Index cols = 2 * n + m;
  MatrixX<Scalar> tab = MatrixX<Scalar>::Zero(m + 1, cols + 1);
  tab.block(0, 0, m, n) = rows;
  tab.block(0, n, m, n) = -rows;
  tab.block(0, 2 * n, m, m).setIdentity();
  tab.block(0, cols, m, 1) = slack;
  tab.block(m, 0, 1, n) = -objective.transpose();
  tab.block(m, n, 1, n) = objective.transpose();
  std::vector<Eigen::Index> basis(m);
  for (Eigen::Index i = 0; i < m; ++i) basis[i] = 2 * n + i;

  const Scalar eps = Scalar(1e-11) * std::max(Scalar(1), tab.cwiseAbs().maxCoeff());
  const int max_pivots = static_cast<int>(50 * (m + n) + 100);
  for (int pivot = 0; pivot < max_pivots; ++pivot) {
    Eigen::Index enter = -1;
    for (Eigen::Index j = 0; j < cols; ++j)
      if (tab(m, j) < -eps) {
        enter = j;
        break;
      }
    if (enter < 0) return tab(m, cols);
    Eigen::Index leave = -1;
    Scalar best = std::numeric_limits<Scalar>::infinity();
    for (Eigen::Index i = 0; i < m; ++i) {
      if (tab(i, enter) > eps) {
        const Scalar ratio = tab(i, cols) / tab(i, enter);
        if (ratio < best - eps || (std::abs(ratio - best) <= eps && leave >= 0 && basis[i] < basis[leave])) {
          best = ratio;
          leave = i;
        }
      }
    }
    if (leave < 0) return std::nullopt;
    tab.row(leave) /= tab(leave, enter);
    for (Eigen::Index i = 0; i <= m; ++i)
      if (i != leave && tab(i, enter) != 0) tab.row(i) -= tab(i, enter) * tab.row(leave);
    basis[leave] = enter;
  }
  throw Error(ErrorCode::ConvergenceFailure, "bounding-box linear program did not terminate");
}

}  // namespace detail

/// True iff x lies in the closure of K, up to a relative slack of a few ulps.
template <typename Scalar, typename Derived>
bool contains(const ConvexBody<Scalar>& body, const Eigen::MatrixBase<Derived>& x) {
  const Scalar slack = detail::membership_slack<Scalar>();
  const Scalar scale = body.bounding_radius() + body.interior_point().norm();
  return std::visit(
      detail::overloaded{
          [&](const Ball<Scalar>& b) { return (x - b.center).norm() <= b.radius * (1 + slack); },
          [&](const Box<Scalar>& b) {
            const Scalar tol = slack * scale;
            return ((x.array() >= b.lower.array() - tol) && (x.array() <= b.upper.array() + tol)).all();
          },
          [&](const Simplex<Scalar>& s) {
            const VectorX<Scalar> excess = s.facets.rows * x - s.facets.offsets;
            return (excess.array() <= slack * scale * s.facets.rows.rowwise().norm().array()).all();
          },
          [&](const HPolytope<Scalar>& h) {
            const VectorX<Scalar> excess = h.rows * x - h.offsets;
            return (excess.array() <= slack * scale * h.rows.rowwise().norm().array()).all();
          },
          [&](const Ellipsoid<Scalar>& e) {
            const VectorX<Scalar> d = x - e.center;
            return d.dot(e.shape * d) <= 1 + slack;
          },
          [&](const Translated<Scalar>& t) { return contains(*t.inner, (x - t.shift).eval()); },
          [&](const MembershipOracle<Scalar>& o) { return o.contains(x.eval()); },
      },
      body.shape());
}

/// Chord through p in direction u without re-checking that p is inside.
/// Samplers use this on points they produced themselves.
template <typename Scalar>
Chord<Scalar> chord_interval_unchecked(const ConvexBody<Scalar>& body, const VectorX<Scalar>& p,
                                       const VectorX<Scalar>& u) {
  Chord<Scalar> chord = std::visit(
      detail::overloaded{
          [&](const Ball<Scalar>& b) {
            const VectorX<Scalar> d = p - b.center;
            return detail::quadratic_chord<Scalar>(u.squaredNorm(), d.dot(u), d.squaredNorm() - b.radius * b.radius);
          },
          [&](const Box<Scalar>& b) {
            constexpr Scalar inf = std::numeric_limits<Scalar>::infinity();
            Chord<Scalar> c{-inf, inf};
            for (Eigen::Index i = 0; i < p.size(); ++i) {
              if (u(i) == 0) continue;
              Scalar t1 = (b.lower(i) - p(i)) / u(i);
              Scalar t2 = (b.upper(i) - p(i)) / u(i);
              if (t1 > t2) std::swap(t1, t2);
              c.lo = std::max(c.lo, t1);
              c.hi = std::min(c.hi, t2);
            }
            return c;
          },
          [&](const Simplex<Scalar>& s) { return detail::polytope_chord(s.facets, p, u); },
          [&](const HPolytope<Scalar>& h) { return detail::polytope_chord(h, p, u); },
          [&](const Ellipsoid<Scalar>& e) {
            const VectorX<Scalar> d = p - e.center;
            const VectorX<Scalar> mu = e.shape * u;
            return detail::quadratic_chord<Scalar>(u.dot(mu), d.dot(mu), d.dot(e.shape * d) - 1);
          },
          [&](const Translated<Scalar>& t) {
            return chord_interval_unchecked<Scalar>(*t.inner, (p - t.shift).eval(), u);
          },
          [&](const MembershipOracle<Scalar>& o) {
            const Scalar tol = body.chord_tolerance();
            auto edge = [&](Scalar direction) {
              Scalar inside = 0, outside = Scalar(2.5) * body.bounding_radius();
              for (int iter = 0; iter < 200 && outside - inside > tol; ++iter) {
                const Scalar mid = (inside + outside) / 2;
                if (o.contains((p + direction * mid * u).eval()))
                  inside = mid;
                else
                  outside = mid;
              }
              return inside;
            };
            return Chord<Scalar>{-edge(Scalar(-1)), edge(Scalar(1))};
          },
      },
      body.shape());
  chord.lo = std::min(chord.lo, Scalar(0));
  chord.hi = std::max(chord.hi, Scalar(0));
  return chord;
}

/// {t : p + t u in K} for an interior point p and unit direction u.
template <typename Scalar, typename DerivedP, typename DerivedU>
Chord<Scalar> chord_interval(const ConvexBody<Scalar>& body, const Eigen::MatrixBase<DerivedP>& p,
                             const Eigen::MatrixBase<DerivedU>& u) {
  if (!contains(body, p)) throw Error(ErrorCode::NotInterior, "chord base point lies outside the body");
  return chord_interval_unchecked<Scalar>(body, p.eval(), u.eval());
}

/// Certified upper bound on diam(K): exact for balls, boxes, simplices and
/// ellipsoids, and for polytopes that carry their vertex list.
template <typename Scalar>
Scalar diameter_upper_bound(const ConvexBody<Scalar>& body) {
  return std::visit(detail::overloaded{
                        [](const Ball<Scalar>& b) { return 2 * b.radius; },
                        [](const Box<Scalar>& b) { return (b.upper - b.lower).norm(); },
                        [](const Simplex<Scalar>& s) { return detail::max_pairwise_distance(s.vertices); },
                        [&](const HPolytope<Scalar>& h) {
                          return h.vertices.cols() > 1 ? detail::max_pairwise_distance(h.vertices)
                                                       : 2 * body.bounding_radius();
                        },
                        [&](const Ellipsoid<Scalar>&) { return 2 * body.bounding_radius(); },
                        [](const Translated<Scalar>& t) { return diameter_upper_bound(*t.inner); },
                        [&](const MembershipOracle<Scalar>&) { return 2 * body.bounding_radius(); },
                    },
                    body.shape());
}

/// log Vol(K) for bodies with a closed-form volume.
template <typename Scalar>
std::optional<Scalar> log_volume(const ConvexBody<Scalar>& body) {
  const Scalar n = body.dimension();
  const Scalar log_unit_ball = n / 2 * std::log(std::numbers::pi_v<Scalar>) - std::lgamma(n / 2 + 1);
  return std::visit(
      detail::overloaded{
          [&](const Ball<Scalar>& b) -> std::optional<Scalar> { return log_unit_ball + n * std::log(b.radius); },
          [](const Box<Scalar>& b) -> std::optional<Scalar> {
            return (b.upper - b.lower).array().log().sum();
          },
          [&](const Simplex<Scalar>& s) -> std::optional<Scalar> {
            const MatrixX<Scalar> edges = s.vertices.rightCols(s.vertices.cols() - 1).colwise() - s.vertices.col(0);
            return std::log(std::abs(edges.determinant())) - std::lgamma(n + 1);
          },
          [](const HPolytope<Scalar>&) -> std::optional<Scalar> { return std::nullopt; },
          [&](const Ellipsoid<Scalar>& e) -> std::optional<Scalar> {
            Eigen::LLT<MatrixX<Scalar>> llt(e.shape);
            const Scalar log_det = 2 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
            return log_unit_ball - log_det / 2;
          },
          [](const Translated<Scalar>& t) { return log_volume(*t.inner); },
          [](const MembershipOracle<Scalar>&) -> std::optional<Scalar> { return std::nullopt; },
      },
      body.shape());
}

template <typename Scalar>
void ConvexBody<Scalar>::validate() const {
  const int n = dimension();
  if (n < 1) throw Error(ErrorCode::InvalidBody, "dimension must be positive");
  if (!interior_.allFinite()) throw Error(ErrorCode::InvalidBody, "interior point must be finite");
  if (!std::isfinite(radius_) || !(radius_ > 0))
    throw Error(ErrorCode::Unbounded, "bounding radius must be finite and positive");
  if (!contains(*this, interior_)) throw Error(ErrorCode::NotInterior, "interior point is outside the body");
  // Positive-volume witness: the interior point plus one probe along each
  // coordinate axis are affinely independent iff every axis chord is open.
  const Scalar min_length = Scalar(1e-9) * radius_;
  for (int i = 0; i < n; ++i) {
    const Vector axis = Vector::Unit(n, i);
    const Chord<Scalar> chord = chord_interval_unchecked(*this, interior_, axis);
    if (!std::isfinite(chord.lo) || !std::isfinite(chord.hi))
      throw Error(ErrorCode::Unbounded, "body is unbounded along coordinate " + std::to_string(i));
    if (!(chord.lo < -min_length / 2 && chord.hi > min_length / 2))
      throw Error(ErrorCode::Degenerate, "body has no interior around the interior point along coordinate " +
                                             std::to_string(i));
  }
}

template <typename Scalar>
ConvexBody<Scalar> ConvexBody<Scalar>::ball(Vector center, Scalar radius) {
  if (!(radius > 0)) throw Error(ErrorCode::Degenerate, "ball radius must be positive");
  Vector interior = center;
  ConvexBody body(Ball<Scalar>{std::move(center), radius}, std::move(interior), radius);
  body.validate();
  return body;
}

template <typename Scalar>
ConvexBody<Scalar> ConvexBody<Scalar>::box(Vector lower, Vector upper) {
  if (lower.size() != upper.size()) throw Error(ErrorCode::InvalidBody, "box corners differ in dimension");
  if (!lower.allFinite() || !upper.allFinite()) throw Error(ErrorCode::Unbounded, "box corners must be finite");
  if (!(upper.array() > lower.array()).all())
    throw Error(ErrorCode::Degenerate, "box upper corner must exceed lower corner in every coordinate");
  Vector interior = (lower + upper) / 2;
  const Scalar radius = (upper - lower).norm() / 2;
  ConvexBody body(Box<Scalar>{std::move(lower), std::move(upper)}, std::move(interior), radius);
  body.validate();
  return body;
}

template <typename Scalar>
ConvexBody<Scalar> ConvexBody<Scalar>::simplex(Matrix vertices) {
  const Eigen::Index n = vertices.rows();
  if (vertices.cols() != n + 1) throw Error(ErrorCode::InvalidBody, "simplex needs dimension + 1 vertices");
  const Matrix edges = vertices.rightCols(n).colwise() - vertices.col(0);
  Eigen::FullPivLU<Matrix> lu(edges);
  if (lu.rank() < n) throw Error(ErrorCode::Degenerate, "simplex vertices are affinely dependent");
  // Barycentric coordinates lambda = inv * (x - v0) must be >= 0 with sum <= 1.
  const Matrix inv = lu.inverse();
  const Vector shift = inv * vertices.col(0);
  HPolytope<Scalar> facets;
  facets.rows.resize(n + 1, n);
  facets.offsets.resize(n + 1);
  facets.rows.topRows(n) = -inv;
  facets.offsets.head(n) = -shift;
  facets.rows.row(n) = inv.colwise().sum();
  facets.offsets(n) = 1 + shift.sum();
  Vector centroid = vertices.rowwise().mean();
  Scalar radius = (vertices.colwise() - centroid).colwise().norm().maxCoeff();
  ConvexBody body(Simplex<Scalar>{std::move(vertices), std::move(facets)}, std::move(centroid), radius);
  body.validate();
  return body;
}

template <typename Scalar>
ConvexBody<Scalar> ConvexBody<Scalar>::hpolytope(Matrix rows, Vector offsets, std::optional<Vector> interior,
                                                 Matrix vertices) {
  const Eigen::Index n = rows.cols();
  if (rows.rows() != offsets.size() || rows.rows() == 0)
    throw Error(ErrorCode::InvalidBody, "polytope needs one offset per constraint row");
  if (vertices.size() > 0 && vertices.rows() != n)
    throw Error(ErrorCode::InvalidBody, "polytope vertices must have the polytope dimension");
  Vector point;
  if (interior) {
    point = *interior;
  } else if (vertices.cols() > 0) {
    point = vertices.rowwise().mean();
  } else {
    point = Vector::Zero(n);
  }
  if (point.size() != n) throw Error(ErrorCode::InvalidBody, "interior point has the wrong dimension");
  const Vector slack = offsets - rows * point;
  if (!(slack.array() > 0).all())
    throw Error(interior ? ErrorCode::NotInterior : ErrorCode::InvalidBody,
                "polytope needs a strictly interior point (supply interior_point)");
  for (Eigen::Index j = 0; j < vertices.cols(); ++j) {
    const Vector excess = rows * vertices.col(j) - offsets;
    if ((excess.array() > Scalar(1e-9) * (1 + offsets.cwiseAbs().maxCoeff())).any())
      throw Error(ErrorCode::InvalidBody, "supplied polytope vertex violates a constraint");
  }
  // Certified bounding radius from the axis-aligned bounding box of K - point.
  Scalar radius_sq = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector axis = Vector::Unit(n, i);
    const auto hi = detail::maximize_linear<Scalar>(rows, slack, axis);
    const auto lo = detail::maximize_linear<Scalar>(rows, slack, (-axis).eval());
    if (!hi || !lo) throw Error(ErrorCode::Unbounded, "polytope is unbounded along coordinate " + std::to_string(i));
    const Scalar reach = std::max(*hi, *lo);
    radius_sq += reach * reach;
  }
  const Scalar radius = std::sqrt(radius_sq) * (1 + Scalar(1e-9));
  ConvexBody body(HPolytope<Scalar>{std::move(rows), std::move(offsets), std::move(vertices)}, std::move(point),
                  radius);
  body.validate();
  return body;
}

template <typename Scalar>
ConvexBody<Scalar> ConvexBody<Scalar>::ellipsoid(Matrix shape, Vector center) {
  if (shape.rows() != shape.cols() || shape.rows() != center.size())
    throw Error(ErrorCode::InvalidBody, "ellipsoid shape must be square and match the center");
  if (!shape.isApprox(shape.transpose())) throw Error(ErrorCode::InvalidBody, "ellipsoid shape must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(shape, Eigen::EigenvaluesOnly);
  const Scalar smallest = eig.eigenvalues().minCoeff();
  if (!(smallest > 0)) throw Error(smallest == 0 ? ErrorCode::Unbounded : ErrorCode::InvalidBody,
                                   "ellipsoid shape must be positive definite");
  const Scalar radius = 1 / std::sqrt(smallest);
  Vector interior = center;
  ConvexBody body(Ellipsoid<Scalar>{std::move(shape), std::move(center)}, std::move(interior), radius);
  body.validate();
  return body;
}

template <typename Scalar>
ConvexBody<Scalar> ConvexBody<Scalar>::translated(ConvexBody inner, Vector shift) {
  if (shift.size() != inner.dimension()) throw Error(ErrorCode::InvalidBody, "shift has the wrong dimension");
  Vector interior = inner.interior_point() + shift;
  const Scalar radius = inner.bounding_radius();
  ConvexBody body(Translated<Scalar>{std::make_shared<const ConvexBody>(std::move(inner)), std::move(shift)},
                  std::move(interior), radius);
  body.validate();
  return body;
}

template <typename Scalar>
ConvexBody<Scalar> ConvexBody<Scalar>::membership_oracle(std::function<bool(const Vector&)> contains_fn,
                                                         Vector interior, Scalar radius) {
  ConvexBody body(MembershipOracle<Scalar>{std::move(contains_fn)}, std::move(interior), radius);
  body.validate();
  return body;
}

}  // namespace gaussfit
