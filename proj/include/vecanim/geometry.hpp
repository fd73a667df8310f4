#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "vecanim/errors.hpp"

namespace vecanim {

template <typename Scalar>
using Point = Eigen::Matrix<Scalar, 2, 1>;
using Point2d = Point<double>;

template <typename Scalar>
using Rgba = Eigen::Matrix<Scalar, 4, 1>;
using Rgbad = Rgba<double>;

// Control points A, B, C, D stored as the rows of a 4x2 matrix, so that the
// split matrices act on the curve by plain left multiplication.
template <typename Scalar>
using ControlPoints = Eigen::Matrix<Scalar, 4, 2>;

template <typename Scalar>
struct CubicBezier {
  ControlPoints<Scalar> ctrl = ControlPoints<Scalar>::Zero();

  CubicBezier() = default;
  explicit CubicBezier(const ControlPoints<Scalar>& c) : ctrl(c) {}
  CubicBezier(const Point<Scalar>& a, const Point<Scalar>& b, const Point<Scalar>& c,
              const Point<Scalar>& d) {
    ctrl.row(0) = a.transpose();
    ctrl.row(1) = b.transpose();
    ctrl.row(2) = c.transpose();
    ctrl.row(3) = d.transpose();
  }

  Point<Scalar> point(int i) const { return ctrl.row(i).transpose(); }
  Point<Scalar> start() const { return point(0); }
  Point<Scalar> end() const { return point(3); }
};
using CubicBezierd = CubicBezier<double>;

// Bernstein weights ((1-t)^3, 3(1-t)^2 t, 3(1-t) t^2, t^3).
template <typename Scalar>
Eigen::Matrix<Scalar, 4, 1> bernstein(Scalar t) {
  const Scalar s = Scalar(1) - t;
  return {s * s * s, Scalar(3) * s * s * t, Scalar(3) * s * t * t, t * t * t};
}

// Weights of the derivative dB/dt with respect to each control point.
template <typename Scalar>
Eigen::Matrix<Scalar, 4, 1> bernstein_derivative(Scalar t) {
  const Scalar s = Scalar(1) - t;
  return {Scalar(-3) * s * s, Scalar(3) * s * s - Scalar(6) * s * t,
          Scalar(6) * s * t - Scalar(3) * t * t, Scalar(3) * t * t};
}

template <typename Scalar>
Point<Scalar> eval_cubic(const CubicBezier<Scalar>& curve, Scalar t) {
  if (!(t >= Scalar(0) && t <= Scalar(1))) {
    throw DomainError("eval_cubic: parameter t must lie in [0, 1]");
  }
  return (bernstein(t).transpose() * curve.ctrl).transpose();
}

template <typename Scalar>
Point<Scalar> eval_cubic_derivative(const CubicBezier<Scalar>& curve, Scalar t) {
  return (bernstein_derivative(t).transpose() * curve.ctrl).transpose();
}

// Split matrices (M0, M1): left piece = M0 * ctrl, right piece = M1 * ctrl.
template <typename Scalar>
std::pair<Eigen::Matrix<Scalar, 4, 4>, Eigen::Matrix<Scalar, 4, 4>> split_matrices(Scalar t) {
  const Scalar s = Scalar(1) - t;
  Eigen::Matrix<Scalar, 4, 4> m0;
  m0 << 1, 0, 0, 0,
        s, t, 0, 0,
        s * s, 2 * t * s, t * t, 0,
        s * s * s, 3 * t * s * s, 3 * t * t * s, t * t * t;
  Eigen::Matrix<Scalar, 4, 4> m1;
  m1 << s * s * s, 3 * t * s * s, 3 * t * t * s, t * t * t,
        0, s * s, 2 * t * s, t * t,
        0, 0, s, t,
        0, 0, 0, 1;
  return {m0, m1};
}

template <typename Scalar>
std::pair<CubicBezier<Scalar>, CubicBezier<Scalar>> split_cubic(const CubicBezier<Scalar>& curve,
                                                                Scalar t) {
  if (!(t > Scalar(0) && t < Scalar(1))) {
    throw DomainError("split_cubic: parameter t must lie strictly inside (0, 1)");
  }
  const auto [m0, m1] = split_matrices(t);
  CubicBezier<Scalar> left(ControlPoints<Scalar>(m0 * curve.ctrl));
  CubicBezier<Scalar> right(ControlPoints<Scalar>(m1 * curve.ctrl));
  // Both rows are the same Bernstein combination; make the joint bit-equal.
  right.ctrl.row(0) = left.ctrl.row(3);
  return {left, right};
}

// Splits at every parameter in `ts` (sorted ascending, strictly inside (0,1)).
// Later parameters are remapped onto the remaining right piece.
template <typename Scalar>
std::vector<CubicBezier<Scalar>> split_cubic_at(const CubicBezier<Scalar>& curve,
                                                std::span<const Scalar> ts) {
  std::vector<CubicBezier<Scalar>> pieces;
  pieces.reserve(ts.size() + 1);
  CubicBezier<Scalar> rest = curve;
  Scalar consumed = 0;
  for (const Scalar t : ts) {
    const Scalar local = (t - consumed) / (Scalar(1) - consumed);
    auto [left, right] = split_cubic(rest, local);
    pieces.push_back(left);
    rest = right;
    consumed = t;
  }
  pieces.push_back(rest);
  return pieces;
}

// Real roots of a t^3 + b t^2 + c t + d. Degenerate leading coefficients fall
// back to the quadratic / linear case. Returns an empty list for the zero
// polynomial. Each closed-form root is polished with two Newton steps.
template <typename Scalar>
std::vector<Scalar> solve_cubic(Scalar a, Scalar b, Scalar c, Scalar d) {
  using std::abs;
  using std::acos;
  using std::cbrt;
  using std::cos;
  using std::sqrt;
  std::vector<Scalar> roots;
  const Scalar scale = std::max({abs(a), abs(b), abs(c), abs(d)});
  if (scale == Scalar(0)) return roots;
  const Scalar eps = Scalar(1e-12) * scale;

  if (abs(a) <= eps) {
    if (abs(b) <= eps) {
      if (abs(c) > eps) roots.push_back(-d / c);
    } else {
      const Scalar disc = c * c - Scalar(4) * b * d;
      if (disc >= Scalar(0)) {
        // Numerically stable quadratic formula.
        const Scalar q = Scalar(-0.5) * (c + std::copysign(sqrt(disc), c));
        if (q != Scalar(0)) {
          roots.push_back(q / b);
          roots.push_back(d / q);
        } else {
          roots.push_back(Scalar(0));
        }
      }
    }
  } else {
    const Scalar bn = b / a, cn = c / a, dn = d / a;
    const Scalar shift = bn / Scalar(3);
    const Scalar p = cn - bn * bn / Scalar(3);
    const Scalar q = Scalar(2) * bn * bn * bn / Scalar(27) - bn * cn / Scalar(3) + dn;
    const Scalar disc = q * q / Scalar(4) + p * p * p / Scalar(27);
    if (abs(p) <= Scalar(1e-14) * std::max(Scalar(1), bn * bn)) {
      roots.push_back(cbrt(-q) - shift);
    } else if (disc > Scalar(0)) {
      const Scalar sd = sqrt(disc);
      roots.push_back(cbrt(-q / Scalar(2) + sd) + cbrt(-q / Scalar(2) - sd) - shift);
    } else {
      // Three real roots: trigonometric branch.
      const Scalar m = Scalar(2) * sqrt(-p / Scalar(3));
      Scalar arg = Scalar(3) * q / (p * m);
      arg = std::clamp(arg, Scalar(-1), Scalar(1));
      const Scalar theta = acos(arg) / Scalar(3);
      for (int k = 0; k < 3; ++k) {
        roots.push_back(m * cos(theta - Scalar(2) * std::numbers::pi_v<Scalar> * k / Scalar(3)) -
                        shift);
      }
    }
  }

  for (Scalar& r : roots) {
    for (int it = 0; it < 2; ++it) {
      const Scalar f = ((a * r + b) * r + c) * r + d;
      const Scalar df = (Scalar(3) * a * r + Scalar(2) * b) * r + c;
      if (df == Scalar(0)) break;
      const Scalar next = r - f / df;
      if (!std::isfinite(next)) break;
      r = next;
    }
  }
  return roots;
}

// Parameters t in (0,1) at which the curve meets the closed segment [a, b].
// Sorted, deduplicated within 1e-9; values within 1e-9 of 0 or 1 are dropped.
template <typename Scalar>
std::vector<Scalar> curve_segment_intersections(const CubicBezier<Scalar>& curve,
                                                const Point<Scalar>& seg_a,
                                                const Point<Scalar>& seg_b) {
  const Point<Scalar> dir = seg_b - seg_a;
  const Scalar len2 = dir.squaredNorm();
  if (!(len2 > Scalar(0))) {
    throw DomainError("curve_segment_intersections: degenerate segment");
  }
  const Point<Scalar> normal(-dir.y(), dir.x());

  // Power-basis coefficients of n . (B(t) - a).
  const ControlPoints<Scalar>& p = curve.ctrl;
  const Eigen::Matrix<Scalar, 1, 2> p0 = p.row(0) - seg_a.transpose();
  const Eigen::Matrix<Scalar, 1, 2> k3 = -p.row(0) + 3 * p.row(1) - 3 * p.row(2) + p.row(3);
  const Eigen::Matrix<Scalar, 1, 2> k2 = 3 * p.row(0) - 6 * p.row(1) + 3 * p.row(2);
  const Eigen::Matrix<Scalar, 1, 2> k1 = -3 * p.row(0) + 3 * p.row(1);
  const Scalar a = k3.dot(normal.transpose());
  const Scalar b = k2.dot(normal.transpose());
  const Scalar c = k1.dot(normal.transpose());
  const Scalar d = p0.dot(normal.transpose());

  constexpr Scalar kEndTol = Scalar(1e-9);
  std::vector<Scalar> hits;
  for (const Scalar t : solve_cubic(a, b, c, d)) {
    if (!(t > kEndTol && t < Scalar(1) - kEndTol)) continue;
    const Point<Scalar> q = eval_cubic(curve, t);
    const Scalar s = dir.dot(q - seg_a) / len2;
    if (s < -kEndTol || s > Scalar(1) + kEndTol) continue;
    hits.push_back(t);
  }
  std::sort(hits.begin(), hits.end());
  std::vector<Scalar> unique;
  for (const Scalar t : hits) {
    if (unique.empty() || t - unique.back() > kEndTol) unique.push_back(t);
  }
  return unique;
}

// Affine map (x, y) -> (a x + b y + tx, c x + d y + ty).
template <typename Scalar>
using AffineTransform = Eigen::Transform<Scalar, 2, Eigen::AffineCompact>;
using AffineTransformd = AffineTransform<double>;

// Vertices as rows.
template <typename Scalar>
using TrianglePoints = Eigen::Matrix<Scalar, 3, 2>;

template <typename Scalar>
Scalar signed_triangle_area(const Point<Scalar>& a, const Point<Scalar>& b,
                            const Point<Scalar>& c) {
  return Scalar(0.5) * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

template <typename Scalar>
Scalar signed_triangle_area(const TrianglePoints<Scalar>& tri) {
  return signed_triangle_area<Scalar>(tri.row(0).transpose(), tri.row(1).transpose(),
                                      tri.row(2).transpose());
}

// Exact solve of the six equations mapping each src vertex onto its dst vertex.
template <typename Scalar>
AffineTransform<Scalar> affine_from_triangles(const TrianglePoints<Scalar>& src,
                                              const TrianglePoints<Scalar>& dst) {
  using std::abs;
  if (!(abs(signed_triangle_area(src)) > Scalar(1e-12))) {
    throw SingularError("affine_from_triangles: source triangle is degenerate");
  }
  Eigen::Matrix<Scalar, 3, 3> lhs;
  lhs << src, Eigen::Matrix<Scalar, 3, 1>::Ones();
  const Eigen::Matrix<Scalar, 3, 2> sol = lhs.partialPivLu().solve(dst);
  AffineTransform<Scalar> xf;
  xf.linear() = sol.topRows(2).transpose();
  xf.translation() = sol.row(2).transpose();
  return xf;
}

template <typename Scalar>
CubicBezier<Scalar> transform_cubic(const AffineTransform<Scalar>& xf,
                                    const CubicBezier<Scalar>& curve) {
  CubicBezier<Scalar> out;
  for (int i = 0; i < 4; ++i) out.ctrl.row(i) = (xf * curve.point(i)).transpose();
  return out;
}

// A closed loop of cubic segments with one fill color. Consecutive segments
// share their joint, so the points are stored once: rows 3k, 3k+1, 3k+2 hold
// A, B, C of segment k and its D is row 3(k+1) mod 3L.
template <typename Scalar>
class ClosedPath {
 public:
  using PointList = Eigen::Matrix<Scalar, Eigen::Dynamic, 2>;

  ClosedPath() = default;
  ClosedPath(PointList points, const Rgba<Scalar>& fill) : points_(std::move(points)), fill_(fill) {
    if (points_.rows() < 3 || points_.rows() % 3 != 0) {
      throw DomainError("ClosedPath: point count must be a positive multiple of 3");
    }
  }

  // Builds the path from explicit segments, checking closure within `tol`.
  static ClosedPath from_segments(std::span<const CubicBezier<Scalar>> segments,
                                  const Rgba<Scalar>& fill, Scalar tol = Scalar(1e-9)) {
    if (segments.empty()) throw DomainError("ClosedPath: need at least one segment");
    const auto n = static_cast<Eigen::Index>(segments.size());
    PointList pts(3 * n, 2);
    for (Eigen::Index k = 0; k < n; ++k) {
      const auto& seg = segments[static_cast<std::size_t>(k)];
      const auto& next = segments[static_cast<std::size_t>((k + 1) % n)];
      if ((seg.end() - next.start()).norm() > tol) {
        throw DomainError("ClosedPath: segments do not form a closed loop");
      }
      pts.row(3 * k) = seg.ctrl.row(0);
      pts.row(3 * k + 1) = seg.ctrl.row(1);
      pts.row(3 * k + 2) = seg.ctrl.row(2);
    }
    return ClosedPath(std::move(pts), fill);
  }

  int segment_count() const { return static_cast<int>(points_.rows() / 3); }

  CubicBezier<Scalar> segment(int k) const {
    const Eigen::Index n = points_.rows();
    CubicBezier<Scalar> c;
    c.ctrl.row(0) = points_.row(3 * k);
    c.ctrl.row(1) = points_.row(3 * k + 1);
    c.ctrl.row(2) = points_.row(3 * k + 2);
    c.ctrl.row(3) = points_.row((3 * k + 3) % n);
    return c;
  }

  std::vector<CubicBezier<Scalar>> segments() const {
    std::vector<CubicBezier<Scalar>> out;
    out.reserve(static_cast<std::size_t>(segment_count()));
    for (int k = 0; k < segment_count(); ++k) out.push_back(segment(k));
    return out;
  }

  // Row index of control point `m` (0..3) of segment `k`.
  Eigen::Index point_index(int k, int m) const {
    return (3 * static_cast<Eigen::Index>(k) + m) % points_.rows();
  }

  const PointList& points() const { return points_; }
  PointList& points() { return points_; }
  const Rgba<Scalar>& fill() const { return fill_; }
  Rgba<Scalar>& fill() { return fill_; }

 private:
  PointList points_{PointList::Zero(3, 2)};
  Rgba<Scalar> fill_{Rgba<Scalar>(0, 0, 0, 1)};
};
using ClosedPathd = ClosedPath<double>;

// Circle of n cubic arcs; handle length (4/3) tan(pi / (2n)) r.
template <typename Scalar>
ClosedPath<Scalar> circle_path(const Point<Scalar>& center, Scalar radius, int n_segments,
                               const Rgba<Scalar>& fill) {
  if (!(radius > Scalar(0))) throw DomainError("circle_path: radius must be positive");
  if (n_segments < 4) throw DomainError("circle_path: need at least 4 segments");
  const Scalar pi = std::numbers::pi_v<Scalar>;
  const Scalar handle = Scalar(4) / Scalar(3) * std::tan(pi / (Scalar(2) * n_segments)) * radius;
  typename ClosedPath<Scalar>::PointList pts(3 * n_segments, 2);
  for (int k = 0; k < n_segments; ++k) {
    const Scalar a0 = Scalar(2) * pi * k / n_segments;
    const Scalar a1 = Scalar(2) * pi * (k + 1) / n_segments;
    const Point<Scalar> p0 = center + radius * Point<Scalar>(std::cos(a0), std::sin(a0));
    const Point<Scalar> p3 = center + radius * Point<Scalar>(std::cos(a1), std::sin(a1));
    const Point<Scalar> t0(-std::sin(a0), std::cos(a0));
    const Point<Scalar> t1(-std::sin(a1), std::cos(a1));
    pts.row(3 * k) = p0.transpose();
    pts.row(3 * k + 1) = (p0 + handle * t0).transpose();
    pts.row(3 * k + 2) = (p3 - handle * t1).transpose();
  }
  return ClosedPath<Scalar>(std::move(pts), fill);
}

// ---------------------------------------------------------------------------
// Triangulations (double precision only).

struct Triangulation {
  std::vector<Point2d> vertices;
  // Counter-clockwise (positive signed area) vertex index triples.
  std::vector<std::array<int, 3>> triangles;

  TrianglePoints<double> triangle_points(std::size_t i) const;
  // Unique undirected edges (i < j), sorted.
  std::vector<std::array<int, 2>> edges() const;
};

// Bowyer-Watson Delaunay triangulation. Co-circular configurations are
// resolved so that the diagonal touching the lowest vertex index wins.
Triangulation delaunay(std::span<const Point2d> points);

// Lowest-index triangle whose barycentric coordinates are all >= -1e-9.
std::optional<int> locate_point(const Triangulation& tri, const Point2d& p);

// Triangle whose centroid is closest to p.
int nearest_triangle(const Triangulation& tri, const Point2d& p);

}  // namespace vecanim
