#include "vecanim/geometry.hpp"

#include <limits>
#include <map>
#include <set>

namespace vecanim {

TrianglePoints<double> Triangulation::triangle_points(std::size_t i) const {
  TrianglePoints<double> out;
  for (int k = 0; k < 3; ++k) {
    out.row(k) = vertices[static_cast<std::size_t>(triangles[i][k])].transpose();
  }
  return out;
}

std::vector<std::array<int, 2>> Triangulation::edges() const {
  std::set<std::array<int, 2>> unique;
  for (const auto& t : triangles) {
    for (int k = 0; k < 3; ++k) {
      const int a = t[k], b = t[(k + 1) % 3];
      unique.insert({std::min(a, b), std::max(a, b)});
    }
  }
  return {unique.begin(), unique.end()};
}

namespace {

struct Circle {
  Point2d center;
  double radius2;
};

Circle circumcircle(const Point2d& a, const Point2d& b, const Point2d& c) {
  const Point2d ab = b - a, ac = c - a;
  const double d = 2.0 * (ab.x() * ac.y() - ab.y() * ac.x());
  const double ab2 = ab.squaredNorm(), ac2 = ac.squaredNorm();
  const Point2d rel((ac.y() * ab2 - ab.y() * ac2) / d, (ab.x() * ac2 - ac.x() * ab2) / d);
  return {a + rel, rel.squaredNorm()};
}

// -1 strictly outside, 0 co-circular within tolerance, +1 strictly inside.
int circle_side(const Circle& c, const Point2d& p, double rel_tol) {
  const double r = std::sqrt(c.radius2);
  const double dist = (p - c.center).norm();
  const double tol = rel_tol * std::max(1.0, r);
  if (dist < r - tol) return 1;
  if (dist > r + tol) return -1;
  return 0;
}

std::array<int, 3> ccw(std::array<int, 3> t, const std::vector<Point2d>& v) {
  if (signed_triangle_area(v[t[0]], v[t[1]], v[t[2]]) < 0) std::swap(t[1], t[2]);
  return t;
}

// Rotate so the smallest index comes first while keeping orientation.
std::array<int, 3> canonical(std::array<int, 3> t) {
  while (t[0] > t[1] || t[0] > t[2]) t = {t[1], t[2], t[0]};
  return t;
}

// Lawson pass: enforce the empty-circle property and resolve co-circular
// quads towards the diagonal that contains the lowest vertex index.
void legalize(std::vector<std::array<int, 3>>& tris, const std::vector<Point2d>& v) {
  constexpr double kTol = 1e-9;
  const std::size_t max_passes = 8 * tris.size() + 16;
  for (std::size_t pass = 0; pass < max_passes; ++pass) {
    std::map<std::array<int, 2>, std::vector<std::pair<int, int>>> edge_owner;
    for (std::size_t i = 0; i < tris.size(); ++i) {
      for (int k = 0; k < 3; ++k) {
        const int a = tris[i][k], b = tris[i][(k + 1) % 3];
        edge_owner[{std::min(a, b), std::max(a, b)}].push_back(
            {static_cast<int>(i), tris[i][(k + 2) % 3]});
      }
    }
    bool flipped = false;
    for (const auto& [edge, owners] : edge_owner) {
      if (owners.size() != 2) continue;
      const int a = edge[0], b = edge[1];
      const int c = owners[0].second, d = owners[1].second;
      // Flipping requires a convex quad: c and d strictly on opposite sides of ab
      // and a, b strictly on opposite sides of cd.
      const double s_ab = signed_triangle_area(v[c], v[d], v[a]);
      const double s_bb = signed_triangle_area(v[c], v[d], v[b]);
      if (!(s_ab * s_bb < 0)) continue;
      const Circle circ = circumcircle(v[a], v[b], v[c]);
      const int side = circle_side(circ, v[d], kTol);
      bool flip = false;
      if (side > 0) {
        flip = true;
      } else if (side == 0) {
        flip = std::min(c, d) < std::min(a, b);
      }
      if (!flip) continue;
      const auto tc = ccw({c, d, a}, v);
      const auto td = ccw({d, c, b}, v);
      if (std::abs(signed_triangle_area(v[tc[0]], v[tc[1]], v[tc[2]])) <= 1e-12 ||
          std::abs(signed_triangle_area(v[td[0]], v[td[1]], v[td[2]])) <= 1e-12) {
        continue;
      }
      tris[static_cast<std::size_t>(owners[0].first)] = tc;
      tris[static_cast<std::size_t>(owners[1].first)] = td;
      flipped = true;
      break;  // ownership map is stale after a flip
    }
    if (!flipped) return;
  }
}

}  // namespace

Triangulation delaunay(std::span<const Point2d> points) {
  const std::size_t n = points.size();
  if (n < 3) throw DomainError("delaunay: need at least 3 points");

  Eigen::AlignedBox2d box;
  for (const auto& p : points) {
    if (!p.allFinite()) throw DomainError("delaunay: non-finite point");
    box.extend(p);
  }
  const double extent = std::max(box.sizes().maxCoeff(), 1e-300);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if ((points[i] - points[j]).norm() <= 1e-12 * std::max(1.0, extent)) {
        throw DomainError("delaunay: duplicate points " + std::to_string(i) + " and " +
                          std::to_string(j));
      }
    }
  }
  {
    double max_area = 0;
    for (std::size_t i = 1; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        max_area = std::max(max_area,
                            std::abs(signed_triangle_area(points[0], points[i], points[j])));
      }
    }
    if (max_area <= 1e-12 * std::max(1.0, extent * extent)) {
      throw DomainError("delaunay: points are collinear");
    }
  }

  std::vector<Point2d> v(points.begin(), points.end());
  const Point2d mid = box.center();
  const double m = 1e3 * extent;
  const int s0 = static_cast<int>(n), s1 = s0 + 1, s2 = s0 + 2;
  v.emplace_back(mid.x() - 2 * m, mid.y() - m);
  v.emplace_back(mid.x() + 2 * m, mid.y() - m);
  v.emplace_back(mid.x(), mid.y() + 2 * m);

  struct Tri {
    std::array<int, 3> idx;
    Circle circ;
  };
  auto make = [&](std::array<int, 3> t) {
    t = ccw(t, v);
    return Tri{t, circumcircle(v[t[0]], v[t[1]], v[t[2]])};
  };
  std::vector<Tri> tris{make({s0, s1, s2})};

  for (int pi = 0; pi < static_cast<int>(n); ++pi) {
    const Point2d& p = v[static_cast<std::size_t>(pi)];
    std::vector<Tri> keep;
    std::map<std::array<int, 2>, int> boundary;  // directed edge count
    for (const Tri& t : tris) {
      if (circle_side(t.circ, p, 1e-11) > 0) {
        for (int k = 0; k < 3; ++k) {
          const int a = t.idx[k], b = t.idx[(k + 1) % 3];
          const std::array<int, 2> key{std::min(a, b), std::max(a, b)};
          auto [it, inserted] = boundary.try_emplace(key, 0);
          it->second += 1;
        }
      } else {
        keep.push_back(t);
      }
    }
    if (boundary.empty()) {
      // p lies on circumcircles only (co-circular or duplicate); insert into the
      // containing triangle instead.
      for (std::size_t i = 0; i < keep.size(); ++i) {
        const auto& t = keep[i].idx;
        const double a0 = signed_triangle_area(v[t[0]], v[t[1]], p);
        const double a1 = signed_triangle_area(v[t[1]], v[t[2]], p);
        const double a2 = signed_triangle_area(v[t[2]], v[t[0]], p);
        if (a0 >= 0 && a1 >= 0 && a2 >= 0) {
          const Tri old = keep[i];
          keep.erase(keep.begin() + static_cast<std::ptrdiff_t>(i));
          for (int k = 0; k < 3; ++k) {
            const int a = old.idx[k], b = old.idx[(k + 1) % 3];
            boundary[{std::min(a, b), std::max(a, b)}] = 1;
          }
          break;
        }
      }
    }
    for (const auto& [edge, count] : boundary) {
      if (count != 1) continue;
      if (std::abs(signed_triangle_area(v[edge[0]], v[edge[1]], p)) <= 0) continue;
      keep.push_back(make({edge[0], edge[1], pi}));
    }
    tris = std::move(keep);
  }

  std::vector<std::array<int, 3>> real;
  for (const Tri& t : tris) {
    if (t.idx[0] >= s0 || t.idx[1] >= s0 || t.idx[2] >= s0) continue;
    if (std::abs(signed_triangle_area(v[t.idx[0]], v[t.idx[1]], v[t.idx[2]])) <= 1e-12) continue;
    real.push_back(t.idx);
  }
  v.resize(n);
  legalize(real, v);
  for (auto& t : real) t = canonical(ccw(t, v));
  std::sort(real.begin(), real.end());

  Triangulation out;
  out.vertices = std::move(v);
  out.triangles = std::move(real);
  return out;
}

std::optional<int> locate_point(const Triangulation& tri, const Point2d& p) {
  for (std::size_t i = 0; i < tri.triangles.size(); ++i) {
    const auto& t = tri.triangles[i];
    const Point2d& a = tri.vertices[static_cast<std::size_t>(t[0])];
    const Point2d& b = tri.vertices[static_cast<std::size_t>(t[1])];
    const Point2d& c = tri.vertices[static_cast<std::size_t>(t[2])];
    const double area = signed_triangle_area(a, b, c);
    if (area == 0) continue;
    const double l0 = signed_triangle_area(p, b, c) / area;
    const double l1 = signed_triangle_area(a, p, c) / area;
    const double l2 = 1.0 - l0 - l1;
    constexpr double kTol = -1e-9;
    if (l0 >= kTol && l1 >= kTol && l2 >= kTol) return static_cast<int>(i);
  }
  return std::nullopt;
}

int nearest_triangle(const Triangulation& tri, const Point2d& p) {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < tri.triangles.size(); ++i) {
    const Point2d centroid = tri.triangle_points(i).colwise().mean().transpose();
    const double d = (centroid - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

}  // namespace vecanim
