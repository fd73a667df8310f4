#include "vecanim/diffrast.hpp"

#include "vecanim/random.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace vecanim {

void RenderConfig::validate() const {
  if (width <= 0 || height <= 0) throw DomainError("render: width and height must be positive");
  if (aa_samples < 1) throw DomainError("render: aa_samples must be >= 1");
  if (boundary_samples < 1) throw DomainError("render: boundary_samples must be >= 1");
}

GradientSet GradientSet::zeros_like(std::span<const ClosedPathd> paths) {
  GradientSet g;
  g.paths.reserve(paths.size());
  for (const auto& p : paths) {
    g.paths.push_back({ClosedPathd::PointList::Zero(p.points().rows(), 2), Rgbad::Zero()});
  }
  return g;
}

bool GradientSet::all_finite() const {
  return std::all_of(paths.begin(), paths.end(), [](const PathGradient& p) {
    return p.points.allFinite() && p.fill.allFinite();
  });
}

GradientSet& GradientSet::add_scaled(const GradientSet& other, double scale) {
  if (other.paths.size() != paths.size()) throw DomainError("GradientSet: shape mismatch");
  for (std::size_t i = 0; i < paths.size(); ++i) {
    paths[i].points += scale * other.paths[i].points;
    paths[i].fill += scale * other.paths[i].fill;
  }
  return *this;
}

namespace {

void flatten_cubic(const CubicBezierd& c, double tol, int depth, std::vector<Point2d>& out) {
  const Point2d a = c.point(0), d = c.point(3);
  const Point2d chord = d - a;
  const double len = chord.norm();
  double dev;
  if (len > 1e-12) {
    const auto dist = [&](const Point2d& p) {
      return std::abs(chord.x() * (p.y() - a.y()) - chord.y() * (p.x() - a.x())) / len;
    };
    dev = std::max(dist(c.point(1)), dist(c.point(2)));
  } else {
    dev = std::max((c.point(1) - a).norm(), (c.point(2) - a).norm());
  }
  if (dev <= tol || depth >= 16) {
    out.push_back(d);
    return;
  }
  const auto [l, r] = split_cubic(c, 0.5);
  flatten_cubic(l, tol, depth + 1, out);
  flatten_cubic(r, tol, depth + 1, out);
}

// Covered sample columns [c0, c1) per sample row of one path.
struct PathSpans {
  int row_begin = 0;
  int row_end = 0;
  std::vector<int> offsets;  // row_end - row_begin + 1 entries into spans
  std::vector<int> spans;    // flattened [c0, c1) pairs

  bool has_row(int r) const { return r >= row_begin && r < row_end; }

  std::span<const int> row(int r) const {
    const auto i = static_cast<std::size_t>(r - row_begin);
    return {spans.data() + offsets[i], spans.data() + offsets[i + 1]};
  }

  bool contains(int r, int col) const {
    if (!has_row(r)) return false;
    const auto s = row(r);
    // Pairs are sorted and disjoint: find the last start <= col.
    std::size_t lo = 0, hi = s.size() / 2;
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (s[2 * mid] <= col) {
        lo = mid + 1;
      } else {
        hi = mid;
      }
    }
    return lo > 0 && col < s[2 * (lo - 1) + 1];
  }
};

struct Crossing {
  int row;
  double x;
  int dir;
};

// y(t) in power basis, with its derivative.
struct CubicPoly {
  double c3, c2, c1, c0;
  double operator()(double t) const { return ((c3 * t + c2) * t + c1) * t + c0; }
  double slope(double t) const { return (3 * c3 * t + 2 * c2) * t + c1; }
};

CubicPoly power_basis(double p0, double p1, double p2, double p3) {
  return {-p0 + 3 * p1 - 3 * p2 + p3, 3 * p0 - 6 * p1 + 3 * p2, 3 * (p1 - p0), p0};
}

CubicPoly power_basis(const CubicBezierd& c, int axis) {
  return power_basis(c.ctrl(0, axis), c.ctrl(1, axis), c.ctrl(2, axis), c.ctrl(3, axis));
}

// Parameters in (0, 1) where f is stationary, bracketed by 0 and 1.
std::vector<double> monotone_cuts(const CubicPoly& f) {
  std::vector<double> cuts = {0.0};
  for (const double t : solve_cubic(0.0, 3 * f.c3, 2 * f.c2, f.c1)) {
    if (t > 0 && t < 1) cuts.push_back(t);
  }
  std::sort(cuts.begin() + 1, cuts.end());
  cuts.push_back(1.0);
  return cuts;
}

// Root of f - target on [lo, hi], where f is monotone and brackets the target.
double monotone_root(const CubicPoly& f, double target, double lo, double hi) {
  double flo = f(lo) - target;
  double t = 0.5 * (lo + hi);
  for (int it = 0; it < 100; ++it) {
    const double ft = f(t) - target;
    if (ft == 0) return t;
    if ((ft < 0) == (flo < 0)) {
      lo = t;
      flo = ft;
    } else {
      hi = t;
    }
    if (hi - lo <= 1e-15) break;
    const double d = f.slope(t);
    double next = d != 0 ? t - ft / d : lo - 1;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - t) <= 1e-16) return next;
    t = next;
  }
  return 0.5 * (lo + hi);
}

// Crossings of the sample-row centers with the exact curves, found on the
// y-monotone pieces of each cubic. Row r counts a piece when its y range
// [y0, y1) contains the row center, so joints are never counted twice.
PathSpans scan_path(const ClosedPathd& path, int aa, int sample_cols, int sample_rows) {
  PathSpans out;
  std::vector<Crossing> xs;
  const double scale = aa;
  int rmin = sample_rows, rmax = 0;
  for (int k = 0; k < path.segment_count(); ++k) {
    const CubicBezierd seg = path.segment(k);
    const CubicPoly fx = power_basis(seg, 0), fy = power_basis(seg, 1);
    const std::vector<double> cuts = monotone_cuts(fy);
    for (std::size_t piece = 0; piece + 1 < cuts.size(); ++piece) {
      const double ta = cuts[piece], tb = cuts[piece + 1];
      const double ya = piece == 0 ? seg.ctrl(0, 1) : fy(ta);
      const double yb = piece + 2 == cuts.size() ? seg.ctrl(3, 1) : fy(tb);
      if (ya == yb) continue;
      const double y0 = std::min(ya, yb) * scale, y1 = std::max(ya, yb) * scale;
      const int r0 = std::max(0, static_cast<int>(std::ceil(y0 - 0.5)));
      const int r1 = std::min(sample_rows, static_cast<int>(std::ceil(y1 - 0.5)));
      if (r1 <= r0) continue;
      const int dir = yb > ya ? 1 : -1;
      for (int r = r0; r < r1; ++r) {
        const double t = monotone_root(fy, (r + 0.5) / scale, ta, tb);
        xs.push_back({r, fx(t), dir});
      }
      rmin = std::min(rmin, r0);
      rmax = std::max(rmax, r1);
    }
  }
  if (xs.empty()) return out;
  std::sort(xs.begin(), xs.end(), [](const Crossing& a, const Crossing& b) {
    return a.row != b.row ? a.row < b.row : a.x < b.x;
  });
  out.row_begin = rmin;
  out.row_end = rmax;
  out.offsets.assign(static_cast<std::size_t>(rmax - rmin + 1), 0);
  const auto to_col = [&](double x) {
    const double c = std::ceil(x * scale - 0.5);
    return static_cast<int>(std::clamp(c, 0.0, double(sample_cols)));
  };
  std::size_t i = 0;
  for (int r = rmin; r < rmax; ++r) {
    out.offsets[static_cast<std::size_t>(r - rmin)] = static_cast<int>(out.spans.size());
    int winding = 0;
    double start = 0;
    for (; i < xs.size() && xs[i].row == r; ++i) {
      const int before = winding;
      winding += xs[i].dir;
      if (before == 0 && winding != 0) {
        start = xs[i].x;
      } else if (before != 0 && winding == 0) {
        const int c0 = to_col(start), c1 = to_col(xs[i].x);
        if (c1 <= c0) continue;
        if (!out.spans.empty() &&
            static_cast<int>(out.spans.size()) > out.offsets[static_cast<std::size_t>(r - rmin)] &&
            out.spans.back() == c0) {
          out.spans.back() = c1;
        } else {
          out.spans.push_back(c0);
          out.spans.push_back(c1);
        }
      }
    }
  }
  out.offsets.back() = static_cast<int>(out.spans.size());
  return out;
}

// Winding number of the path around q, from a ray cast along the unit
// direction u. Crossings use the same half-open rule as the scanlines.
int winding_along(const ClosedPathd& path, const Point2d& q, const Point2d& u) {
  const Point2d v(-u.y(), u.x());
  int w = 0;
  for (int k = 0; k < path.segment_count(); ++k) {
    const CubicBezierd seg = path.segment(k);
    Eigen::Vector4d along, side;
    for (int m = 0; m < 4; ++m) {
      const Point2d rel = seg.ctrl.row(m).transpose() - q;
      along[m] = rel.dot(u);
      side[m] = rel.dot(v);
    }
    if (along.maxCoeff() <= 0 || side.minCoeff() > 0 || side.maxCoeff() < 0) continue;
    const CubicPoly fa = power_basis(along[0], along[1], along[2], along[3]);
    const CubicPoly fs = power_basis(side[0], side[1], side[2], side[3]);
    const std::vector<double> cuts = monotone_cuts(fs);
    for (std::size_t piece = 0; piece + 1 < cuts.size(); ++piece) {
      const double ta = cuts[piece], tb = cuts[piece + 1];
      const double sa = piece == 0 ? side[0] : fs(ta);
      const double sb = piece + 2 == cuts.size() ? side[3] : fs(tb);
      if (!(std::min(sa, sb) <= 0 && 0 < std::max(sa, sb))) continue;
      if (fa(monotone_root(fs, 0.0, ta, tb)) > 0) w += sb > sa ? 1 : -1;
    }
  }
  return w;
}

// Rasterized scene: spans per path and, per pixel row, the paths touching it.
struct Scene {
  int aa = 1;
  int sample_cols = 0;
  int sample_rows = 0;
  std::vector<PathSpans> spans;
  std::vector<std::vector<int>> row_paths;  // per pixel row, ascending path index
  std::vector<Eigen::Vector3d> fill_rgb;
  std::vector<double> alpha;
};

Scene build_scene(std::span<const ClosedPathd> paths, const RenderConfig& cfg) {
  Scene s;
  s.aa = cfg.aa_samples;
  s.sample_cols = cfg.width * cfg.aa_samples;
  s.sample_rows = cfg.height * cfg.aa_samples;
  s.spans.resize(paths.size());
  s.fill_rgb.resize(paths.size());
  s.alpha.resize(paths.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(paths.size()); ++i) {
    s.spans[i] = scan_path(paths[i], s.aa, s.sample_cols, s.sample_rows);
  }
  s.row_paths.resize(static_cast<std::size_t>(cfg.height));
  for (std::size_t i = 0; i < paths.size(); ++i) {
    s.fill_rgb[i] = paths[i].fill().head<3>();
    s.alpha[i] = paths[i].fill()[3];
    const PathSpans& sp = s.spans[i];
    if (sp.row_end <= sp.row_begin) continue;
    const int py0 = sp.row_begin / s.aa, py1 = (sp.row_end - 1) / s.aa;
    for (int py = py0; py <= py1; ++py) s.row_paths[static_cast<std::size_t>(py)].push_back(int(i));
  }
  return s;
}

struct Event {
  int col;
  int path;
  bool enter;
};

// Visits maximal column intervals of one sample row with a constant set of
// covering paths (ascending), including uncovered background intervals.
template <typename Visitor>
void sweep_row(const Scene& s, int row, const std::vector<int>& candidates,
               std::vector<Event>& events, std::vector<int>& active, Visitor&& visit) {
  events.clear();
  for (const int i : candidates) {
    const PathSpans& sp = s.spans[static_cast<std::size_t>(i)];
    if (!sp.has_row(row)) continue;
    const auto r = sp.row(row);
    for (std::size_t k = 0; k < r.size(); k += 2) {
      events.push_back({r[k], i, true});
      events.push_back({r[k + 1], i, false});
    }
  }
  std::sort(events.begin(), events.end(),
            [](const Event& a, const Event& b) { return a.col < b.col; });
  active.clear();
  int cursor = 0;
  std::size_t e = 0;
  while (cursor < s.sample_cols) {
    for (; e < events.size() && events[e].col == cursor; ++e) {
      const auto it = std::lower_bound(active.begin(), active.end(), events[e].path);
      if (events[e].enter) {
        active.insert(it, events[e].path);
      } else if (it != active.end() && *it == events[e].path) {
        active.erase(it);
      }
    }
    const int next = e < events.size() ? std::min(events[e].col, s.sample_cols) : s.sample_cols;
    if (next > cursor) visit(cursor, next, active);
    cursor = next;
  }
}

Eigen::Vector3d composite(const Scene& s, const std::vector<int>& active,
                          const Eigen::Vector3d& background) {
  Eigen::Vector3d color = background;
  for (const int i : active) {
    const double a = s.alpha[static_cast<std::size_t>(i)];
    color = a * s.fill_rgb[static_cast<std::size_t>(i)] + (1.0 - a) * color;
  }
  return color;
}

// Calls f(px, count) for each pixel overlapping sample columns [c0, c1).
template <typename F>
void for_each_pixel(int c0, int c1, int aa, F&& f) {
  for (int px = c0 / aa; px * aa < c1; ++px) {
    const int count = std::min(c1, (px + 1) * aa) - std::max(c0, px * aa);
    f(px, count);
  }
}

RasterImage render_scene(const Scene& s, const RenderConfig& cfg) {
  RasterImage img(cfg.width, cfg.height, 3);
  const double norm = 1.0 / (double(s.aa) * s.aa);
#pragma omp parallel for schedule(dynamic, 4)
  for (int py = 0; py < cfg.height; ++py) {
    std::vector<Event> events;
    std::vector<int> active;
    std::vector<Eigen::Vector3d> accum(static_cast<std::size_t>(cfg.width),
                                       Eigen::Vector3d::Zero());
    const auto& candidates = s.row_paths[static_cast<std::size_t>(py)];
    for (int sr = py * s.aa; sr < (py + 1) * s.aa; ++sr) {
      sweep_row(s, sr, candidates, events, active, [&](int c0, int c1, const std::vector<int>& act) {
        const Eigen::Vector3d color = composite(s, act, cfg.background);
        for_each_pixel(c0, c1, s.aa, [&](int px, int count) {
          accum[static_cast<std::size_t>(px)] += count * color;
        });
      });
    }
    for (int px = 0; px < cfg.width; ++px) img.set_rgb(px, py, norm * accum[static_cast<std::size_t>(px)]);
  }
  return img;
}

}  // namespace

std::vector<Point2d> flatten_path(const ClosedPathd& path, double flatness) {
  std::vector<Point2d> out;
  out.reserve(static_cast<std::size_t>(path.segment_count()) * 8);
  for (int k = 0; k < path.segment_count(); ++k) flatten_cubic(path.segment(k), flatness, 0, out);
  return out;
}

double signed_path_area(const ClosedPathd& path, double flatness) {
  const auto poly = flatten_path(path, flatness);
  double area = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point2d& p = poly[i];
    const Point2d& q = poly[(i + 1) % poly.size()];
    area += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * area;
}

RasterImage render(std::span<const ClosedPathd> paths, const RenderConfig& cfg) {
  cfg.validate();
  return render_scene(build_scene(paths, cfg), cfg);
}

Plane path_coverage(const ClosedPathd& path, const RenderConfig& cfg) {
  cfg.validate();
  const int aa = cfg.aa_samples;
  const PathSpans sp = scan_path(path, aa, cfg.width * aa, cfg.height * aa);
  Plane cov = Plane::Zero(cfg.height, cfg.width);
  for (int r = sp.row_begin; r < sp.row_end; ++r) {
    const auto row = sp.row(r);
    for (std::size_t k = 0; k < row.size(); k += 2) {
      for_each_pixel(row[k], row[k + 1], aa, [&](int px, int count) { cov(r / aa, px) += count; });
    }
  }
  return cov / (double(aa) * aa);
}

double masked_mse(const RasterImage& image, const RasterImage& target, const Mask* mask) {
  if (image.width() != target.width() || image.height() != target.height()) {
    throw DomainError("masked_mse: image dimensions differ");
  }
  Plane sq = Plane::Zero(image.height(), image.width());
  for (int c = 0; c < 3; ++c) sq += (image.plane(c) - target.rgb_only().plane(c)).square();
  if (!mask) return sq.sum() / (3.0 * double(image.pixel_count()));
  if (mask->width() != image.width() || mask->height() != image.height()) {
    throw DomainError("masked_mse: mask dimensions differ");
  }
  const double wsum = mask->values.sum();
  if (wsum <= 0) return 0.0;
  return (mask->values * sq).sum() / (3.0 * wsum);
}

RenderResult render_with_grad(std::span<const ClosedPathd> paths, const RenderConfig& cfg,
                              const RasterImage& target, const Mask* mask) {
  cfg.validate();
  if (target.width() != cfg.width || target.height() != cfg.height) {
    throw DomainError("render_with_grad: target dimensions differ from the render config");
  }
  if (mask && (mask->width() != cfg.width || mask->height() != cfg.height)) {
    throw DomainError("render_with_grad: mask dimensions differ from the render config");
  }
  const Scene scene = build_scene(paths, cfg);
  RenderResult res;
  res.image = render_scene(scene, cfg);
  res.loss = masked_mse(res.image, target, mask);
  res.grad = GradientSet::zeros_like(paths);

  // dL/dI per pixel.
  const double wsum = mask ? mask->values.sum() : double(target.pixel_count());
  if (wsum <= 0) return res;
  std::vector<Eigen::Vector3d> dimg(static_cast<std::size_t>(target.pixel_count()));
  for (int y = 0; y < cfg.height; ++y) {
    for (int x = 0; x < cfg.width; ++x) {
      const double w = mask ? mask->at(x, y) : 1.0;
      dimg[std::size_t(y) * cfg.width + x] =
          (2.0 * w / (3.0 * wsum)) * (res.image.rgb(x, y) - target.rgb(x, y));
    }
  }
  const auto dloss = [&](int px, int py) -> const Eigen::Vector3d& {
    return dimg[std::size_t(py) * cfg.width + px];
  };

  const std::size_t n_paths = paths.size();
  const double norm = 1.0 / (double(scene.aa) * scene.aa);

  // Fill gradients. Per pixel row partials keep the reduction order fixed.
  std::vector<Eigen::Matrix4Xd> partial(static_cast<std::size_t>(cfg.height));
#pragma omp parallel for schedule(dynamic, 4)
  for (int py = 0; py < cfg.height; ++py) {
    Eigen::Matrix4Xd& acc = partial[static_cast<std::size_t>(py)];
    acc = Eigen::Matrix4Xd::Zero(4, static_cast<Eigen::Index>(n_paths));
    std::vector<Event> events;
    std::vector<int> active;
    std::vector<Eigen::Vector3d> below;
    std::vector<double> above;
    const auto& candidates = scene.row_paths[static_cast<std::size_t>(py)];
    for (int sr = py * scene.aa; sr < (py + 1) * scene.aa; ++sr) {
      sweep_row(scene, sr, candidates, events, active,
                [&](int c0, int c1, const std::vector<int>& act) {
                  if (act.empty()) return;
                  Eigen::Vector3d g = Eigen::Vector3d::Zero();
                  for_each_pixel(c0, c1, scene.aa,
                                 [&](int px, int count) { g += count * dloss(px, py); });
                  g *= norm;
                  const std::size_t m = act.size();
                  below.resize(m);
                  above.resize(m);
                  Eigen::Vector3d color = cfg.background;
                  for (std::size_t k = 0; k < m; ++k) {
                    below[k] = color;
                    const auto i = static_cast<std::size_t>(act[k]);
                    color = scene.alpha[i] * scene.fill_rgb[i] + (1.0 - scene.alpha[i]) * color;
                  }
                  double t = 1.0;
                  for (std::size_t k = m; k-- > 0;) {
                    above[k] = t;
                    t *= 1.0 - scene.alpha[static_cast<std::size_t>(act[k])];
                  }
                  for (std::size_t k = 0; k < m; ++k) {
                    const auto i = static_cast<std::size_t>(act[k]);
                    acc.col(static_cast<Eigen::Index>(i)).head<3>() +=
                        (scene.alpha[i] * above[k]) * g;
                    acc(3, static_cast<Eigen::Index>(i)) +=
                        above[k] * (scene.fill_rgb[i] - below[k]).dot(g);
                  }
                });
    }
  }
  for (const auto& acc : partial) {
    for (std::size_t i = 0; i < n_paths; ++i) res.grad.paths[i].fill += acc.col(Eigen::Index(i));
  }

  // Control-point gradients by stratified boundary sampling.
  constexpr double kSideOffset = 1e-7;
  const int n_samples = cfg.boundary_samples;
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t pi = 0; pi < static_cast<std::ptrdiff_t>(n_paths); ++pi) {
    const auto i = static_cast<std::size_t>(pi);
    const ClosedPathd& path = paths[i];
    ClosedPathd::PointList& dpts = res.grad.paths[i].points;
    for (int k = 0; k < path.segment_count(); ++k) {
      const CubicBezierd seg = path.segment(k);
      std::mt19937_64 rng(mix_seed(cfg.rng_seed, (std::uint64_t(i) << 20) ^ std::uint64_t(k)));
      Eigen::Matrix<double, 4, 2> dseg = Eigen::Matrix<double, 4, 2>::Zero();
      for (int j = 0; j < n_samples; ++j) {
        const double t = (j + uniform01(rng)) / n_samples;
        const Point2d x = eval_cubic(seg, t);
        if (!(x.x() >= 0 && x.y() >= 0 && x.x() < cfg.width && x.y() < cfg.height)) continue;
        const int px = static_cast<int>(x.x()), py = static_cast<int>(x.y());
        const int col = std::min(static_cast<int>(x.x() * scene.aa), scene.sample_cols - 1);
        const int row = std::min(static_cast<int>(x.y() * scene.aa), scene.sample_rows - 1);
        // Color jump at x, respecting the compositing order of the other paths.
        Eigen::Vector3d under = cfg.background;
        double transmit = 1.0;
        for (const int j2 : scene.row_paths[static_cast<std::size_t>(py)]) {
          const auto o = static_cast<std::size_t>(j2);
          if (o == i || !scene.spans[o].contains(row, col)) continue;
          if (o < i) {
            under = scene.alpha[o] * scene.fill_rgb[o] + (1.0 - scene.alpha[o]) * under;
          } else {
            transmit *= 1.0 - scene.alpha[o];
          }
        }
        const Eigen::Vector3d jump = scene.alpha[i] * transmit * (scene.fill_rgb[i] - under);
        const double c = dloss(px, py).dot(jump);
        if (c == 0) continue;
        const Point2d d = eval_cubic_derivative(seg, t);
        const double speed = d.norm();
        if (speed == 0) continue;
        // Under the nonzero rule only edges between covered and uncovered
        // regions move coverage, so self-overlapping paths are handled too.
        const Point2d side(d.y() / speed, -d.x() / speed);
        const bool plus = winding_along(path, x + kSideOffset * side, side) != 0;
        const bool minus = winding_along(path, x - kSideOffset * side, -side) != 0;
        if (plus == minus) continue;
        // Outward normal scaled by |B'(t)|.
        const Eigen::RowVector2d normal = (minus ? speed : -speed) * side.transpose();
        dseg += (c * bernstein(t)) * normal;
      }
      dseg /= n_samples;
      for (int m = 0; m < 4; ++m) dpts.row(path.point_index(k, m)) += dseg.row(m);
    }
  }
  return res;
}

}  // namespace vecanim
