#include "vecanim/animate.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "vecanim/svg.hpp"

namespace vecanim {

using nlohmann::json;

namespace {

std::vector<Point2d> parse_points(const json& arr, const std::string& where) {
  if (!arr.is_array()) throw ParseError("landmarks: " + where + " is not an array");
  std::vector<Point2d> out;
  out.reserve(arr.size());
  for (const auto& p : arr) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      throw ParseError("landmarks: " + where + " has a malformed point");
    }
    const Point2d q(p[0].get<double>(), p[1].get<double>());
    if (!q.allFinite()) throw ParseError("landmarks: " + where + " has a non-finite point");
    out.push_back(q);
  }
  return out;
}

json points_json(const std::vector<Point2d>& pts) {
  json arr = json::array();
  for (const auto& p : pts) arr.push_back({p.x(), p.y()});
  return arr;
}

}  // namespace

LandmarkSequence parse_landmarks(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("landmarks: invalid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("rest")) throw ParseError("landmarks: missing \"rest\"");
  LandmarkSequence seq;
  if (j.contains("fps")) {
    if (!j["fps"].is_number() || !(j["fps"].get<double>() > 0)) {
      throw ParseError("landmarks: fps must be a positive number");
    }
    seq.fps = j["fps"].get<double>();
  }
  seq.rest = parse_points(j["rest"], "rest");
  if (seq.rest.empty()) throw ParseError("landmarks: rest pose is empty");
  if (j.contains("frames")) {
    const json& frames = j["frames"];
    if (!frames.is_array()) throw ParseError("landmarks: \"frames\" is not an array");
    for (std::size_t k = 0; k < frames.size(); ++k) {
      const std::string where = "frame " + std::to_string(k);
      auto pts = parse_points(frames[k], where);
      if (pts.size() != seq.rest.size()) {
        throw ParseError("landmarks: " + where + " has " + std::to_string(pts.size()) +
                         " points, expected " + std::to_string(seq.rest.size()));
      }
      seq.frames.push_back(std::move(pts));
    }
  }
  return seq;
}

std::string serialize_landmarks(const LandmarkSequence& seq) {
  json frames = json::array();
  for (const auto& f : seq.frames) frames.push_back(points_json(f));
  const json j = {{"fps", seq.fps}, {"rest", points_json(seq.rest)}, {"frames", frames}};
  return j.dump(1);
}

LandmarkSequence load_landmarks(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read landmarks '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_landmarks(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void save_landmarks(const LandmarkSequence& seq, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write landmarks '" + path.string() + "'");
  out << serialize_landmarks(seq) << '\n';
  if (!out) throw IoError("failed writing landmarks '" + path.string() + "'");
}

void check_landmarks_in_frame(const LandmarkSequence& seq, int width, int height) {
  const double mx = 0.25 * width, my = 0.25 * height;
  const auto check = [&](const std::vector<Point2d>& pts, const std::string& where) {
    for (const auto& p : pts) {
      if (p.x() < -mx || p.x() > width + mx || p.y() < -my || p.y() > height + my) {
        throw ParseError("landmarks: " + where + " has a point outside the image box");
      }
    }
  };
  check(seq.rest, "rest");
  for (std::size_t k = 0; k < seq.frames.size(); ++k) {
    check(seq.frames[k], "frame " + std::to_string(k));
  }
}

std::vector<Point2d> border_points(int width, int height) {
  const double w = width, h = height;
  return {{0, 0}, {w / 2, 0}, {w, 0}, {w, h / 2}, {w, h}, {w / 2, h}, {0, h}, {0, h / 2}};
}

namespace {

ClosedPathd split_path(const ClosedPathd& path, const std::vector<std::array<Point2d, 2>>& edges) {
  std::vector<CubicBezierd> pieces;
  for (const CubicBezierd& seg : path.segments()) {
    const Eigen::RowVector2d lo = seg.ctrl.colwise().minCoeff();
    const Eigen::RowVector2d hi = seg.ctrl.colwise().maxCoeff();
    std::vector<double> ts;
    for (const auto& e : edges) {
      if (std::max(e[0].x(), e[1].x()) < lo.x() || std::min(e[0].x(), e[1].x()) > hi.x() ||
          std::max(e[0].y(), e[1].y()) < lo.y() || std::min(e[0].y(), e[1].y()) > hi.y()) {
        continue;
      }
      const auto hits = curve_segment_intersections(seg, e[0], e[1]);
      ts.insert(ts.end(), hits.begin(), hits.end());
    }
    std::sort(ts.begin(), ts.end());
    std::vector<double> unique;
    for (const double t : ts) {
      if (unique.empty() || t - unique.back() > 1e-9) unique.push_back(t);
    }
    const auto split = split_cubic_at<double>(seg, unique);
    pieces.insert(pieces.end(), split.begin(), split.end());
  }
  return ClosedPathd::from_segments(pieces, path.fill());
}

}  // namespace

SvgDocument segment_paths(const SvgDocument& doc, const Triangulation& tri) {
  std::vector<std::array<Point2d, 2>> edges;
  for (const auto& e : tri.edges()) {
    edges.push_back({tri.vertices[static_cast<std::size_t>(e[0])],
                     tri.vertices[static_cast<std::size_t>(e[1])]});
  }
  SvgDocument out = doc;
  for (const Layer layer : {Layer::local, Layer::foreground}) {
    for (DocPath& p : out.layer(layer)) p.path = split_path(p.path, edges);
  }
  return out;
}

namespace {

struct Box {
  Point2d lo, hi;
  bool contains(const Point2d& p) const {
    return p.x() >= lo.x() && p.y() >= lo.y() && p.x() <= hi.x() && p.y() <= hi.y();
  }
};

// Bounding box of landmarks [first, last], grown by half its size (>= 3 px).
Box eye_box(std::span<const Point2d> pts, int first, int last) {
  Point2d lo = pts[static_cast<std::size_t>(first)], hi = lo;
  for (int i = first; i <= last; ++i) {
    lo = lo.cwiseMin(pts[static_cast<std::size_t>(i)]);
    hi = hi.cwiseMax(pts[static_cast<std::size_t>(i)]);
  }
  const Point2d grow = (0.5 * (hi - lo)).cwiseMax(Point2d(3, 3));
  return {lo - grow, hi + grow};
}

// Triangle governing point p, or -1 outside the image rectangle (frozen).
int assign_triangle(const Triangulation& tri, const Point2d& p, int width, int height) {
  if (const auto t = locate_point(tri, p)) return *t;
  const double eps = 1e-9;
  if (p.x() < -eps || p.y() < -eps || p.x() > width + eps || p.y() > height + eps) return -1;
  return nearest_triangle(tri, p);
}

constexpr int kMouthRig[] = {48, 54, 57, 8};

}  // namespace

AffineTransformd corner_similarity(const Point2d& rest_a, const Point2d& rest_b,
                                   const Point2d& frame_a, const Point2d& frame_b) {
  const double rest_len = (rest_b - rest_a).norm();
  if (!(rest_len > 1e-12)) throw SingularError("corner_similarity: coincident rest corners");
  const double scale = (frame_b - frame_a).norm() / rest_len;
  AffineTransformd xf;
  xf.linear() = scale * Eigen::Matrix2d::Identity();
  xf.translation() = 0.5 * (frame_a + frame_b) - scale * 0.5 * (rest_a + rest_b);
  return xf;
}

AffineTransformd fit_affine(std::span<const Point2d> src, std::span<const Point2d> dst) {
  if (src.size() != dst.size() || src.size() < 3) {
    throw DomainError("fit_affine: need at least 3 point pairs");
  }
  const auto n = static_cast<Eigen::Index>(src.size());
  Eigen::MatrixXd a(n, 3), b(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    a.row(i) << src[static_cast<std::size_t>(i)].transpose(), 1.0;
    b.row(i) = dst[static_cast<std::size_t>(i)].transpose();
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < 3) throw SingularError("fit_affine: source points are collinear");
  const Eigen::MatrixXd sol = qr.solve(b);
  AffineTransformd xf;
  xf.linear() = sol.topRows(2).transpose();
  xf.translation() = sol.row(2).transpose();
  return xf;
}

AnimationRig build_rig(const SvgDocument& doc, std::span<const Point2d> rest,
                       const RigOptions& options) {
  if (rest.size() < static_cast<std::size_t>(kLandmarkCount)) {
    throw DomainError("build_rig: need " + std::to_string(kLandmarkCount) + " rest landmarks");
  }
  LandmarkSequence probe;
  probe.rest.assign(rest.begin(), rest.end());
  check_landmarks_in_frame(probe, doc.width, doc.height);

  AnimationRig rig;
  rig.rest.assign(rest.begin(), rest.end());
  rig.landmark_count = static_cast<int>(rest.size());
  std::vector<Point2d> vertices = rig.rest;
  for (const auto& b : border_points(doc.width, doc.height)) vertices.push_back(b);
  rig.triangulation = delaunay(vertices);
  for (std::size_t t = 0; t < rig.triangulation.triangles.size(); ++t) {
    if (!(std::abs(signed_triangle_area(rig.triangulation.triangle_points(t))) > 1e-12)) {
      throw SingularError("build_rig: triangle " + std::to_string(t) + " is degenerate");
    }
  }
  rig.segmented = options.segment;
  rig.base = options.segment ? segment_paths(doc, rig.triangulation) : doc;

  for (const DocPath& p : rig.base.layer(Layer::foreground)) {
    std::vector<int> tris;
    if (rig.segmented) {
      for (const CubicBezierd& seg : p.path.segments()) {
        tris.push_back(assign_triangle(rig.triangulation, eval_cubic(seg, 0.5), doc.width,
                                       doc.height));
      }
    } else {
      for (Eigen::Index r = 0; r < p.path.points().rows(); ++r) {
        tris.push_back(assign_triangle(rig.triangulation, p.path.points().row(r).transpose(),
                                       doc.width, doc.height));
      }
    }
    rig.foreground_triangles.push_back(std::move(tris));
  }

  const Box right_eye = eye_box(rest, 36, 41), left_eye = eye_box(rest, 42, 47);
  for (const DocPath& p : rig.base.layer(Layer::local)) {
    const Point2d c = p.path.points().colwise().mean().transpose();
    rig.local_rigs.push_back(right_eye.contains(c)  ? LocalRig::right_eye
                             : left_eye.contains(c) ? LocalRig::left_eye
                                                    : LocalRig::mouth);
  }
  return rig;
}

SvgDocument warp_frame(const AnimationRig& rig, std::span<const Point2d> frame, WarpStats* stats) {
  if (frame.size() != rig.rest.size()) {
    throw DomainError("warp_frame: frame has " + std::to_string(frame.size()) +
                      " landmarks, rig expects " + std::to_string(rig.rest.size()));
  }
  const Triangulation& tri = rig.triangulation;
  std::vector<Point2d> moved(frame.begin(), frame.end());
  for (std::size_t i = rig.rest.size(); i < tri.vertices.size(); ++i) {
    moved.push_back(tri.vertices[i]);
  }
  std::vector<AffineTransformd> affine;
  affine.reserve(tri.triangles.size());
  for (std::size_t t = 0; t < tri.triangles.size(); ++t) {
    TrianglePoints<double> dst;
    for (int k = 0; k < 3; ++k) {
      dst.row(k) = moved[static_cast<std::size_t>(tri.triangles[t][static_cast<std::size_t>(k)])]
                       .transpose();
    }
    if (!(std::abs(signed_triangle_area(dst)) >= 1e-12)) {
      throw SingularError("warp_frame: target triangle " + std::to_string(t) + " is degenerate");
    }
    affine.push_back(affine_from_triangles(tri.triangle_points(t), dst));
  }
  const auto apply = [&](int t, const Point2d& p) -> Point2d {
    return t < 0 ? p : Point2d(affine[static_cast<std::size_t>(t)] * p);
  };

  WarpStats local_stats;
  SvgDocument out = rig.base;
  auto& fg = out.layer(Layer::foreground);
  for (std::size_t i = 0; i < fg.size(); ++i) {
    ClosedPathd& path = fg[i].path;
    const auto& tris = rig.foreground_triangles[i];
    const ClosedPathd::PointList src = path.points();
    ClosedPathd::PointList& dst = path.points();
    if (!rig.segmented) {
      for (Eigen::Index r = 0; r < src.rows(); ++r) {
        dst.row(r) = apply(tris[static_cast<std::size_t>(r)], src.row(r).transpose()).transpose();
      }
      continue;
    }
    const int n = path.segment_count();
    for (int k = 0; k < n; ++k) {
      const int t = tris[static_cast<std::size_t>(k)];
      const int prev = tris[static_cast<std::size_t>((k + n - 1) % n)];
      const Point2d joint = src.row(3 * k).transpose();
      const Point2d a = apply(t, joint), b = apply(prev, joint);
      dst.row(3 * k) = (0.5 * (a + b)).transpose();
      local_stats.max_reweld = std::max(local_stats.max_reweld, 0.5 * (a - b).norm());
      for (int m = 1; m <= 2; ++m) {
        dst.row(3 * k + m) = apply(t, src.row(3 * k + m).transpose()).transpose();
      }
    }
  }

  auto& local = out.layer(Layer::local);
  if (!local.empty()) {
    const AffineTransformd right_eye =
        corner_similarity(rig.rest[36], rig.rest[39], frame[36], frame[39]);
    const AffineTransformd left_eye =
        corner_similarity(rig.rest[42], rig.rest[45], frame[42], frame[45]);
    std::vector<Point2d> mouth_src, mouth_dst;
    for (const int i : kMouthRig) {
      mouth_src.push_back(rig.rest[static_cast<std::size_t>(i)]);
      mouth_dst.push_back(frame[static_cast<std::size_t>(i)]);
    }
    const AffineTransformd mouth = fit_affine(mouth_src, mouth_dst);
    for (std::size_t i = 0; i < local.size(); ++i) {
      const AffineTransformd& xf = rig.local_rigs[i] == LocalRig::right_eye  ? right_eye
                                   : rig.local_rigs[i] == LocalRig::left_eye ? left_eye
                                                                             : mouth;
      auto& pts = local[i].path.points();
      for (Eigen::Index r = 0; r < pts.rows(); ++r) {
        pts.row(r) = (xf * Point2d(pts.row(r).transpose())).transpose();
      }
    }
  }
  if (stats) *stats = local_stats;
  return out;
}

AnimateResult animate(const SvgDocument& doc, const LandmarkSequence& landmarks,
                      const std::filesystem::path& out_dir,
                      const std::optional<RenderConfig>& render_cfg) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir)) {
    throw IoError("cannot create output directory '" + out_dir.string() + "'");
  }
  AnimateResult result;
  if (landmarks.frames.empty()) return result;
  check_landmarks_in_frame(landmarks, doc.width, doc.height);
  const AnimationRig rig = build_rig(doc, landmarks.rest);
  for (std::size_t k = 0; k < landmarks.frames.size(); ++k) {
    WarpStats stats;
    const SvgDocument frame = warp_frame(rig, landmarks.frames[k], &stats);
    char name[32];
    std::snprintf(name, sizeof name, "frame_%05zu", k);
    const auto svg_path = out_dir / (std::string(name) + ".svg");
    save_svg(frame, svg_path);
    result.svg_files.push_back(svg_path);
    if (render_cfg) {
      const auto png_path = out_dir / (std::string(name) + ".png");
      save_image(render(frame.flattened(), *render_cfg), png_path);
      result.png_files.push_back(png_path);
    }
    result.stats.push_back(stats);
  }
  return result;
}

}  // namespace vecanim
