#include "vecanim/portrait.hpp"

#include <cmath>
#include <numbers>

namespace vecanim {

namespace {

struct Ellipse {
  double cx, cy, rx, ry;
  bool contains(double x, double y) const {
    const double u = (x - cx) / rx, v = (y - cy) / ry;
    return u * u + v * v <= 1.0;
  }
};

bool in_triangle(double x, double y, const Point2d& a, const Point2d& b, const Point2d& c) {
  const Point2d p(x, y);
  const double d1 = signed_triangle_area<double>(p, a, b);
  const double d2 = signed_triangle_area<double>(p, b, c);
  const double d3 = signed_triangle_area<double>(p, c, a);
  return (d1 >= 0 && d2 >= 0 && d3 >= 0) || (d1 <= 0 && d2 <= 0 && d3 <= 0);
}

const Ellipse kHair{64, 50, 45, 43};
const Ellipse kFace{64, 66, 36, 44};
const Ellipse kShirt{64, 142, 58, 32};
const Ellipse kEyeR{50, 62, 8, 4.5};
const Ellipse kEyeL{78, 62, 8, 4.5};
const Ellipse kLips{64, 92, 12.5, 5.5};
const Ellipse kMouth{64, 92, 8.5, 3};
const Ellipse kCheekR{44, 80, 6, 4};
const Ellipse kCheekL{84, 80, 6, 4};

enum Region { kBack = 0, kFore = 1, kLocal = 2 };

struct Sample {
  Eigen::Vector3d color;
  Region region;
};

Sample shade(double x, double y) {
  Sample s{Eigen::Vector3d(0.86, 0.92, 0.95) * (1.0 - 0.15 * y / 128.0), kBack};
  if (kShirt.contains(x, y)) s = {{0.20, 0.34, 0.64}, kFore};
  if (x >= 53 && x <= 75 && y >= 96 && y <= 120) s = {{0.88, 0.70, 0.56}, kFore};
  if (kHair.contains(x, y)) s = {{0.30, 0.18, 0.10}, kFore};
  const bool fringe = y < 31 + 3 * std::sin(x / 5.0);
  if (kFace.contains(x, y) && !fringe) {
    // Gentle top-to-bottom shading so the smoothing levels differ.
    const double t = (y - 22) / 88.0;
    s = {Eigen::Vector3d(0.97, 0.81, 0.67) * (1.0 - 0.10 * t), kFore};
    if (kCheekR.contains(x, y) || kCheekL.contains(x, y)) s.color = {0.95, 0.68, 0.62};
    if (in_triangle(x, y, {64, 67}, {59.5, 80}, {68.5, 80})) s.color = {0.86, 0.66, 0.53};
    if ((x >= 42 && x <= 58 && y >= 51 && y <= 54) || (x >= 70 && x <= 86 && y >= 51 && y <= 54)) {
      s.color = {0.25, 0.15, 0.08};
    }
    if (kLips.contains(x, y)) s.color = {0.78, 0.30, 0.32};
  }
  for (const Ellipse* eye : {&kEyeR, &kEyeL}) {
    if (!eye->contains(x, y)) continue;
    s = {{0.97, 0.97, 0.96}, kLocal};
    const double r = std::hypot(x - eye->cx, y - eye->cy);
    if (r <= 3.6) s.color = {0.30, 0.18, 0.09};
    if (r <= 1.6) s.color = {0.04, 0.03, 0.03};
  }
  if (kMouth.contains(x, y)) {
    s = {{0.36, 0.08, 0.10}, kLocal};
    if (y < kMouth.cy - 0.6) s.color = {0.96, 0.96, 0.92};
  }
  return s;
}

std::vector<Point2d> rest_landmarks() {
  std::vector<Point2d> p;
  p.reserve(kLandmarkCount);
  const double pi = std::numbers::pi;
  for (int i = 0; i <= 16; ++i) {
    const double th = pi - pi * i / 16.0;
    p.emplace_back(kFace.cx + kFace.rx * std::cos(th), kFace.cy + kFace.ry * std::sin(th));
  }
  constexpr double arc[5] = {0, 1, 1.5, 1, 0};
  for (int i = 0; i < 5; ++i) p.emplace_back(42 + 4 * i, 52 - arc[i]);
  for (int i = 0; i < 5; ++i) p.emplace_back(70 + 4 * i, 52 - arc[i]);
  for (int i = 0; i < 4; ++i) p.emplace_back(64, 60 + 5 * i);
  for (int i = 0; i < 5; ++i) p.emplace_back(59 + 2.5 * i, 80 + (i == 2 ? 1 : 0));
  const auto eye = [&](double cx) {
    p.emplace_back(cx - 8, 62);
    p.emplace_back(cx - 3, 57.8);
    p.emplace_back(cx + 3, 57.8);
    p.emplace_back(cx + 8, 62);
    p.emplace_back(cx + 3, 66.2);
    p.emplace_back(cx - 3, 66.2);
  };
  eye(kEyeR.cx);
  eye(kEyeL.cx);
  const Point2d outer[12] = {{51.5, 92}, {55.5, 88.2}, {60, 87}, {64, 87.6}, {68, 87},
                             {72.5, 88.2}, {76.5, 92}, {72.5, 96}, {68, 97.2}, {64, 97.5},
                             {60, 97.2}, {55.5, 96}};
  for (const auto& q : outer) p.push_back(q);
  const Point2d inner[8] = {{55.5, 92}, {60, 89.3}, {64, 89}, {68, 89.3},
                            {72.5, 92}, {68, 94.7}, {64, 95}, {60, 94.7}};
  for (const auto& q : inner) p.push_back(q);
  return p;
}

// Jaw drop by up to 8 px (scaled by `open`) and upper-lid closure by `blink`.
std::vector<Point2d> pose(const std::vector<Point2d>& rest, double open, double blink,
                          const Point2d& shift = Point2d::Zero()) {
  std::vector<Point2d> p = rest;
  const double drop = 8.0 * open;
  const double pi = std::numbers::pi;
  for (int i = 3; i <= 13; ++i) p[i].y() += drop * std::sin(pi * i / 16.0) * (i >= 5 && i <= 11 ? 1 : 0.5);
  for (const int i : {55, 56, 57, 58, 59, 65, 66, 67}) p[i].y() += 0.8 * drop;
  for (const int i : {48, 54, 60, 64}) p[i].y() += 0.25 * drop;
  const std::pair<int, int> lids[] = {{37, 41}, {38, 40}, {43, 47}, {44, 46}};
  for (const auto& [upper, lower] : lids) {
    p[upper].y() += 0.92 * blink * (p[lower].y() - p[upper].y());
  }
  for (auto& q : p) q += shift;
  return p;
}

}  // namespace

TestPortrait make_test_portrait() {
  constexpr int n = kPortraitSize;
  constexpr int ss = 4;
  TestPortrait out;
  out.image = RasterImage(n, n, 3);
  out.fore_mask = Mask(n, n);
  out.local_mask = Mask(n, n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      Eigen::Vector3d acc = Eigen::Vector3d::Zero();
      int counts[3] = {0, 0, 0};
      for (int sy = 0; sy < ss; ++sy) {
        for (int sx = 0; sx < ss; ++sx) {
          const Sample s = shade(x + (sx + 0.5) / ss, y + (sy + 0.5) / ss);
          acc += s.color;
          ++counts[s.region];
        }
      }
      out.image.set_rgb(x, y, acc / (ss * ss));
      out.fore_mask.values(y, x) = 2 * counts[kFore] >= ss * ss ? 1.0 : 0.0;
      out.local_mask.values(y, x) = 2 * counts[kLocal] >= ss * ss ? 1.0 : 0.0;
    }
  }
  const std::vector<Point2d> rest = rest_landmarks();
  out.landmarks.fps = 25.0;
  out.landmarks.rest = rest;
  out.landmarks.frames = {
      pose(rest, 0, 0),         pose(rest, 0.35, 0),     pose(rest, 0.7, 0),
      pose(rest, 1.0, 0),       pose(rest, 0.5, 0),      pose(rest, 0.1, 0, {0.8, 0.4}),
      pose(rest, 0, 0.5),       pose(rest, 0, 1.0),      pose(rest, 0.3, 0.5),
      pose(rest, 0, 0)};
  return out;
}

PixelBox mouth_region(const LandmarkSequence& landmarks, int width, int height) {
  Point2d lo = landmarks.rest[48], hi = lo;
  for (int i = 48; i < 68; ++i) {
    lo = lo.cwiseMin(landmarks.rest[static_cast<std::size_t>(i)]);
    hi = hi.cwiseMax(landmarks.rest[static_cast<std::size_t>(i)]);
  }
  hi.y() = std::max(hi.y(), landmarks.rest[8].y());
  const auto clampi = [](double v, int top) { return std::clamp(static_cast<int>(v), 0, top); };
  return {clampi(lo.x() - 4, width), clampi(lo.y() - 4, height), clampi(hi.x() + 5, width),
          clampi(hi.y() + 5, height)};
}

}  // namespace vecanim
