#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vecanim/geometry.hpp"
#include "vecanim/raster.hpp"

namespace vecanim {

struct RenderConfig {
  int width = 0;
  int height = 0;
  Eigen::Vector3d background = Eigen::Vector3d::Ones();
  // Subsamples per pixel axis; each pixel averages aa_samples^2 point samples.
  int aa_samples = 2;
  // Stratified boundary samples per cubic segment for geometry gradients.
  int boundary_samples = 64;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

// d(loss)/d(parameter) with the same layout as the path list: one row per
// stored point of ClosedPathd::points() plus the RGBA fill.
struct PathGradient {
  ClosedPathd::PointList points;
  Rgbad fill = Rgbad::Zero();
};

struct GradientSet {
  std::vector<PathGradient> paths;

  static GradientSet zeros_like(std::span<const ClosedPathd> paths);
  bool all_finite() const;
  GradientSet& add_scaled(const GradientSet& other, double scale);
};

struct RenderResult {
  RasterImage image;
  double loss = 0;
  GradientSet grad;
};

// Back-to-front "over" compositing of the paths (nonzero winding) onto the
// background, evaluated per subsample and box-averaged per pixel. Sample rows
// are intersected with the cubics exactly, so splitting a curve does not
// change its coverage.
RasterImage render(std::span<const ClosedPathd> paths, const RenderConfig& cfg);

// Renders, evaluates the (optionally masked) MSE against `target`, and
// returns its gradient: exact for fill colors, boundary-sampled Monte Carlo
// for control points.
RenderResult render_with_grad(std::span<const ClosedPathd> paths, const RenderConfig& cfg,
                              const RasterImage& target, const Mask* mask = nullptr);

// Sum_p w_p |I_p - T_p|^2 / (3 Sum_p w_p) over RGB; w = 1 without a mask.
// An all-zero mask gives 0.
double masked_mse(const RasterImage& image, const RasterImage& target, const Mask* mask);

// Fraction of a pixel's subsamples covered by one path.
Plane path_coverage(const ClosedPathd& path, const RenderConfig& cfg);

// Closed polyline (first point not repeated) through adaptive subdivision.
std::vector<Point2d> flatten_path(const ClosedPathd& path, double flatness);

// Shoelace area of the flattened path; positive for counter-clockwise in
// the (x right, y up) convention.
double signed_path_area(const ClosedPathd& path, double flatness = 0.1);

}  // namespace vecanim
