#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vecanim/diffrast.hpp"
#include "vecanim/document.hpp"
#include "vecanim/raster.hpp"

namespace vecanim {

struct LossWeights {
  double back = 1.0;
  double fore = 1.0;
  double local = 1.0;
  double merged = 1.0;
};

struct VectorizeConfig {
  int total_paths = 500;
  int n_levels = 5;
  int segments_per_path = 8;
  double lr_point = 1.0;
  double lr_color = 0.01;
  int iters_per_level = 200;
  int iters_final = 400;
  double lambda_max = 0.02;
  LossWeights weights;
  std::uint64_t rng_seed = 0;
  // Supersampling and boundary sampling used inside the optimization loop.
  int aa_samples = 2;
  int boundary_samples = 16;

  void validate() const;
};

// Per-pixel channel-summed squared error.
struct ErrorMap {
  Plane values;

  int width() const { return static_cast<int>(values.cols()); }
  int height() const { return static_cast<int>(values.rows()); }
};

ErrorMap error_map(const RasterImage& render, const RasterImage& target);

// Circle paths whose centers are drawn without replacement from the
// 5x5-box-blurred error map (uniformly when it is all zero). Each fill is the
// fill_source color at the center pixel, opaque.
std::vector<ClosedPathd> init_paths(const ErrorMap& error, int count, double radius,
                                    const RasterImage& fill_source, std::uint64_t seed,
                                    int segments_per_path = 8);

// First and second moment estimates of one parameter group.
struct AdamMoments {
  Eigen::ArrayXd m;
  Eigen::ArrayXd v;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

// One bias-corrected Adam update of `params` in place; `step` is 1-based.
// Throws NumericalError on a non-finite gradient.
void adam_update(Eigen::Ref<Eigen::ArrayXd> params, const Eigen::ArrayXd& grad,
                 AdamMoments& moments, double lr, int step);

struct AdamState {
  int step = 0;
  AdamMoments points;
  AdamMoments colors;
};

// Adam over all paths with separate point and color learning rates. Colors
// are clamped to [0, 1] afterwards.
void adam_step(std::vector<ClosedPathd>& paths, const GradientSet& grads, AdamState& state,
               double lr_point, double lr_color);

struct LayeredLoss {
  double back = 0;
  double fore = 0;
  double local = 0;
  double merged = 0;
  double total = 0;
  // Gradient of `total`, over doc.flattened() order.
  GradientSet grad;
  RasterImage composite;
};

// Weighted sum of the background-layer MSE against `background_target`, the
// m_fore- and m_local-masked MSEs of the foreground and local layers rendered
// alone, and the plain MSE of the full composite against `target`.
LayeredLoss layered_loss(const SvgDocument& doc, const RasterImage& target,
                         const RasterImage& background_target, const Mask& m_fore,
                         const Mask& m_local, const LossWeights& weights,
                         const RenderConfig& cfg);

// Harmonic fill of the pixels with fg_mask >= 0.5 (Gauss-Seidel, Dirichlet
// data from the surrounding pixels, zero flux at the image border).
RasterImage inpaint_background(const RasterImage& image, const Mask& fg_mask,
                               int max_iterations = 2000, double tolerance = 1e-6);

// Background hole: pixels with max(m_fore, m_local) >= 0.5.
Mask foreground_union(const Mask& m_fore, const Mask& m_local);

// A path placed on the canvas, either new or reseeded.
struct Insertion {
  std::string id;
  Layer layer = Layer::background;
  Point2d center = Point2d::Zero();
};

struct LevelLog {
  int level = 0;
  double lambda = 0;
  int inserted = 0;
  int reseeded = 0;
  double radius = 0;
  int iterations = 0;
  std::vector<double> loss;
  std::vector<double> merged;
  std::vector<Insertion> insertions;
  double best_merged = 0;
  double psnr = 0;
};

struct VectorizeLog {
  std::vector<LevelLog> levels;
};

// Paths inserted at each level: total/N each, remainder on the last.
std::vector<int> level_allocation(int total_paths, int n_levels);
// Insertion radius at 1-based level l.
double level_radius(int width, int height, int level);

// Coarse-to-fine layered vectorization.
SvgDocument progressive_vectorize(const RasterImage& image, const Mask& m_fore,
                                  const Mask& m_local, const VectorizeConfig& cfg,
                                  VectorizeLog* log = nullptr);

}  // namespace vecanim
