#pragma once

#include <vector>

#include "vecanim/raster.hpp"

namespace vecanim {

// Half-quadratic splitting schedule: beta starts at beta0_factor * lambda and
// is multiplied by kappa until it exceeds beta_max.
struct L0Options {
  double beta0_factor = 2.0;
  double kappa = 2.0;
  double beta_max = 1e5;
};

// Energies sum (S - I)^2 + lambda * C(S), one entry per outer iteration:
// the raw half-quadratic iterate, its region-mean projection, and the
// running best (the value l0_smooth returns at the end).
struct L0Trace {
  std::vector<double> beta;
  std::vector<double> iterate;
  std::vector<double> candidate;
  std::vector<double> accepted;
};

// Gradients below this magnitude count as zero in C(S).
inline constexpr double kL0GradientTolerance = 1e-4;

// Number of pixels whose forward-difference gradient (periodic, channels
// combined) exceeds kL0GradientTolerance.
Eigen::Index count_nonzero_gradients(const RasterImage& image);

// sum over channels/pixels of (S - I)^2 + lambda * count_nonzero_gradients(S).
double l0_energy(const RasterImage& smoothed, const RasterImage& input, double lambda);

// l0 gradient minimization by alternating gradient thresholding and an exact
// periodic screened-Poisson solve in the Fourier domain. After each outer
// iteration the auxiliary gradient support defines flat regions; the region
// means form a piecewise-constant candidate, and the lowest-energy candidate
// (or the input, if none beats it) is returned.
RasterImage l0_smooth(const RasterImage& image, double lambda, const L0Options& options = {},
                      L0Trace* trace = nullptr);

struct SmoothingStack {
  // Coarsest (heaviest smoothing) first; the last level is the input itself.
  std::vector<RasterImage> levels;
  std::vector<double> lambdas;

  std::size_t size() const { return levels.size(); }
};

// Level l (1-based) uses lambda_max * 2^-(l-1); the finest level uses 0.
std::vector<double> stack_lambdas(int n_levels, double lambda_max);

// Levels are l0_smooth results, each replaced by whichever result of the
// other levels (or the input) has lower energy at its own lambda.
SmoothingStack build_stack(const RasterImage& image, int n_levels, double lambda_max);

}  // namespace vecanim
