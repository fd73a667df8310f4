#include "vecanim/smoothing.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>

namespace vecanim {

namespace {

using ComplexPlane = Eigen::ArrayXXcd;

// Periodic forward differences along x (columns) and y (rows).
Plane diff_x(const Plane& p) {
  Plane out(p.rows(), p.cols());
  const Eigen::Index w = p.cols();
  out.leftCols(w - 1) = p.rightCols(w - 1) - p.leftCols(w - 1);
  out.col(w - 1) = p.col(0) - p.col(w - 1);
  return out;
}

Plane diff_y(const Plane& p) {
  Plane out(p.rows(), p.cols());
  const Eigen::Index h = p.rows();
  out.topRows(h - 1) = p.bottomRows(h - 1) - p.topRows(h - 1);
  out.row(h - 1) = p.row(0) - p.row(h - 1);
  return out;
}

// Adjoints of the forward differences: (D^T g)_j = g_{j-1} - g_j.
Plane diff_x_adjoint(const Plane& g) {
  Plane out(g.rows(), g.cols());
  const Eigen::Index w = g.cols();
  out.rightCols(w - 1) = g.leftCols(w - 1) - g.rightCols(w - 1);
  out.col(0) = g.col(w - 1) - g.col(0);
  return out;
}

Plane diff_y_adjoint(const Plane& g) {
  Plane out(g.rows(), g.cols());
  const Eigen::Index h = g.rows();
  out.bottomRows(h - 1) = g.topRows(h - 1) - g.bottomRows(h - 1);
  out.row(0) = g.row(h - 1) - g.row(0);
  return out;
}

class Fft2 {
 public:
  ComplexPlane forward(const Plane& p) {
    ComplexPlane c = p.cast<std::complex<double>>();
    transform(c, false);
    return c;
  }

  Plane inverse_real(ComplexPlane c) {
    transform(c, true);
    return c.real();
  }

 private:
  void transform(ComplexPlane& c, bool inverse) {
    // A length-1 transform is the identity (and kissfft rejects it).
    std::vector<std::complex<double>> in, out;
    in.resize(static_cast<std::size_t>(c.cols()));
    for (Eigen::Index r = 0; c.cols() > 1 && r < c.rows(); ++r) {
      for (Eigen::Index k = 0; k < c.cols(); ++k) in[static_cast<std::size_t>(k)] = c(r, k);
      inverse ? fft_.inv(out, in) : fft_.fwd(out, in);
      for (Eigen::Index k = 0; k < c.cols(); ++k) c(r, k) = out[static_cast<std::size_t>(k)];
    }
    in.resize(static_cast<std::size_t>(c.rows()));
    for (Eigen::Index k = 0; c.rows() > 1 && k < c.cols(); ++k) {
      for (Eigen::Index r = 0; r < c.rows(); ++r) in[static_cast<std::size_t>(r)] = c(r, k);
      inverse ? fft_.inv(out, in) : fft_.fwd(out, in);
      for (Eigen::Index r = 0; r < c.rows(); ++r) c(r, k) = out[static_cast<std::size_t>(r)];
    }
  }

  Eigen::FFT<double> fft_;
};

// |F(D_x)|^2 + |F(D_y)|^2 on the frequency grid.
Plane difference_spectrum(Eigen::Index rows, Eigen::Index cols) {
  Plane out(rows, cols);
  const double pi = std::numbers::pi;
  for (Eigen::Index c = 0; c < cols; ++c) {
    const double sx = std::sin(pi * double(c) / double(cols));
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double sy = std::sin(pi * double(r) / double(rows));
      out(r, c) = 4.0 * (sx * sx + sy * sy);
    }
  }
  return out;
}

// Union-find over pixels; links follow zero auxiliary gradients.
class PixelForest {
 public:
  explicit PixelForest(Eigen::Index n) : parent_(static_cast<std::size_t>(n)) {
    std::iota(parent_.begin(), parent_.end(), Eigen::Index(0));
  }
  Eigen::Index find(Eigen::Index x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(Eigen::Index a, Eigen::Index b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<Eigen::Index> parent_;
};

// Piecewise-constant image implied by the auxiliary gradients: pixels joined
// by an all-channel zero (h or v) share one region, which takes the input mean.
RasterImage project_regions(const RasterImage& input, const std::vector<Plane>& h,
                            const std::vector<Plane>& v) {
  const Eigen::Index rows = input.height(), cols = input.width();
  Plane hx = Plane::Zero(rows, cols), vy = Plane::Zero(rows, cols);
  for (std::size_t c = 0; c < h.size(); ++c) {
    hx = hx.max(h[c].abs());
    vy = vy.max(v[c].abs());
  }
  PixelForest forest(rows * cols);
  const auto id = [cols](Eigen::Index r, Eigen::Index c) { return r * cols + c; };
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (hx(r, c) == 0) forest.unite(id(r, c), id(r, (c + 1) % cols));
      if (vy(r, c) == 0) forest.unite(id(r, c), id((r + 1) % rows, c));
    }
  }
  const int channels = input.channels();
  Eigen::ArrayXXd sums = Eigen::ArrayXXd::Zero(channels, rows * cols);
  Eigen::ArrayXd counts = Eigen::ArrayXd::Zero(rows * cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      const Eigen::Index root = forest.find(id(r, c));
      counts[root] += 1;
      for (int ch = 0; ch < channels; ++ch) sums(ch, root) += input.plane(ch)(r, c);
    }
  }
  RasterImage out = input;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      const Eigen::Index root = forest.find(id(r, c));
      for (int ch = 0; ch < channels; ++ch) out.plane(ch)(r, c) = sums(ch, root) / counts[root];
    }
  }
  return out;
}

}  // namespace

Eigen::Index count_nonzero_gradients(const RasterImage& image) {
  Plane mag = Plane::Zero(image.height(), image.width());
  for (int c = 0; c < image.channels(); ++c) {
    mag = mag.max(diff_x(image.plane(c)).abs() + diff_y(image.plane(c)).abs());
  }
  return (mag > kL0GradientTolerance).count();
}

double l0_energy(const RasterImage& smoothed, const RasterImage& input, double lambda) {
  double data = 0;
  for (int c = 0; c < input.channels(); ++c) {
    data += (smoothed.plane(c) - input.plane(c)).square().sum();
  }
  return data + lambda * double(count_nonzero_gradients(smoothed));
}

RasterImage l0_smooth(const RasterImage& image, double lambda, const L0Options& options,
                      L0Trace* trace) {
  if (lambda < 0) throw DomainError("l0_smooth: lambda must be non-negative");
  if (lambda == 0) return image;

  const int channels = image.channels();
  const Eigen::Index rows = image.height(), cols = image.width();
  Fft2 fft;
  std::vector<ComplexPlane> input_spectrum;
  for (int c = 0; c < channels; ++c) input_spectrum.push_back(fft.forward(image.plane(c)));
  const Plane spectrum = difference_spectrum(rows, cols);

  RasterImage best = image;
  double best_energy = l0_energy(image, image, lambda);

  RasterImage s = image;
  std::vector<Plane> h(static_cast<std::size_t>(channels)), v(static_cast<std::size_t>(channels));
  for (double beta = options.beta0_factor * lambda; beta < options.beta_max;
       beta *= options.kappa) {
    // Gradient subproblem: hard threshold on the joint squared magnitude.
    Plane mag2 = Plane::Zero(rows, cols);
    for (int c = 0; c < channels; ++c) {
      h[c] = diff_x(s.plane(c));
      v[c] = diff_y(s.plane(c));
      mag2 += h[c].square() + v[c].square();
    }
    const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> zero = mag2 <= lambda / beta;
    for (int c = 0; c < channels; ++c) {
      h[c] = zero.select(0.0, h[c]);
      v[c] = zero.select(0.0, v[c]);
    }
    // Image subproblem: (1 + beta D^T D) S = I + beta D^T (h, v).
    const Plane denom = 1.0 + beta * spectrum;
    for (int c = 0; c < channels; ++c) {
      const ComplexPlane rhs =
          input_spectrum[c] + beta * fft.forward(diff_x_adjoint(h[c]) + diff_y_adjoint(v[c]));
      s.plane(c) = fft.inverse_real(rhs / denom.cast<std::complex<double>>());
    }

    // The half-quadratic iterate does not decrease the l0 energy by itself;
    // keep the lowest-energy piecewise-constant candidate seen so far.
    RasterImage candidate = project_regions(image, h, v);
    const double candidate_energy = l0_energy(candidate, image, lambda);
    if (candidate_energy < best_energy) {
      best = std::move(candidate);
      best_energy = candidate_energy;
    }
    if (trace) {
      trace->beta.push_back(beta);
      trace->iterate.push_back(l0_energy(s, image, lambda));
      trace->candidate.push_back(candidate_energy);
      trace->accepted.push_back(best_energy);
    }
  }
  return best;
}

std::vector<double> stack_lambdas(int n_levels, double lambda_max) {
  if (n_levels < 1) throw DomainError("build_stack: need at least one level");
  std::vector<double> out;
  for (int l = 1; l < n_levels; ++l) out.push_back(lambda_max * std::ldexp(1.0, -(l - 1)));
  out.push_back(0.0);
  return out;
}

SmoothingStack build_stack(const RasterImage& image, int n_levels, double lambda_max) {
  SmoothingStack stack;
  stack.lambdas = stack_lambdas(n_levels, lambda_max);
  stack.levels.resize(stack.lambdas.size());
#pragma omp parallel for schedule(dynamic)
  for (int l = 0; l < n_levels; ++l) {
    stack.levels[static_cast<std::size_t>(l)] = l0_smooth(image, stack.lambdas[l]);
  }
  // Each level then takes the lowest-energy image among all levels' results
  // (and the input). Minimizing over one shared pool makes the gradient count
  // non-increasing in lambda, which independent runs do not guarantee.
  std::vector<RasterImage> pool = stack.levels;
  pool.push_back(image);
  std::vector<Eigen::Index> counts;
  for (const auto& p : pool) counts.push_back(count_nonzero_gradients(p));
  for (std::size_t l = 0; l < stack.size(); ++l) {
    std::size_t pick = l;
    double best = l0_energy(pool[l], image, stack.lambdas[l]);
    for (std::size_t k = 0; k < pool.size(); ++k) {
      const double e = l0_energy(pool[k], image, stack.lambdas[l]);
      if (e < best || (e == best && counts[k] < counts[pick])) {
        best = e;
        pick = k;
      }
    }
    if (pick != l) stack.levels[l] = pool[pick];
  }
  return stack;
}

}  // namespace vecanim
