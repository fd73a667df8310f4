#include "vecanim/vectorize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "vecanim/random.hpp"
#include "vecanim/smoothing.hpp"

namespace vecanim {

void VectorizeConfig::validate() const {
  if (total_paths < 1) throw DomainError("vectorize: total_paths must be positive");
  if (n_levels < 1) throw DomainError("vectorize: n_levels must be positive");
  if (segments_per_path < 4) throw DomainError("vectorize: segments_per_path must be >= 4");
  if (iters_per_level < 0 || iters_final < 0) {
    throw DomainError("vectorize: iteration counts must be non-negative");
  }
  if (!(lr_point >= 0) || !(lr_color >= 0)) throw DomainError("vectorize: negative learning rate");
  if (!(lambda_max >= 0)) throw DomainError("vectorize: lambda_max must be non-negative");
  if (aa_samples < 1 || boundary_samples < 1) {
    throw DomainError("vectorize: sample counts must be positive");
  }
}

ErrorMap error_map(const RasterImage& render, const RasterImage& target) {
  if (render.width() != target.width() || render.height() != target.height()) {
    throw DomainError("error_map: image dimensions differ");
  }
  ErrorMap e{Plane::Zero(target.height(), target.width())};
  for (int c = 0; c < 3; ++c) {
    e.values += (render.rgb_only().plane(c) - target.rgb_only().plane(c)).square();
  }
  return e;
}

namespace {

Plane box_blur5(const Plane& p) {
  const Eigen::Index h = p.rows(), w = p.cols();
  Plane out = Plane::Zero(h, w);
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      const Eigen::Index y0 = std::max<Eigen::Index>(0, y - 2), y1 = std::min(h - 1, y + 2);
      const Eigen::Index x0 = std::max<Eigen::Index>(0, x - 2), x1 = std::min(w - 1, x + 2);
      out(y, x) = p.block(y0, x0, y1 - y0 + 1, x1 - x0 + 1).mean();
    }
  }
  return out;
}

}  // namespace

std::vector<ClosedPathd> init_paths(const ErrorMap& error, int count, double radius,
                                    const RasterImage& fill_source, std::uint64_t seed,
                                    int segments_per_path) {
  if (count < 0) throw DomainError("init_paths: count must be non-negative");
  if (!(radius > 0)) throw DomainError("init_paths: radius must be positive");
  if (count == 0) return {};
  if (error.width() != fill_source.width() || error.height() != fill_source.height()) {
    throw DomainError("init_paths: error map and fill source dimensions differ");
  }
  const Plane weights = box_blur5(error.values.max(0.0));
  const int w = error.width();
  const Eigen::Index n = weights.size();
  if (count > n) throw DomainError("init_paths: more paths than pixels");

  // Weighted sampling without replacement via exponential keys log(u)/w:
  // the largest keys win. Zero-weight pixels rank below every weighted one and
  // among themselves uniformly.
  struct Key {
    int tier;
    double value;
    Eigen::Index index;
  };
  std::mt19937_64 rng(seed);
  std::vector<Key> keys(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index y = i / w, x = i % w;
    const double wt = weights(y, x);
    const double u = uniform_open01(rng);
    keys[static_cast<std::size_t>(i)] = wt > 0 ? Key{1, std::log(u) / wt, i} : Key{0, u, i};
  }
  const auto greater = [](const Key& a, const Key& b) {
    if (a.tier != b.tier) return a.tier > b.tier;
    if (a.value != b.value) return a.value > b.value;
    return a.index < b.index;
  };
  std::partial_sort(keys.begin(), keys.begin() + count, keys.end(), greater);

  std::vector<ClosedPathd> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    const Eigen::Index i = keys[static_cast<std::size_t>(k)].index;
    const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
    const Eigen::Vector3d c = fill_source.rgb(x, y);
    out.push_back(circle_path<double>(Point2d(x + 0.5, y + 0.5), radius, segments_per_path,
                                      Rgbad(c[0], c[1], c[2], 1.0)));
  }
  return out;
}

void adam_update(Eigen::Ref<Eigen::ArrayXd> params, const Eigen::ArrayXd& grad,
                 AdamMoments& moments, double lr, int step) {
  if (grad.size() != params.size()) throw DomainError("adam: gradient shape mismatch");
  if (!grad.allFinite()) throw NumericalError("adam: non-finite gradient");
  if (step < 1) throw DomainError("adam: step is 1-based");
  if (moments.m.size() == 0) {
    moments.m = Eigen::ArrayXd::Zero(params.size());
    moments.v = Eigen::ArrayXd::Zero(params.size());
  }
  if (moments.m.size() != params.size()) throw DomainError("adam: state shape mismatch");
  moments.m = kAdamBeta1 * moments.m + (1 - kAdamBeta1) * grad;
  moments.v = kAdamBeta2 * moments.v + (1 - kAdamBeta2) * grad.square();
  const double c1 = 1 - std::pow(kAdamBeta1, step);
  const double c2 = 1 - std::pow(kAdamBeta2, step);
  params -= lr * (moments.m / c1) / ((moments.v / c2).sqrt() + kAdamEps);
}

void adam_step(std::vector<ClosedPathd>& paths, const GradientSet& grads, AdamState& state,
               double lr_point, double lr_color) {
  if (grads.paths.size() != paths.size()) throw DomainError("adam_step: gradient shape mismatch");
  Eigen::Index n_points = 0;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    if (grads.paths[i].points.rows() != paths[i].points().rows()) {
      throw DomainError("adam_step: gradient shape mismatch");
    }
    n_points += paths[i].points().size();
  }
  const auto n_colors = static_cast<Eigen::Index>(4 * paths.size());
  Eigen::ArrayXd points(n_points), dpoints(n_points), colors(n_colors), dcolors(n_colors);
  Eigen::Index at = 0;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const Eigen::Index sz = paths[i].points().size();
    points.segment(at, sz) = paths[i].points().reshaped().array();
    dpoints.segment(at, sz) = grads.paths[i].points.reshaped().array();
    at += sz;
    colors.segment<4>(static_cast<Eigen::Index>(4 * i)) = paths[i].fill().array();
    dcolors.segment<4>(static_cast<Eigen::Index>(4 * i)) = grads.paths[i].fill.array();
  }
  ++state.step;
  adam_update(points, dpoints, state.points, lr_point, state.step);
  adam_update(colors, dcolors, state.colors, lr_color, state.step);
  colors = colors.max(0.0).min(1.0);
  at = 0;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const Eigen::Index sz = paths[i].points().size();
    paths[i].points().reshaped() = points.segment(at, sz).matrix();
    at += sz;
    paths[i].fill() = colors.segment<4>(static_cast<Eigen::Index>(4 * i)).matrix();
  }
}

LayeredLoss layered_loss(const SvgDocument& doc, const RasterImage& target,
                         const RasterImage& background_target, const Mask& m_fore,
                         const Mask& m_local, const LossWeights& weights,
                         const RenderConfig& cfg) {
  const auto check = [&](int w, int h, const char* what) {
    if (w != cfg.width || h != cfg.height) {
      throw DomainError(std::string("layered_loss: ") + what + " dimensions differ");
    }
  };
  check(target.width(), target.height(), "target");
  check(background_target.width(), background_target.height(), "background target");
  check(m_fore.width(), m_fore.height(), "foreground mask");
  check(m_local.width(), m_local.height(), "local mask");

  const std::vector<ClosedPathd> all = doc.flattened();
  LayeredLoss out;
  out.grad = GradientSet::zeros_like(all);

  std::size_t offset = 0;
  for (const Layer layer : kLayers) {
    const std::vector<ClosedPathd> paths = doc.layer_paths(layer);
    double weight = 0;
    double* term = nullptr;
    RenderResult r;
    switch (layer) {
      case Layer::background:
        r = render_with_grad(paths, cfg, background_target);
        weight = weights.back;
        term = &out.back;
        break;
      case Layer::local:
        r = render_with_grad(paths, cfg, target, &m_local);
        weight = weights.local;
        term = &out.local;
        break;
      case Layer::foreground:
        r = render_with_grad(paths, cfg, target, &m_fore);
        weight = weights.fore;
        term = &out.fore;
        break;
    }
    *term = r.loss;
    for (std::size_t i = 0; i < paths.size(); ++i) {
      out.grad.paths[offset + i].points += weight * r.grad.paths[i].points;
      out.grad.paths[offset + i].fill += weight * r.grad.paths[i].fill;
    }
    offset += paths.size();
  }

  RenderResult merged = render_with_grad(all, cfg, target);
  out.merged = merged.loss;
  out.grad.add_scaled(merged.grad, weights.merged);
  out.composite = std::move(merged.image);
  out.total = weights.back * out.back + weights.fore * out.fore + weights.local * out.local +
              weights.merged * out.merged;
  return out;
}

Mask foreground_union(const Mask& m_fore, const Mask& m_local) {
  if (m_fore.width() != m_local.width() || m_fore.height() != m_local.height()) {
    throw DomainError("foreground_union: mask dimensions differ");
  }
  return Mask(Plane((m_fore.values.max(m_local.values) >= 0.5).cast<double>()));
}

RasterImage inpaint_background(const RasterImage& image, const Mask& fg_mask, int max_iterations,
                               double tolerance) {
  const int w = image.width(), h = image.height();
  if (fg_mask.width() != w || fg_mask.height() != h) {
    throw DomainError("inpaint_background: mask dimensions differ from the image");
  }
  const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> hole = fg_mask.values >= 0.5;
  if (!hole.any()) return image;
  if (hole.all()) throw DomainError("inpaint_background: mask covers the whole image");

  RasterImage out = image;
  constexpr int dx[4] = {1, -1, 0, 0};
  constexpr int dy[4] = {0, 0, 1, -1};
  for (int c = 0; c < image.channels(); ++c) {
    Plane& p = out.plane(c);
    // Start from the mean of the known pixels bordering the hole.
    double sum = 0;
    int count = 0;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (hole(y, x)) continue;
        for (int k = 0; k < 4; ++k) {
          const int nx = x + dx[k], ny = y + dy[k];
          if (nx >= 0 && ny >= 0 && nx < w && ny < h && hole(ny, nx)) {
            sum += p(y, x);
            ++count;
            break;
          }
        }
      }
    }
    const double start = sum / count;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (hole(y, x)) p(y, x) = start;
      }
    }
    for (int it = 0; it < max_iterations; ++it) {
      double change = 0;
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          if (!hole(y, x)) continue;
          double acc = 0;
          int n = 0;
          for (int k = 0; k < 4; ++k) {
            const int nx = x + dx[k], ny = y + dy[k];
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            acc += p(ny, nx);
            ++n;
          }
          const double next = acc / n;
          change = std::max(change, std::abs(next - p(y, x)));
          p(y, x) = next;
        }
      }
      if (change < tolerance) break;
    }
  }
  return out;
}

std::vector<int> level_allocation(int total_paths, int n_levels) {
  if (n_levels < 1 || total_paths < 0) throw DomainError("level_allocation: invalid counts");
  std::vector<int> out(static_cast<std::size_t>(n_levels), total_paths / n_levels);
  out.back() += total_paths % n_levels;
  return out;
}

double level_radius(int width, int height, int level) {
  const double diag = std::hypot(double(width), double(height));
  return std::max(2.0, diag / 16.0 * std::ldexp(1.0, -(level - 1)));
}

namespace {

Layer layer_at(const Point2d& center, const Mask& m_fore, const Mask& m_local) {
  const int x = std::clamp(static_cast<int>(std::floor(center.x())), 0, m_fore.width() - 1);
  const int y = std::clamp(static_cast<int>(std::floor(center.y())), 0, m_fore.height() - 1);
  if (m_local.at(x, y) >= 0.5) return Layer::local;
  if (m_fore.at(x, y) >= 0.5) return Layer::foreground;
  return Layer::background;
}

void scatter(SvgDocument& doc, const std::vector<ClosedPathd>& paths) {
  std::size_t i = 0;
  for (const Layer layer : kLayers) {
    for (DocPath& p : doc.layer(layer)) p.path = paths[i++];
  }
}

constexpr double kDeadArea = 0.25;

// Moves paths that collapsed during the previous level onto the error peaks.
int reseed_dead_paths(SvgDocument& doc, ErrorMap error, double radius, const RasterImage& target,
                      const Mask& m_fore, const Mask& m_local, int segments,
                      std::vector<Insertion>& placed) {
  std::vector<DocPath> dead;
  for (const Layer layer : kLayers) {
    auto& paths = doc.layer(layer);
    const auto it = std::stable_partition(paths.begin(), paths.end(), [](const DocPath& p) {
      return std::abs(signed_path_area(p.path)) >= kDeadArea;
    });
    std::move(it, paths.end(), std::back_inserter(dead));
    paths.erase(it, paths.end());
  }
  for (DocPath& p : dead) {
    Eigen::Index y = 0, x = 0;
    error.values.maxCoeff(&y, &x);
    const Point2d center(double(x) + 0.5, double(y) + 0.5);
    const Eigen::Vector3d c = target.rgb(int(x), int(y));
    p.path = circle_path<double>(center, radius, segments, Rgbad(c[0], c[1], c[2], 1.0));
    // Suppress the neighbourhood so the next pick lands elsewhere.
    for (Eigen::Index yy = 0; yy < error.values.rows(); ++yy) {
      for (Eigen::Index xx = 0; xx < error.values.cols(); ++xx) {
        if (std::hypot(double(xx - x), double(yy - y)) <= radius) error.values(yy, xx) = 0;
      }
    }
    const Layer layer = layer_at(center, m_fore, m_local);
    placed.push_back({p.id, layer, center});
    doc.layer(layer).push_back(std::move(p));
  }
  return static_cast<int>(dead.size());
}

}  // namespace

SvgDocument progressive_vectorize(const RasterImage& image, const Mask& m_fore,
                                  const Mask& m_local, const VectorizeConfig& cfg,
                                  VectorizeLog* log) {
  cfg.validate();
  const int w = image.width(), h = image.height();
  if (m_fore.width() != w || m_fore.height() != h || m_local.width() != w ||
      m_local.height() != h) {
    throw DomainError("progressive_vectorize: mask dimensions differ from the image");
  }
  const RasterImage input = image.rgb_only();
  const SmoothingStack stack = build_stack(input, cfg.n_levels, cfg.lambda_max);
  const std::vector<int> allocation = level_allocation(cfg.total_paths, cfg.n_levels);
  const Mask hole = foreground_union(m_fore, m_local);

  RenderConfig rc;
  rc.width = w;
  rc.height = h;
  rc.aa_samples = cfg.aa_samples;
  rc.boundary_samples = cfg.boundary_samples;

  SvgDocument doc;
  doc.width = w;
  doc.height = h;
  int serial = 0;

  for (int level = 1; level <= cfg.n_levels; ++level) {
    const RasterImage& target = stack.levels[static_cast<std::size_t>(level - 1)];
    const RasterImage background_target = inpaint_background(target, hole);
    const double radius = level_radius(w, h, level);
    LevelLog entry;
    entry.level = level;
    entry.lambda = stack.lambdas[static_cast<std::size_t>(level - 1)];
    entry.radius = radius;

    const ErrorMap error = error_map(render(doc.flattened(), rc), target);
    if (level > 1) {
      entry.reseeded = reseed_dead_paths(doc, error, radius, target, m_fore, m_local,
                                         cfg.segments_per_path, entry.insertions);
    }
    const int n_new = allocation[static_cast<std::size_t>(level - 1)];
    for (ClosedPathd& p : init_paths(error, n_new, radius, target,
                                     mix_seed(cfg.rng_seed, std::uint64_t(level)),
                                     cfg.segments_per_path)) {
      const Point2d center = p.points().colwise().mean().transpose();
      const Layer layer = layer_at(center, m_fore, m_local);
      entry.insertions.push_back({"path" + std::to_string(serial), layer, center});
      doc.layer(layer).push_back({"path" + std::to_string(serial++), std::move(p)});
    }
    entry.inserted = n_new;

    const int iterations = level == cfg.n_levels ? cfg.iters_final : cfg.iters_per_level;
    AdamState state;
    SvgDocument best = doc;
    double best_merged = std::numeric_limits<double>::infinity();
    for (int it = 0; it < iterations; ++it) {
      rc.rng_seed = mix_seed(cfg.rng_seed, (std::uint64_t(level) << 32) | std::uint64_t(it));
      const LayeredLoss loss =
          layered_loss(doc, target, background_target, m_fore, m_local, cfg.weights, rc);
      if (!std::isfinite(loss.total) || !loss.grad.all_finite()) {
        throw NumericalError("progressive_vectorize: non-finite loss or gradient at level " +
                             std::to_string(level) + ", iteration " + std::to_string(it));
      }
      entry.loss.push_back(loss.total);
      entry.merged.push_back(loss.merged);
      if (loss.merged < best_merged) {
        best_merged = loss.merged;
        best = doc;
      }
      std::vector<ClosedPathd> params = doc.flattened();
      adam_step(params, loss.grad, state, cfg.lr_point, cfg.lr_color);
      scatter(doc, params);
    }
    const double final_merged = masked_mse(render(doc.flattened(), rc), target, nullptr);
    if (final_merged < best_merged) {
      best_merged = final_merged;
    } else {
      doc = std::move(best);
    }
    entry.iterations = iterations;
    entry.best_merged = best_merged;
    entry.psnr = psnr(render(doc.flattened(), rc), input);
    if (log) log->levels.push_back(std::move(entry));
  }
  return doc;
}

}  // namespace vecanim
