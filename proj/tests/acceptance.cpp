// Acceptance harness: one [PASS]/[FAIL] line per criterion.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "oracles.hpp"
#include "vecanim/animate.hpp"
#include "vecanim/commands.hpp"
#include "vecanim/portrait.hpp"
#include "vecanim/random.hpp"
#include "vecanim/smoothing.hpp"
#include "vecanim/svg.hpp"
#include "vecanim/vectorize.hpp"

using namespace vecanim;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + ("failed: " + what);
    }
  }
  void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

// Shared state: the vectorization runs feed criteria 4 through 7.
struct Runs {
  TestPortrait portrait = make_test_portrait();
  SvgDocument p100_l1, p100_l5, p250_l5;
  Metrics m100_l1, m100_l5, m250_l5;
  VectorizeLog log100_l1, log100_l5, log250_l5;
  double seconds = 0;
};

Metrics metrics_of(const SvgDocument& doc, const RasterImage& image) {
  return compute_metrics(render_document(doc, image.width(), image.height(), 64), image);
}

// 1 -------------------------------------------------------------------------

Outcome geometry_exactness() {
  Outcome o;
  const auto start = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> ut(0.01, 0.99);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const CubicBezierd c = oracle::random_cubic(rng, -10, 10);
    const double t = ut(rng);
    const auto [left, right] = split_cubic(c, t);
    for (int j = 0; j <= 100; ++j) {
      const double u = j / 100.0;
      worst = std::max(worst, (eval_cubic(left, u) - oracle::de_casteljau(c, u * t)).norm());
      worst = std::max(worst, (eval_cubic(right, u) - oracle::de_casteljau(c, t + u * (1 - t))).norm());
    }
  }
  o.require(worst < 1e-9, "split deviation " + fmt("%.3g", worst));
  o.note("split max deviation " + fmt("%.2g", worst));

  // Dense-sampling oracle: sign changes of the side function over 1e5
  // samples, kept where the sample lies within 1e-6-scaled reach of the segment.
  int cases = 0, missed = 0, spurious = 0, skipped = 0;
  while (cases < 500) {
    const CubicBezierd c = oracle::random_cubic(rng);
    const Point2d a = oracle::random_cubic(rng).start(), b = oracle::random_cubic(rng).start();
    if ((b - a).norm() < 0.05) continue;
    const Point2d n(-(b - a).y(), (b - a).x());
    constexpr int kSamples = 100000;
    std::vector<double> roots;
    bool grazing = false;
    double prev = n.dot(oracle::de_casteljau(c, 0) - a);
    for (int i = 1; i <= kSamples; ++i) {
      const double t = double(i) / kSamples;
      const Point2d q = oracle::de_casteljau(c, t);
      const double side = n.dot(q - a);
      if ((prev < 0) != (side < 0)) {
        const double s = (q - a).dot(b - a) / (b - a).squaredNorm();
        if (std::abs(s) < 1e-3 || std::abs(s - 1) < 1e-3 || t < 1e-3 || t > 1 - 1e-3) grazing = true;
        if (oracle::distance_to_segment(q, a, b) < 1e-3) roots.push_back(t - 0.5 / kSamples);
      }
      prev = side;
    }
    const auto hits = curve_segment_intersections<double>(c, a, b);
    for (std::size_t i = 1; i < hits.size(); ++i) grazing |= hits[i] - hits[i - 1] < 1e-3;
    if (grazing) {
      ++skipped;
      continue;
    }
    ++cases;
    for (const double r : roots) {
      missed += std::none_of(hits.begin(), hits.end(), [&](double h) { return std::abs(h - r) < 2e-5; });
    }
    for (const double h : hits) {
      const bool matched = std::any_of(roots.begin(), roots.end(), [&](double r) { return std::abs(h - r) < 2e-5; });
      spurious += !matched || oracle::distance_to_segment(eval_cubic(c, h), a, b) > 1e-6;
    }
  }
  o.require(missed == 0 && spurious == 0,
            "intersections missed " + std::to_string(missed) + " spurious " + std::to_string(spurious));
  o.note("500 intersection cases, 0 missed/spurious (" + std::to_string(skipped) + " tangent draws redrawn)");
  const double secs = seconds_since(start);
  o.require(secs < 10, "runtime " + fmt("%.1f s", secs));
  o.note(fmt("%.1f s", secs));
  return o;
}

// 2 -------------------------------------------------------------------------

Outcome differentiability() {
  Outcome o;
  const auto start = Clock::now();
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> u(0, 1);
  double worst_color = 0, worst_point = 0, worst_vector = 0;
  for (int scene = 0; scene < 10; ++scene) {
    const int n_paths = 1 + scene % 3;
    std::vector<ClosedPathd> paths;
    for (int i = 0; i < n_paths; ++i) {
      paths.push_back(circle_path<double>({4 + 8 * u(rng), 4 + 8 * u(rng)}, 2 + 4 * u(rng), 8,
                                          {u(rng), u(rng), u(rng), 0.5 + 0.5 * u(rng)}));
      for (Eigen::Index r = 0; r < paths.back().points().rows(); ++r) {
        paths.back().points().row(r) += 0.8 * Eigen::RowVector2d(2 * u(rng) - 1, 2 * u(rng) - 1);
      }
    }
    RasterImage target(16, 16, 3);
    for (int c = 0; c < 3; ++c) {
      for (int y = 0; y < 16; ++y) {
        for (int x = 0; x < 16; ++x) target.at(x, y, c) = u(rng);
      }
    }
    RenderConfig cfg;
    cfg.width = cfg.height = 16;
    cfg.aa_samples = 256;
    cfg.boundary_samples = 2048;
    RenderConfig fine = cfg;
    fine.aa_samples = 2048;
    const auto loss = [&](const std::vector<ClosedPathd>& ps, const RenderConfig& rc) {
      return masked_mse(render(ps, rc), target, nullptr);
    };

    const RenderResult base = render_with_grad(paths, cfg, target);
    for (int i = 0; i < n_paths; ++i) {
      for (int c = 0; c < 4; ++c) {
        const double h = 1e-3;
        auto plus = paths, minus = paths;
        plus[i].fill()[c] += h;
        minus[i].fill()[c] -= h;
        const double fd = (loss(plus, cfg) - loss(minus, cfg)) / (2 * h);
        const double an = base.grad.paths[i].fill[c];
        worst_color = std::max(worst_color, std::abs(an - fd) / std::max(std::abs(fd), 1e-8));
      }
    }

    GradientSet mean = GradientSet::zeros_like(paths);
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
      cfg.rng_seed = mix_seed(seed, std::uint64_t(scene));
      mean.add_scaled(render_with_grad(paths, cfg, target).grad, 1.0 / 8);
    }
    std::vector<std::pair<double, double>> pairs;
    double scale = 0;
    for (int i = 0; i < n_paths; ++i) {
      for (Eigen::Index r = 0; r < paths[i].points().rows(); ++r) {
        for (int axis = 0; axis < 2; ++axis) {
          const double h = 0.005;
          auto plus = paths, minus = paths;
          plus[i].points()(r, axis) += h;
          minus[i].points()(r, axis) -= h;
          const double fd = (loss(plus, fine) - loss(minus, fine)) / (2 * h);
          pairs.emplace_back(mean.paths[i].points(r, axis), fd);
          scale = std::max(scale, std::abs(fd));
        }
      }
    }
    double num = 0, den = 0;
    for (const auto& [an, fd] : pairs) {
      worst_point = std::max(worst_point, std::abs(an - fd) / std::max(std::abs(fd), 0.05 * scale));
      num += (an - fd) * (an - fd);
      den += fd * fd;
    }
    worst_vector = std::max(worst_vector, std::sqrt(num / den));
  }
  o.require(worst_color <= 1e-4, "color gradient rel error " + fmt("%.3g", worst_color));
  o.require(worst_point <= 5e-2, "point gradient rel error " + fmt("%.3g", worst_point));
  o.note("color rel err " + fmt("%.2g", worst_color) + ", point rel err (floor 5% of scene max) " +
         fmt("%.3f", worst_point) + ", point vector rel err " + fmt("%.3f", worst_vector));
  const double secs = seconds_since(start);
  o.require(secs < 120, "runtime " + fmt("%.1f s", secs));
  o.note(fmt("%.1f s", secs));
  return o;
}

// 3 -------------------------------------------------------------------------

Outcome l0_smoothing(const Runs& runs) {
  Outcome o;
  const RasterImage& image = runs.portrait.image;
  const RasterImage same = l0_smooth(image, 0.0);
  bool identical = true;
  for (int c = 0; c < 3; ++c) identical &= (same.plane(c) == image.plane(c)).all();
  o.require(identical, "lambda=0 identity");

  const RasterImage flat = RasterImage::filled(32, 24, {0.3, 0.5, 0.7});
  const RasterImage flat_out = l0_smooth(flat, 0.02);
  double drift = 0;
  for (int c = 0; c < 3; ++c) drift = std::max(drift, (flat_out.plane(c) - flat.plane(c)).abs().maxCoeff());
  o.require(drift < 1e-12, "constant fixpoint drift " + fmt("%.3g", drift));

  // Brute force over piecewise-constant signals with <= 2 breakpoints.
  const std::vector<double> in = {0, 0, 0, 0.05, 1, 1, 1, 1};
  const double lambda = 0.02;
  RasterImage row(8, 1, 3);
  for (int x = 0; x < 8; ++x) row.set_rgb(x, 0, Eigen::Vector3d::Constant(in[x]));
  const auto energy = [&](const std::vector<double>& s) {
    double e = 0;
    int jumps = 0;
    for (int i = 0; i < 8; ++i) {
      e += 3 * (s[i] - in[i]) * (s[i] - in[i]);
      jumps += std::abs(s[(i + 1) % 8] - s[i]) > 1e-4;
    }
    return e + lambda * jumps;
  };
  double best = 1e300;
  for (int b1 = 1; b1 <= 8; ++b1) {
    for (int b2 = b1; b2 <= 8; ++b2) {
      std::vector<double> s(8);
      const auto fill = [&](int a, int b) {
        double m = 0;
        for (int i = a; i < b; ++i) m += in[i];
        for (int i = a; i < b; ++i) s[i] = m / (b - a);
      };
      fill(0, b1);
      if (b1 < 8) fill(b1, b2 == b1 ? 8 : b2);
      if (b2 > b1 && b2 < 8) fill(b2, 8);
      best = std::min(best, energy(s));
    }
  }
  const RasterImage out = l0_smooth(row, lambda);
  std::vector<double> s(8);
  for (int x = 0; x < 8; ++x) s[x] = out.at(x, 0, 0);
  const double got = energy(s);
  o.require(got <= best + 1e-9, "1x8 energy " + fmt("%.6f", got) + " vs brute force " + fmt("%.6f", best));
  o.note("1x8 energy " + fmt("%.6f", got) + " (brute-force best " + fmt("%.6f", best) + ")");

  double worst_rise = 0;
  for (const double lam : {0.0025, 0.005, 0.01, 0.02}) {
    L0Trace trace;
    l0_smooth(image, lam, {}, &trace);
    for (std::size_t i = 1; i < trace.accepted.size(); ++i) {
      worst_rise = std::max(worst_rise, trace.accepted[i] - trace.accepted[i - 1]);
    }
  }
  o.require(worst_rise <= 1e-6, "outer-loop energy rose by " + fmt("%.3g", worst_rise));
  o.note("max outer-loop energy rise " + fmt("%.2g", worst_rise));
  return o;
}

// 4 -------------------------------------------------------------------------

Outcome paper_trends(Runs& runs) {
  Outcome o;
  const auto start = Clock::now();
  const TestPortrait& p = runs.portrait;
  const auto fit = [&](int paths, int levels, Metrics& m, VectorizeLog& log) {
    VectorizeConfig cfg;
    cfg.total_paths = paths;
    cfg.n_levels = levels;
    SvgDocument doc = progressive_vectorize(p.image, p.fore_mask, p.local_mask, cfg, &log);
    m = metrics_of(doc, p.image);
    std::printf("  run paths=%d levels=%d: psnr %.3f ssim %.4f\n", paths, levels, m.psnr, m.ssim);
    std::fflush(stdout);
    return doc;
  };
  runs.p100_l1 = fit(100, 1, runs.m100_l1, runs.log100_l1);
  runs.p100_l5 = fit(100, 5, runs.m100_l5, runs.log100_l5);
  runs.p250_l5 = fit(250, 5, runs.m250_l5, runs.log250_l5);
  runs.seconds = seconds_since(start);
  o.require(runs.m100_l5.psnr > runs.m100_l1.psnr, "(a) levels");
  o.require(runs.m250_l5.psnr > runs.m100_l5.psnr, "(b) paths");
  o.require(runs.m250_l5.psnr >= 20.0, "(c) 250-path PSNR");
  o.note("(a) PSNR 100p/1L " + fmt("%.3f", runs.m100_l1.psnr) + " -> 100p/5L " + fmt("%.3f", runs.m100_l5.psnr));
  o.note("(b) 250p/5L " + fmt("%.3f", runs.m250_l5.psnr));
  o.note("(c) " + fmt("%.3f dB >= 20", runs.m250_l5.psnr));
  o.require(runs.seconds < 1800, "runtime " + fmt("%.0f s", runs.seconds));
  o.note(fmt("%.0f s", runs.seconds));
  return o;
}

// 5 -------------------------------------------------------------------------

Outcome vectorization_contract(const Runs& runs) {
  Outcome o;
  const TestPortrait& p = runs.portrait;
  o.require(runs.p100_l1.path_count() == 100 && runs.p100_l5.path_count() == 100 &&
                runs.p250_l5.path_count() == 250,
            "path counts");
  VectorizeConfig cfg;
  cfg.total_paths = 100;
  cfg.n_levels = 1;
  const SvgDocument again = progressive_vectorize(p.image, p.fore_mask, p.local_mask, cfg);
  o.require(write_svg(again) == write_svg(runs.p100_l1), "byte-identical rerun");

  int local_paths = 0, outside = 0;
  for (const VectorizeLog* log : {&runs.log100_l1, &runs.log100_l5, &runs.log250_l5}) {
    for (const LevelLog& level : log->levels) {
      for (const Insertion& ins : level.insertions) {
        if (ins.layer != Layer::local) continue;
        ++local_paths;
        const int x = int(std::floor(ins.center.x())), y = int(std::floor(ins.center.y()));
        const bool inside = x >= 0 && y >= 0 && x < p.local_mask.width() &&
                            y < p.local_mask.height() && p.local_mask.at(x, y) >= 0.5;
        outside += !inside;
      }
    }
  }
  o.require(outside == 0, std::to_string(outside) + " local path centers outside the local mask");
  o.note("path counts 100/100/250, rerun byte-identical, " + std::to_string(local_paths) +
         " local insertions checked, " + std::to_string(outside) + " outside");
  return o;
}

// 6 -------------------------------------------------------------------------

Outcome animation_contract(const Runs& runs) {
  Outcome o;
  const TestPortrait& p = runs.portrait;
  const SvgDocument& doc = runs.p250_l5;
  const AnimationRig rig = build_rig(doc, p.landmarks.rest);

  const SvgDocument rest = warp_frame(rig, p.landmarks.rest);
  double identity = 0;
  for (const Layer l : kLayers) {
    for (std::size_t i = 0; i < rest.layer(l).size(); ++i) {
      identity = std::max(identity, (rest.layer(l)[i].path.points() - rig.base.layer(l)[i].path.points())
                                        .cwiseAbs().maxCoeff());
    }
  }
  o.require(identity < 1e-9, "rest warp moved " + fmt("%.3g", identity));

  bool background_fixed = true, order_fixed = true;
  double worst_reweld = 0;
  for (const auto& frame : p.landmarks.frames) {
    WarpStats stats;
    const SvgDocument out = warp_frame(rig, frame, &stats);
    worst_reweld = std::max(worst_reweld, stats.max_reweld);
    const auto& bg = out.layer(Layer::background);
    for (std::size_t i = 0; i < bg.size(); ++i) {
      background_fixed &= bg[i].path.points() == doc.layer(Layer::background)[i].path.points() &&
                          bg[i].path.fill() == doc.layer(Layer::background)[i].path.fill();
    }
    for (const Layer l : kLayers) {
      order_fixed &= out.layer(l).size() == doc.layer(l).size();
      for (std::size_t i = 0; order_fixed && i < out.layer(l).size(); ++i) {
        order_fixed &= out.layer(l)[i].id == doc.layer(l)[i].id;
      }
    }
    const std::string a = write_svg(out);
    background_fixed &= a.substr(0, a.find("<g id=\"local\">")) ==
                        write_svg(doc).substr(0, write_svg(doc).find("<g id=\"local\">"));
  }
  o.require(background_fixed, "background changed");
  o.require(order_fixed, "path count or order changed");
  o.require(worst_reweld <= 0.5, "re-weld " + fmt("%.3f px", worst_reweld));

  const auto& jaw = p.landmarks.frames[kJawOpenFrame];
  const AnimationRig flat_rig = build_rig(doc, p.landmarks.rest, {false});
  const RasterImage seg = render_document(warp_frame(rig, jaw), kPortraitSize, kPortraitSize, 16);
  const RasterImage unseg = render_document(warp_frame(flat_rig, jaw), kPortraitSize, kPortraitSize, 16);
  const PixelBox box = mouth_region(p.landmarks, kPortraitSize, kPortraitSize);
  double diff = 0;
  for (int y = box.y0; y < box.y1; ++y) {
    for (int x = box.x0; x < box.x1; ++x) {
      for (int c = 0; c < 3; ++c) diff = std::max(diff, std::abs(seg.at(x, y, c) - unseg.at(x, y, c)));
    }
  }
  o.require(diff > 10.0 / 255, "unsegmented mouth difference " + fmt("%.1f/255", diff * 255));
  o.note("rest identity " + fmt("%.1g", identity) + ", background fixed, order fixed over " +
         std::to_string(p.landmarks.frames.size()) + " frames, max re-weld " + fmt("%.3f px", worst_reweld) +
         ", unsegmented vs segmented mouth diff " + fmt("%.1f/255", diff * 255));
  return o;
}

// 7 -------------------------------------------------------------------------

Outcome scalability(const Runs& runs) {
  Outcome o;
  double worst = 0, matched = 0;
  for (const SvgDocument* doc : {&runs.p100_l1, &runs.p100_l5, &runs.p250_l5}) {
    const int w = doc->width, h = doc->height;
    const RasterImage one = render_document(*doc, w, h, 64);
    const auto max_diff = [&](const RasterImage& two) {
      double d = 0;
      for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < h; ++y) {
          for (int x = 0; x < w; ++x) {
            const double down = 0.25 * (two.at(2 * x, 2 * y, c) + two.at(2 * x + 1, 2 * y, c) +
                                        two.at(2 * x, 2 * y + 1, c) + two.at(2 * x + 1, 2 * y + 1, c));
            d = std::max(d, std::abs(down - one.at(x, y, c)));
          }
        }
      }
      return d;
    };
    worst = std::max(worst, max_diff(render_document(*doc, 2 * w, 2 * h, 64)));
    // At aa=32 the 2x render samples the same lattice as the 1x one.
    matched = std::max(matched, max_diff(render_document(*doc, 2 * w, 2 * h, 32)));
  }
  o.require(worst <= 2.0 / 255, "max diff " + fmt("%.2f/255", worst * 255));
  o.note("3 produced SVGs, max per-pixel diff " + fmt("%.3f/255", worst * 255) +
         " at aa=64 for both (" + fmt("%.3f/255", matched * 255) + " with the 2x render at aa=32)");
  return o;
}

// 8 -------------------------------------------------------------------------

Outcome svg_round_trip() {
  Outcome o;
  std::mt19937_64 rng(808);
  std::uniform_real_distribution<double> u(0, 1);
  double geo = 0, col = 0;
  std::size_t paths = 0;
  for (int trial = 0; trial < 50; ++trial) {
    SvgDocument doc;
    doc.width = 16 + int(300 * u(rng));
    doc.height = 16 + int(300 * u(rng));
    for (const Layer l : kLayers) {
      const int n = int(8 * u(rng));
      for (int i = 0; i < n; ++i) {
        const int segs = 4 + int(9 * u(rng));
        ClosedPathd::PointList pts(3 * segs, 2);
        for (int r = 0; r < 3 * segs; ++r) pts.row(r) << (1.4 * u(rng) - 0.2) * doc.width, (1.4 * u(rng) - 0.2) * doc.height;
        doc.layer(l).push_back({"path" + std::to_string(paths++), ClosedPathd(pts, {u(rng), u(rng), u(rng), u(rng)})});
      }
    }
    const SvgDocument back = parse_svg(write_svg(doc));
    for (const Layer l : kLayers) {
      if (back.layer(l).size() != doc.layer(l).size()) {
        o.require(false, "path count changed");
        return o;
      }
      for (std::size_t i = 0; i < doc.layer(l).size(); ++i) {
        const auto& a = doc.layer(l)[i].path;
        const auto& b = back.layer(l)[i].path;
        if (a.points().rows() != b.points().rows()) {
          o.require(false, "point count changed");
          return o;
        }
        geo = std::max(geo, (a.points() - b.points()).cwiseAbs().maxCoeff());
        col = std::max(col, (a.fill() - b.fill()).cwiseAbs().maxCoeff());
      }
    }
  }
  o.require(geo <= 1e-4, "geometry error " + fmt("%.3g", geo));
  o.require(col <= 1.0 / 255, "color error " + fmt("%.3g", col));
  o.note("50 documents, " + std::to_string(paths) + " paths, geometry err " + fmt("%.2g", geo) +
         ", color err " + fmt("%.3f/255", col * 255));
  return o;
}

}  // namespace

int main() {
  Runs runs;
  int failures = 0;
  const auto report = [&](int id, const char* name, const std::function<Outcome()>& check) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failures += !o.pass;
    std::printf("[%s] %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
  };
  report(1, "geometry exactness", geometry_exactness);
  report(2, "differentiability", differentiability);
  report(3, "l0 smoothing", [&] { return l0_smoothing(runs); });
  report(4, "paper trends at desk scale", [&] { return paper_trends(runs); });
  report(5, "vectorization contract", [&] { return vectorization_contract(runs); });
  report(6, "animation contract", [&] { return animation_contract(runs); });
  report(7, "scalability", [&] { return scalability(runs); });
  report(8, "svg round-trip", svg_round_trip);
  std::printf("%d of 8 criteria passed\n", 8 - failures);
  return failures == 0 ? 0 : 1;
}
