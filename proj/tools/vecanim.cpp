#include <CLI11.hpp>

#include <iostream>
#include <sstream>

#include "vecanim/commands.hpp"
#include "vecanim/svg.hpp"

using namespace vecanim;

namespace {

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw DomainError("invalid integer list entry '" + item + "'");
    }
  }
  return out;
}

// Vectorization flags shared by `vectorize` and `ablate`. Values are only
// applied when given, so they override the config file.
struct VectorizeFlags {
  std::string config;
  std::string image, fore_mask, local_mask;
  std::optional<int> paths, levels, segments, iters_per_level, iters_final, aa, boundary, render_aa;
  std::optional<double> lr_point, lr_color, lambda_max;
  std::optional<std::uint64_t> seed;

  void add(CLI::App* app, bool with_counts) {
    app->add_option("--config", config, "JSON config file");
    app->add_option("--image", image, "Input raster image (PNG or PPM)");
    app->add_option("--fore-mask", fore_mask, "Foreground mask (grayscale PNG)");
    app->add_option("--local-mask", local_mask, "Local (eyes, mouth) mask (grayscale PNG)");
    if (with_counts) {
      app->add_option("--paths", paths, "Total number of paths");
      app->add_option("--levels", levels, "Number of smoothing levels");
    }
    app->add_option("--segments", segments, "Cubic segments per path");
    app->add_option("--iters-per-level", iters_per_level, "Adam iterations per level");
    app->add_option("--iters-final", iters_final, "Adam iterations on the finest level");
    app->add_option("--lr-point", lr_point, "Learning rate for control points");
    app->add_option("--lr-color", lr_color, "Learning rate for colors");
    app->add_option("--lambda-max", lambda_max, "Strongest smoothing weight");
    app->add_option("--aa-samples", aa, "Supersamples per axis while optimizing");
    app->add_option("--boundary-samples", boundary, "Edge samples per curve for gradients");
    app->add_option("--render-aa", render_aa, "Supersamples per axis for final renders");
    app->add_option("--seed", seed, "Random seed");
  }

  CliConfig resolve() const {
    CliConfig cfg;
    if (!config.empty()) cfg = load_config(cfg, config);
    if (!image.empty()) cfg.image = image;
    if (!fore_mask.empty()) cfg.fore_mask = fore_mask;
    if (!local_mask.empty()) cfg.local_mask = local_mask;
    VectorizeConfig& v = cfg.vectorize;
    if (paths) v.total_paths = *paths;
    if (levels) v.n_levels = *levels;
    if (segments) v.segments_per_path = *segments;
    if (iters_per_level) v.iters_per_level = *iters_per_level;
    if (iters_final) v.iters_final = *iters_final;
    if (lr_point) v.lr_point = *lr_point;
    if (lr_color) v.lr_color = *lr_color;
    if (lambda_max) v.lambda_max = *lambda_max;
    if (aa) v.aa_samples = *aa;
    if (boundary) v.boundary_samples = *boundary;
    if (render_aa) cfg.render_aa = *render_aa;
    if (seed) v.rng_seed = *seed;
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Layered SVG portrait vectorization and landmark-driven animation"};
  app.require_subcommand(1);

  VectorizeFlags vflags;
  std::string out_svg, log_path;
  auto* vec = app.add_subcommand("vectorize", "Fit layered cubic Bezier paths to an image");
  vflags.add(vec, true);
  vec->add_option("--out", out_svg, "Output SVG");
  vec->add_option("--log", log_path, "Optional JSON training log");

  std::string anim_svg, anim_landmarks, anim_out;
  bool anim_png = false;
  int anim_w = 0, anim_h = 0, anim_aa = 64;
  auto* anim = app.add_subcommand("animate", "Warp an SVG through a landmark sequence");
  anim->add_option("--svg", anim_svg, "Input SVG")->required();
  anim->add_option("--landmarks", anim_landmarks, "Landmark JSON")->required();
  anim->add_option("--out-dir", anim_out, "Output directory")->required();
  anim->add_flag("--png", anim_png, "Also render each frame to PNG");
  anim->add_option("--width", anim_w, "PNG width (default: SVG width)");
  anim->add_option("--height", anim_h, "PNG height (default: SVG height)");
  anim->add_option("--aa-samples", anim_aa, "Supersamples per axis for PNGs");

  std::string render_svg, render_out;
  int render_w = 0, render_h = 0, render_aa = 64;
  auto* ren = app.add_subcommand("render", "Rasterize an SVG produced by this tool");
  ren->add_option("--svg", render_svg, "Input SVG")->required();
  ren->add_option("--width", render_w, "Output width")->required();
  ren->add_option("--height", render_h, "Output height")->required();
  ren->add_option("--out", render_out, "Output PNG or PPM")->required();
  ren->add_option("--aa-samples", render_aa, "Supersamples per axis");

  std::string metric_a, metric_b;
  auto* met = app.add_subcommand("metrics", "Compare two images (MSE, PSNR, SSIM)");
  met->add_option("a", metric_a, "First image")->required();
  met->add_option("b", metric_b, "Second image")->required();

  VectorizeFlags aflags;
  std::string grid_paths = "100,250", grid_levels = "1,5", csv = "ablation.csv";
  auto* abl = app.add_subcommand("ablate", "Vectorize over a (paths, levels) grid");
  aflags.add(abl, false);
  abl->add_option("--grid-paths", grid_paths, "Comma-separated path counts");
  abl->add_option("--grid-levels", grid_levels, "Comma-separated level counts");
  abl->add_option("--csv", csv, "Output CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (vec->parsed()) {
      CliConfig cfg = vflags.resolve();
      if (!out_svg.empty()) cfg.out = out_svg;
      if (!log_path.empty()) cfg.log = log_path;
      const VectorizeReport r = cmd_vectorize(cfg);
      std::cout << "wrote " << r.svg.string() << "\n" << format_metrics(r.metrics) << "\n";
    } else if (anim->parsed()) {
      std::optional<RenderConfig> rc;
      if (anim_png) {
        const SvgDocument probe = load_svg(anim_svg);
        if (anim_w == 0) anim_w = probe.width;
        if (anim_h == 0) anim_h = probe.height;
        if (anim_w != probe.width || anim_h != probe.height) {
          throw DomainError("animate: PNG size must match the SVG size");
        }
        rc = RenderConfig{};
        rc->width = anim_w;
        rc->height = anim_h;
        rc->aa_samples = anim_aa;
        rc->validate();
      }
      const AnimateResult r = cmd_animate(anim_svg, anim_landmarks, anim_out, rc);
      double worst = 0;
      for (const auto& s : r.stats) worst = std::max(worst, s.max_reweld);
      std::cout << "wrote " << r.svg_files.size() << " frames (max re-weld " << worst
                << " px)\n";
    } else if (ren->parsed()) {
      cmd_render(render_svg, render_w, render_h, render_out, render_aa);
      std::cout << "wrote " << resolve_output(render_out).string() << "\n";
    } else if (met->parsed()) {
      std::cout << format_metrics(cmd_metrics(metric_a, metric_b)) << "\n";
    } else if (abl->parsed()) {
      const CliConfig cfg = aflags.resolve();
      const auto rows =
          cmd_ablate(cfg, parse_int_list(grid_paths), parse_int_list(grid_levels), csv);
      std::cout << kAblationHeader << "\n";
      for (const auto& row : rows) std::cout << format_ablation_row(row) << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
