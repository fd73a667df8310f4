#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vecanim/animate.hpp"
#include "vecanim/config.hpp"
#include "vecanim/raster.hpp"

namespace vecanim {

struct Metrics {
  double mse = 0;
  double psnr = 0;
  double ssim = 0;
};

Metrics compute_metrics(const RasterImage& a, const RasterImage& b);
// "mse=... psnr=... ssim=..."; an infinite PSNR prints as "inf".
std::string format_metrics(const Metrics& m);

struct VectorizeReport {
  Metrics metrics;
  std::filesystem::path svg;
  std::filesystem::path log;
  double seconds = 0;
};

// Loads inputs, vectorizes, writes the SVG (and the JSON log when cfg.log is
// set) and reports metrics of the final render against the input image.
VectorizeReport cmd_vectorize(const CliConfig& cfg);

AnimateResult cmd_animate(const std::filesystem::path& svg, const std::filesystem::path& landmarks,
                          const std::filesystem::path& out_dir,
                          const std::optional<RenderConfig>& render_cfg);

// Renders the document scaled to width x height.
RasterImage render_document(const SvgDocument& doc, int width, int height, int aa_samples);
void cmd_render(const std::filesystem::path& svg, int width, int height,
                const std::filesystem::path& out, int aa_samples);

Metrics cmd_metrics(const std::filesystem::path& a, const std::filesystem::path& b);

struct AblationRow {
  int paths = 0;
  int levels = 0;
  Metrics metrics;
  double seconds = 0;
};

inline constexpr const char* kAblationHeader = "paths,levels,mse,psnr,ssim,seconds";

// Runs every (paths, levels) cell sequentially with the base config's seed and
// writes one CSV row per cell (header only for an empty grid).
std::vector<AblationRow> cmd_ablate(const CliConfig& base, const std::vector<int>& grid_paths,
                                    const std::vector<int>& grid_levels,
                                    const std::filesystem::path& csv);

std::string format_ablation_row(const AblationRow& row);

}  // namespace vecanim
