#include "vecanim/commands.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "vecanim/svg.hpp"

namespace vecanim {

using nlohmann::json;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

json json_number(double v) { return std::isfinite(v) ? json(v) : json(number(v)); }

Mask load_optional_mask(const std::string& path, int width, int height) {
  if (path.empty()) return Mask(width, height);
  Mask m = load_mask(path);
  if (m.width() != width || m.height() != height) {
    throw DomainError("mask '" + path + "' is " + std::to_string(m.width()) + "x" +
                      std::to_string(m.height()) + ", image is " + std::to_string(width) + "x" +
                      std::to_string(height));
  }
  return m;
}

json log_json(const VectorizeLog& log) {
  json levels = json::array();
  for (const LevelLog& l : log.levels) {
    json loss = json::array(), merged = json::array();
    for (const double v : l.loss) loss.push_back(v);
    for (const double v : l.merged) merged.push_back(v);
    json placed = json::array();
    for (const Insertion& ins : l.insertions) {
      placed.push_back({{"id", ins.id},
                        {"layer", std::string(layer_name(ins.layer))},
                        {"center", {ins.center.x(), ins.center.y()}}});
    }
    levels.push_back({{"level", l.level},
                      {"lambda", l.lambda},
                      {"inserted", l.inserted},
                      {"reseeded", l.reseeded},
                      {"radius", l.radius},
                      {"iterations", l.iterations},
                      {"best_merged", l.best_merged},
                      {"psnr", json_number(l.psnr)},
                      {"loss", loss},
                      {"merged", merged},
                      {"insertions", placed}});
  }
  return levels;
}

}  // namespace

Metrics compute_metrics(const RasterImage& a, const RasterImage& b) {
  return {mse(a, b), psnr(a, b), ssim(a, b)};
}

std::string format_metrics(const Metrics& m) {
  return "mse=" + number(m.mse) + " psnr=" + number(m.psnr) + " ssim=" + number(m.ssim);
}

RasterImage render_document(const SvgDocument& doc, int width, int height, int aa_samples) {
  if (width <= 0 || height <= 0) throw DomainError("render: width and height must be positive");
  if (doc.width <= 0 || doc.height <= 0) throw DomainError("render: document has no size");
  const double sx = double(width) / doc.width, sy = double(height) / doc.height;
  std::vector<ClosedPathd> paths = doc.flattened();
  for (auto& p : paths) {
    p.points().col(0) *= sx;
    p.points().col(1) *= sy;
  }
  RenderConfig cfg;
  cfg.width = width;
  cfg.height = height;
  cfg.aa_samples = aa_samples;
  return render(paths, cfg);
}

VectorizeReport cmd_vectorize(const CliConfig& cfg) {
  if (cfg.image.empty()) throw DomainError("vectorize: no input image given");
  const auto start = std::chrono::steady_clock::now();
  const RasterImage image = load_image(cfg.image).rgb_only();
  const Mask fore = load_optional_mask(cfg.fore_mask, image.width(), image.height());
  const Mask local = load_optional_mask(cfg.local_mask, image.width(), image.height());

  VectorizeLog log;
  const SvgDocument doc = progressive_vectorize(image, fore, local, cfg.vectorize, &log);
  VectorizeReport report;
  report.svg = resolve_output(cfg.out);
  if (report.svg.has_parent_path()) std::filesystem::create_directories(report.svg.parent_path());
  save_svg(doc, report.svg);

  const RasterImage final_render =
      render_document(doc, image.width(), image.height(), cfg.render_aa);
  report.metrics = compute_metrics(final_render, image);
  report.seconds = seconds_since(start);
  if (!cfg.log.empty()) {
    report.log = resolve_output(cfg.log);
    const json j = {{"config", json::parse(config_to_json(cfg))},
                    {"levels", log_json(log)},
                    {"final",
                     {{"mse", report.metrics.mse},
                      {"psnr", json_number(report.metrics.psnr)},
                      {"ssim", report.metrics.ssim}}},
                    {"seconds", report.seconds}};
    std::ofstream out(report.log);
    if (!out) throw IoError("cannot write log '" + report.log.string() + "'");
    out << j.dump(1) << '\n';
  }
  return report;
}

AnimateResult cmd_animate(const std::filesystem::path& svg, const std::filesystem::path& landmarks,
                          const std::filesystem::path& out_dir,
                          const std::optional<RenderConfig>& render_cfg) {
  const SvgDocument doc = load_svg(svg);
  const LandmarkSequence seq = load_landmarks(landmarks);
  return animate(doc, seq, resolve_output(out_dir), render_cfg);
}

void cmd_render(const std::filesystem::path& svg, int width, int height,
                const std::filesystem::path& out, int aa_samples) {
  if (width <= 0 || height <= 0) throw DomainError("render: width and height must be positive");
  save_image(render_document(load_svg(svg), width, height, aa_samples), resolve_output(out));
}

Metrics cmd_metrics(const std::filesystem::path& a, const std::filesystem::path& b) {
  return compute_metrics(load_image(a), load_image(b));
}

std::string format_ablation_row(const AblationRow& row) {
  return std::to_string(row.paths) + "," + std::to_string(row.levels) + "," +
         number(row.metrics.mse) + "," + number(row.metrics.psnr) + "," +
         number(row.metrics.ssim) + "," + number(row.seconds);
}

std::vector<AblationRow> cmd_ablate(const CliConfig& base, const std::vector<int>& grid_paths,
                                    const std::vector<int>& grid_levels,
                                    const std::filesystem::path& csv) {
  const auto csv_path = resolve_output(csv);
  std::ofstream out(csv_path);
  if (!out) throw IoError("cannot write CSV '" + csv_path.string() + "'");
  out << kAblationHeader << '\n';
  std::vector<AblationRow> rows;
  if (grid_paths.empty() || grid_levels.empty()) return rows;

  if (base.image.empty()) throw DomainError("ablate: no input image given");
  const RasterImage image = load_image(base.image).rgb_only();
  const Mask fore = load_optional_mask(base.fore_mask, image.width(), image.height());
  const Mask local = load_optional_mask(base.local_mask, image.width(), image.height());
  for (const int paths : grid_paths) {
    for (const int levels : grid_levels) {
      VectorizeConfig cfg = base.vectorize;
      cfg.total_paths = paths;
      cfg.n_levels = levels;
      const auto start = std::chrono::steady_clock::now();
      const SvgDocument doc = progressive_vectorize(image, fore, local, cfg);
      AblationRow row;
      row.paths = paths;
      row.levels = levels;
      row.metrics = compute_metrics(
          render_document(doc, image.width(), image.height(), base.render_aa), image);
      row.seconds = seconds_since(start);
      out << format_ablation_row(row) << '\n' << std::flush;
      rows.push_back(row);
    }
  }
  if (!out) throw IoError("failed writing CSV '" + csv_path.string() + "'");
  return rows;
}

}  // namespace vecanim
