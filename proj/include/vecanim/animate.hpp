#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vecanim/diffrast.hpp"
#include "vecanim/document.hpp"
#include "vecanim/geometry.hpp"

namespace vecanim {

// 68-point detector convention: 0-16 jaw, 17-26 brows, 27-35 nose,
// 36-41 and 42-47 eyes, 48-67 mouth.
inline constexpr int kLandmarkCount = 68;

struct LandmarkSequence {
  double fps = 25.0;
  std::vector<Point2d> rest;
  std::vector<std::vector<Point2d>> frames;
};

LandmarkSequence parse_landmarks(const std::string& json_text);
std::string serialize_landmarks(const LandmarkSequence& seq);
LandmarkSequence load_landmarks(const std::filesystem::path& path);
void save_landmarks(const LandmarkSequence& seq, const std::filesystem::path& path);

// Throws ParseError unless every point lies within the image box expanded by
// 25% on each side.
void check_landmarks_in_frame(const LandmarkSequence& seq, int width, int height);

// Corners and edge midpoints, clockwise from the top-left corner.
std::vector<Point2d> border_points(int width, int height);

// Splits every foreground and local segment wherever it crosses a
// triangulation edge. Background paths are copied unchanged.
SvgDocument segment_paths(const SvgDocument& doc, const Triangulation& tri);

enum class LocalRig { right_eye, left_eye, mouth };

struct RigOptions {
  // Without segmentation every stored control point follows the triangle
  // containing it, which distorts curves spanning several triangles.
  bool segment = true;
};

struct AnimationRig {
  SvgDocument base;
  // Rest landmarks followed by border_points(); indices are stable labels.
  Triangulation triangulation;
  int landmark_count = 0;
  bool segmented = true;
  // Per foreground path: one triangle per segment (segmented rigs) or per
  // stored point (unsegmented). -1 leaves the geometry in place.
  std::vector<std::vector<int>> foreground_triangles;
  std::vector<LocalRig> local_rigs;
  std::vector<Point2d> rest;
};

AnimationRig build_rig(const SvgDocument& doc, std::span<const Point2d> rest,
                       const RigOptions& options = {});

struct WarpStats {
  // Largest distance any welded joint moved from either of its two images.
  double max_reweld = 0;
};

SvgDocument warp_frame(const AnimationRig& rig, std::span<const Point2d> frame,
                       WarpStats* stats = nullptr);

// Similarity without rotation taking rest eye corners a, b onto frame corners.
AffineTransformd corner_similarity(const Point2d& rest_a, const Point2d& rest_b,
                                   const Point2d& frame_a, const Point2d& frame_b);

// Least-squares affine from >= 3 point pairs.
AffineTransformd fit_affine(std::span<const Point2d> src, std::span<const Point2d> dst);

struct AnimateResult {
  std::vector<std::filesystem::path> svg_files;
  std::vector<std::filesystem::path> png_files;
  std::vector<WarpStats> stats;
};

// Writes frame_00000.svg ... (and .png when render_cfg is given) into out_dir.
AnimateResult animate(const SvgDocument& doc, const LandmarkSequence& landmarks,
                      const std::filesystem::path& out_dir,
                      const std::optional<RenderConfig>& render_cfg = std::nullopt);

}  // namespace vecanim
