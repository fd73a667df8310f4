#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <limits>
#include <vector>

#include "vecanim/errors.hpp"

namespace vecanim {

// One image channel, height rows by width columns.
using Plane = Eigen::ArrayXXd;

// Planar RGB(A) image with channel values in [0, 1].
class RasterImage {
 public:
  RasterImage() = default;
  RasterImage(int width, int height, int channels = 3, double value = 0.0);

  static RasterImage filled(int width, int height, const Eigen::Vector3d& rgb);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return static_cast<int>(planes_.size()); }
  Eigen::Index pixel_count() const { return Eigen::Index(width_) * height_; }

  double& at(int x, int y, int c) { return planes_[static_cast<std::size_t>(c)](y, x); }
  double at(int x, int y, int c) const { return planes_[static_cast<std::size_t>(c)](y, x); }
  Eigen::Vector3d rgb(int x, int y) const;
  void set_rgb(int x, int y, const Eigen::Vector3d& rgb);

  Plane& plane(int c) { return planes_[static_cast<std::size_t>(c)]; }
  const Plane& plane(int c) const { return planes_[static_cast<std::size_t>(c)]; }

  // Copy restricted to the first three channels.
  RasterImage rgb_only() const;
  void clamp01();

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<Plane> planes_;
};

// Soft per-pixel mask in [0, 1]; binary masks use {0, 1}.
struct Mask {
  Plane values;

  Mask() = default;
  Mask(int width, int height, double value = 0.0) : values(Plane::Constant(height, width, value)) {}
  explicit Mask(Plane v) : values(std::move(v)) {}

  int width() const { return static_cast<int>(values.cols()); }
  int height() const { return static_cast<int>(values.rows()); }
  double at(int x, int y) const { return values(y, x); }
  bool binary_at(int x, int y) const { return values(y, x) >= 0.5; }
};

// PNG (8-bit gray/RGB/RGBA) or binary PPM, detected from the file header.
RasterImage load_image(const std::filesystem::path& path);
// Format chosen from the extension (.png or .ppm); values are clamped to [0, 1].
void save_image(const RasterImage& image, const std::filesystem::path& path);

// Grayscale mask; color files are reduced to their first channel.
Mask load_mask(const std::filesystem::path& path);
void save_mask(const Mask& mask, const std::filesystem::path& path);

// Returned by psnr() for identical images.
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

double mse(const RasterImage& a, const RasterImage& b);
double psnr(const RasterImage& a, const RasterImage& b);
// Single-scale SSIM on Rec. 601 luma, 11x11 Gaussian window (sigma 1.5),
// k1 = 0.01, k2 = 0.03, averaged over fully contained windows.
double ssim(const RasterImage& a, const RasterImage& b);

Plane luma(const RasterImage& image);

}  // namespace vecanim
