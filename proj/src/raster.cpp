#include "vecanim/raster.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

namespace vecanim {

RasterImage::RasterImage(int width, int height, int channels, double value)
    : width_(width), height_(height) {
  if (width <= 0 || height <= 0) throw DomainError("RasterImage: dimensions must be positive");
  if (channels < 1 || channels > 4) throw DomainError("RasterImage: 1 to 4 channels supported");
  planes_.assign(static_cast<std::size_t>(channels), Plane::Constant(height, width, value));
}

RasterImage RasterImage::filled(int width, int height, const Eigen::Vector3d& rgb) {
  RasterImage img(width, height, 3);
  for (int c = 0; c < 3; ++c) img.plane(c).setConstant(rgb[c]);
  return img;
}

Eigen::Vector3d RasterImage::rgb(int x, int y) const {
  if (channels() < 3) return Eigen::Vector3d::Constant(at(x, y, 0));
  return {at(x, y, 0), at(x, y, 1), at(x, y, 2)};
}

void RasterImage::set_rgb(int x, int y, const Eigen::Vector3d& rgb) {
  for (int c = 0; c < std::min(3, channels()); ++c) at(x, y, c) = rgb[c];
}

RasterImage RasterImage::rgb_only() const {
  RasterImage out(width_, height_, 3);
  for (int c = 0; c < 3; ++c) out.plane(c) = plane(std::min(c, channels() - 1));
  return out;
}

void RasterImage::clamp01() {
  for (auto& p : planes_) p = p.max(0.0).min(1.0);
}

namespace {

std::string path_str(const std::filesystem::path& p) { return p.string(); }

std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

bool has_png_signature(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  unsigned char sig[8] = {};
  in.read(reinterpret_cast<char*>(sig), 8);
  return in.gcount() == 8 && png_sig_cmp(sig, 0, 8) == 0;
}

// 8-bit interleaved buffer plus geometry; shared by the PNG and PPM paths.
struct Interleaved {
  int width = 0, height = 0, channels = 0;
  std::vector<std::uint8_t> data;
};

Interleaved read_png(const std::filesystem::path& path, bool gray) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path_str(path).c_str())) {
    throw IoError("cannot read PNG '" + path_str(path) + "': " + img.message);
  }
  const bool has_alpha = (img.format & PNG_FORMAT_FLAG_ALPHA) != 0;
  img.format = gray ? PNG_FORMAT_GRAY : (has_alpha ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB);
  Interleaved out;
  out.width = static_cast<int>(img.width);
  out.height = static_cast<int>(img.height);
  out.channels = static_cast<int>(PNG_IMAGE_PIXEL_CHANNELS(img.format));
  out.data.resize(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, out.data.data(), 0, nullptr)) {
    png_image_free(&img);
    throw IoError("cannot decode PNG '" + path_str(path) + "': " + img.message);
  }
  return out;
}

void write_png(const Interleaved& buf, const std::filesystem::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(buf.width);
  img.height = static_cast<png_uint_32>(buf.height);
  img.format = buf.channels == 1   ? PNG_FORMAT_GRAY
               : buf.channels == 4 ? PNG_FORMAT_RGBA
                                   : PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&img, path_str(path).c_str(), 0, buf.data.data(), 0, nullptr)) {
    throw IoError("cannot write PNG '" + path_str(path) + "': " + img.message);
  }
}

// Next whitespace-delimited header token, skipping '#' comments.
std::string ppm_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      if (!tok.empty()) break;
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

Interleaved read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path_str(path) + "'");
  const std::string magic = ppm_token(in);
  if (magic != "P6" && magic != "P5") {
    throw IoError("unsupported image format in '" + path_str(path) + "'");
  }
  Interleaved out;
  int maxval = 0;
  try {
    out.width = std::stoi(ppm_token(in));
    out.height = std::stoi(ppm_token(in));
    maxval = std::stoi(ppm_token(in));
  } catch (const std::exception&) {
    throw IoError("malformed PPM header in '" + path_str(path) + "'");
  }
  if (out.width <= 0 || out.height <= 0 || maxval <= 0 || maxval > 65535) {
    throw IoError("malformed PPM header in '" + path_str(path) + "'");
  }
  out.channels = magic == "P6" ? 3 : 1;
  const std::size_t count = std::size_t(out.width) * out.height * out.channels;
  const int bytes = maxval > 255 ? 2 : 1;
  std::vector<std::uint8_t> raw(count * bytes);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    throw IoError("truncated PPM data in '" + path_str(path) + "'");
  }
  out.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const unsigned v = bytes == 2 ? (unsigned(raw[2 * i]) << 8) | raw[2 * i + 1] : raw[i];
    out.data[i] = quantize(double(v) / maxval);
  }
  return out;
}

void write_ppm(const Interleaved& buf, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path_str(path) + "'");
  out << (buf.channels == 1 ? "P5" : "P6") << "\n" << buf.width << " " << buf.height << "\n255\n";
  if (buf.channels == 1 || buf.channels == 3) {
    out.write(reinterpret_cast<const char*>(buf.data.data()),
              static_cast<std::streamsize>(buf.data.size()));
  } else {
    for (std::size_t i = 0; i < buf.data.size(); i += 4) {
      out.write(reinterpret_cast<const char*>(&buf.data[i]), 3);
    }
  }
  if (!out) throw IoError("cannot write '" + path_str(path) + "'");
}

Interleaved read_any(const std::filesystem::path& path, bool gray) {
  if (!std::filesystem::exists(path)) throw IoError("no such file '" + path_str(path) + "'");
  if (has_png_signature(path)) return read_png(path, gray);
  return read_ppm(path);
}

void write_any(const Interleaved& buf, const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".png") {
    write_png(buf, path);
  } else if (ext == ".ppm" || ext == ".pgm") {
    write_ppm(buf, path);
  } else {
    throw IoError("unsupported output format for '" + path_str(path) + "'");
  }
}

}  // namespace

RasterImage load_image(const std::filesystem::path& path) {
  const Interleaved buf = read_any(path, false);
  const int channels = buf.channels == 1 ? 3 : buf.channels;
  RasterImage img(buf.width, buf.height, channels);
  for (int y = 0; y < buf.height; ++y) {
    for (int x = 0; x < buf.width; ++x) {
      const std::size_t base = (std::size_t(y) * buf.width + x) * buf.channels;
      for (int c = 0; c < channels; ++c) {
        const int src = buf.channels == 1 ? 0 : c;
        img.at(x, y, c) = buf.data[base + src] / 255.0;
      }
    }
  }
  return img;
}

void save_image(const RasterImage& image, const std::filesystem::path& path) {
  Interleaved buf;
  buf.width = image.width();
  buf.height = image.height();
  buf.channels = image.channels() == 4 ? 4 : 3;
  buf.data.resize(std::size_t(buf.width) * buf.height * buf.channels);
  for (int y = 0; y < buf.height; ++y) {
    for (int x = 0; x < buf.width; ++x) {
      const std::size_t base = (std::size_t(y) * buf.width + x) * buf.channels;
      for (int c = 0; c < buf.channels; ++c) {
        buf.data[base + c] = quantize(image.at(x, y, std::min(c, image.channels() - 1)));
      }
    }
  }
  write_any(buf, path);
}

Mask load_mask(const std::filesystem::path& path) {
  const Interleaved buf = read_any(path, true);
  Mask m(buf.width, buf.height);
  for (int y = 0; y < buf.height; ++y) {
    for (int x = 0; x < buf.width; ++x) {
      m.values(y, x) = buf.data[(std::size_t(y) * buf.width + x) * buf.channels] / 255.0;
    }
  }
  return m;
}

void save_mask(const Mask& mask, const std::filesystem::path& path) {
  Interleaved buf;
  buf.width = mask.width();
  buf.height = mask.height();
  buf.channels = 1;
  buf.data.resize(std::size_t(buf.width) * buf.height);
  for (int y = 0; y < buf.height; ++y) {
    for (int x = 0; x < buf.width; ++x) {
      buf.data[std::size_t(y) * buf.width + x] = quantize(mask.values(y, x));
    }
  }
  write_any(buf, path);
}

namespace {

void check_same_size(const RasterImage& a, const RasterImage& b, const char* what) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw DomainError(std::string(what) + ": image dimensions differ");
  }
}

int color_channels(const RasterImage& img) { return std::min(3, img.channels()); }

// 'valid' correlation of a plane with a separable kernel.
Plane filter_valid(const Plane& src, const Eigen::VectorXd& k) {
  const Eigen::Index w = k.size();
  const Eigen::Index rows = src.rows() - w + 1, cols = src.cols() - w + 1;
  Plane tmp = Plane::Zero(src.rows(), cols);
  for (Eigen::Index i = 0; i < w; ++i) tmp += k[i] * src.middleCols(i, cols);
  Plane out = Plane::Zero(rows, cols);
  for (Eigen::Index i = 0; i < w; ++i) out += k[i] * tmp.middleRows(i, rows);
  return out;
}

}  // namespace

Plane luma(const RasterImage& image) {
  if (image.channels() < 3) return image.plane(0);
  return 0.299 * image.plane(0) + 0.587 * image.plane(1) + 0.114 * image.plane(2);
}

double mse(const RasterImage& a, const RasterImage& b) {
  check_same_size(a, b, "mse");
  const int channels = std::min(color_channels(a), color_channels(b));
  double sum = 0;
  for (int c = 0; c < channels; ++c) sum += (a.plane(c) - b.plane(c)).square().sum();
  return sum / (double(a.pixel_count()) * channels);
}

double psnr(const RasterImage& a, const RasterImage& b) {
  const double e = mse(a, b);
  if (e == 0.0) return kPsnrIdentical;
  return 10.0 * std::log10(1.0 / e);
}

double ssim(const RasterImage& a, const RasterImage& b) {
  check_same_size(a, b, "ssim");
  int win = std::min({11, a.width(), a.height()});
  if (win % 2 == 0) --win;
  constexpr double sigma = 1.5;
  Eigen::VectorXd k(win);
  for (int i = 0; i < win; ++i) {
    const double d = i - (win - 1) / 2.0;
    k[i] = std::exp(-d * d / (2 * sigma * sigma));
  }
  k /= k.sum();

  constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  const Plane x = luma(a), y = luma(b);
  const Plane mx = filter_valid(x, k), my = filter_valid(y, k);
  const Plane sxx = filter_valid(x * x, k) - mx * mx;
  const Plane syy = filter_valid(y * y, k) - my * my;
  const Plane sxy = filter_valid(x * y, k) - mx * my;
  const Plane map = ((2 * mx * my + c1) * (2 * sxy + c2)) /
                    ((mx * mx + my * my + c1) * (sxx + syy + c2));
  return map.mean();
}

}  // namespace vecanim
