#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ctnoise/error.hpp"

namespace ctnoise {

// Acquisition metadata carried alongside the pixels. `mas` is the tube current
// time product of the acquisition.
struct ImageMeta {
  std::optional<double> mas;
  std::optional<std::string> slice_id;

  friend bool operator==(const ImageMeta&, const ImageMeta&) = default;
};

// A 2-D scalar field in Hounsfield units, row-major.
//
// Pixels are held in binary64 while in memory; the on-disk container stores
// binary32 (see image_io.hpp), so every loaded image is exactly representable
// in both.
class Image {
 public:
  Image(std::size_t width, std::size_t height, double fill = 0.0)
      : Image(width, height, std::vector<double>(width * height, fill)) {}

  Image(std::size_t width, std::size_t height, std::vector<double> pixels,
        ImageMeta meta = {})
      : width_(width), height_(height), pixels_(std::move(pixels)),
        meta_(std::move(meta)) {
    if (width_ == 0 || height_ == 0)
      throw error(errc::dimension_mismatch, "image dimensions must be >= 1");
    if (pixels_.size() != width_ * height_)
      throw error(errc::dimension_mismatch,
                  "pixel count does not match width x height");
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return pixels_.size(); }

  std::span<const double> pixels() const noexcept { return pixels_; }
  std::span<double> pixels() noexcept { return pixels_; }

  double operator()(std::size_t x, std::size_t y) const noexcept {
    return pixels_[y * width_ + x];
  }
  double& operator()(std::size_t x, std::size_t y) noexcept {
    return pixels_[y * width_ + x];
  }

  std::span<const double> row(std::size_t y) const noexcept {
    return std::span<const double>(pixels_).subspan(y * width_, width_);
  }
  std::span<double> row(std::size_t y) noexcept {
    return std::span<double>(pixels_).subspan(y * width_, width_);
  }

  const ImageMeta& meta() const noexcept { return meta_; }
  ImageMeta& meta() noexcept { return meta_; }

  bool same_shape(const Image& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<double> pixels_;
  ImageMeta meta_;
};

struct Roi {
  std::size_t x = 0;
  std::size_t y = 0;
  std::size_t w = 0;
  std::size_t h = 0;

  friend bool operator==(const Roi&, const Roi&) = default;
};

inline bool roi_fits(const Image& img, const Roi& roi) noexcept {
  return roi.w * roi.h >= 2 && roi.x + roi.w <= img.width() &&
         roi.y + roi.h <= img.height();
}

inline void require_roi(const Image& img, const Roi& roi) {
  if (!roi_fits(img, roi))
    throw error(errc::roi_out_of_bounds,
                "roi " + std::to_string(roi.x) + "," + std::to_string(roi.y) +
                    "," + std::to_string(roi.w) + "," + std::to_string(roi.h) +
                    " does not fit a " + std::to_string(img.width()) + "x" +
                    std::to_string(img.height()) + " image");
}

inline void require_same_shape(const Image& a, const Image& b) {
  if (!a.same_shape(b))
    throw error(errc::dimension_mismatch,
                std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                    " vs " + std::to_string(b.width()) + "x" +
                    std::to_string(b.height()));
}

inline void require_finite(const Image& img) {
  for (double v : img.pixels())
    if (!std::isfinite(v))
      throw error(errc::non_finite_pixel, "image contains NaN or Inf");
}

inline double roi_mean(const Image& img, const Roi& roi) {
  require_roi(img, roi);
  double sum = 0.0;
  for (std::size_t y = roi.y; y < roi.y + roi.h; ++y)
    for (std::size_t x = roi.x; x < roi.x + roi.w; ++x) sum += img(x, y);
  return sum / static_cast<double>(roi.w * roi.h);
}

// Unbiased (N-1) sample variance over the ROI, two-pass.
inline double roi_variance(const Image& img, const Roi& roi) {
  const double mean = roi_mean(img, roi);
  double ss = 0.0;
  for (std::size_t y = roi.y; y < roi.y + roi.h; ++y) {
    for (std::size_t x = roi.x; x < roi.x + roi.w; ++x) {
      const double d = img(x, y) - mean;
      ss += d * d;
    }
  }
  return ss / static_cast<double>(roi.w * roi.h - 1);
}

// Residual I_o - I_f. Metadata follows the first operand.
inline Image subtract(const Image& a, const Image& b) {
  require_same_shape(a, b);
  Image out(a.width(), a.height(), 0.0);
  out.meta() = a.meta();
  auto pa = a.pixels();
  auto pb = b.pixels();
  auto po = out.pixels();
  for (std::size_t i = 0; i < po.size(); ++i) po[i] = pa[i] - pb[i];
  return out;
}

inline Image add(const Image& a, const Image& b) {
  require_same_shape(a, b);
  Image out(a.width(), a.height(), 0.0);
  out.meta() = a.meta();
  auto pa = a.pixels();
  auto pb = b.pixels();
  auto po = out.pixels();
  for (std::size_t i = 0; i < po.size(); ++i) po[i] = pa[i] + pb[i];
  return out;
}

inline Image scale(const Image& a, double c) {
  Image out = a;
  for (double& v : out.pixels()) v *= c;
  return out;
}

// Fixed intensity window used wherever a dimensionless intensity is needed.
namespace window {
inline constexpr double lower_hu = -1024.0;
inline constexpr double upper_hu = 3072.0;
inline constexpr double span_hu = upper_hu - lower_hu;

constexpr double to_unit(double hu) noexcept { return (hu - lower_hu) / span_hu; }
constexpr double from_unit(double u) noexcept { return u * span_hu + lower_hu; }
}  // namespace window

}  // namespace ctnoise
