#pragma once

// Synthetic high/low technique pairs with a shared noiseless signal and
// independently drawn Gaussian noise of known variance. Noise is generated by
// SplitMix64 + Box-Muller so the fields are reproducible bit-for-bit on any
// platform with round-to-nearest binary64 arithmetic.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ctnoise/error.hpp"
#include "ctnoise/image.hpp"
#include "ctnoise/noise_metrics.hpp"

namespace ctnoise {

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
};

// Standard normal variates, Box-Muller on pairs of 53-bit uniforms; both
// outputs of each pair are used (cosine first).
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) noexcept : rng_(seed) {}

  double next() noexcept {
    if (spare_) {
      const double z = *spare_;
      spare_.reset();
      return z;
    }
    const double u1 = 1.0 - rng_.uniform();  // (0, 1]
    const double u2 = rng_.uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    return radius * std::cos(angle);
  }

 private:
  SplitMix64 rng_;
  std::optional<double> spare_;
};

inline constexpr std::uint64_t low_stream_salt = 0x9E3779B97F4A7C15ULL;

enum class SignalKind { uniform, ramp, chest };

// `ramp_amplitude` is the HU rise across the ROI width; the ramp is linear in x
// over the whole image (ramp) or over the uniform patch (chest).
struct SignalModel {
  SignalKind kind = SignalKind::uniform;
  double ramp_amplitude = 0.0;
};

enum class NoiseTexture { white, k3 };

struct PhantomParams {
  std::size_t width = 512;
  std::size_t height = 512;
  double sigma_high = 10.0;
  double ratio = 9.6;
  std::optional<Roi> roi;  // default: see default_roi()
  SignalModel signal;
  NoiseTexture texture = NoiseTexture::white;
  std::uint64_t seed = 42;
};

struct GroundTruth {
  Image clean;
  Image noise_high;
  Image noise_low;
  double true_ratio = 0.0;
};

struct PhantomPair {
  ScanPair pair;
  GroundTruth truth;
};

namespace phantom_hu {
inline constexpr double air = -1000.0;
inline constexpr double body = 50.0;
inline constexpr double lung = -800.0;
inline constexpr double soft_tissue = 40.0;
inline constexpr double low_mas = 5.0;
}  // namespace phantom_hu

// The 200x200 (or smaller, on small images) uniform patch of the chest signal.
inline Roi chest_patch(std::size_t width, std::size_t height) {
  const double short_side = static_cast<double>(std::min(width, height));
  const auto side = static_cast<std::size_t>(std::min(200.0, std::floor(0.39 * short_side)));
  const auto cx = static_cast<double>(width) * 0.5;
  const auto cy = static_cast<double>(height) * 0.62;
  const auto half = static_cast<double>(side) * 0.5;
  return {static_cast<std::size_t>(std::max(0.0, std::floor(cx - half))),
          static_cast<std::size_t>(std::max(0.0, std::floor(cy - half))), side, side};
}

inline Roi default_roi(const PhantomParams& p) {
  Roi region{0, 0, p.width, p.height};
  if (p.signal.kind == SignalKind::chest) region = chest_patch(p.width, p.height);
  const std::size_t w = std::min<std::size_t>(128, std::max<std::size_t>(region.w / 2, 2));
  const std::size_t h = std::min<std::size_t>(128, std::max<std::size_t>(region.h / 2, 1));
  return {region.x + (region.w - w) / 2, region.y + (region.h - h) / 2, w, h};
}

inline Roi phantom_roi(const PhantomParams& p) { return p.roi ? *p.roi : default_roi(p); }

inline void validate(const PhantomParams& p) {
  auto bad = [](const std::string& what) { throw error(errc::invalid_params, what); };
  if (p.width < 8 || p.height < 8) bad("phantom must be at least 8x8");
  if (!(std::isfinite(p.sigma_high) && p.sigma_high > 0.0)) bad("sigma_high must be > 0");
  if (!(std::isfinite(p.ratio) && p.ratio > 0.0)) bad("ratio must be > 0");
  if (!std::isfinite(p.signal.ramp_amplitude)) bad("ramp amplitude must be finite");
  const Roi roi = phantom_roi(p);
  const Image probe(p.width, p.height);
  if (!roi_fits(probe, roi)) bad("roi does not fit the phantom");
  if (p.signal.kind == SignalKind::chest) {
    const Roi patch = chest_patch(p.width, p.height);
    if (roi.x < patch.x || roi.y < patch.y || roi.x + roi.w > patch.x + patch.w ||
        roi.y + roi.h > patch.y + patch.h)
      bad("chest roi must lie inside the uniform patch");
  }
}

inline Image phantom_signal(const PhantomParams& p) {
  const Roi roi = phantom_roi(p);
  const double slope = p.signal.ramp_amplitude / static_cast<double>(roi.w);
  auto ramp_at = [&](std::size_t x) {
    return slope * (static_cast<double>(x) - static_cast<double>(roi.x));
  };

  Image clean(p.width, p.height, phantom_hu::soft_tissue);
  if (p.signal.kind == SignalKind::ramp) {
    for (std::size_t y = 0; y < p.height; ++y)
      for (std::size_t x = 0; x < p.width; ++x)
        clean(x, y) = phantom_hu::soft_tissue + ramp_at(x);
  } else if (p.signal.kind == SignalKind::chest) {
    const double w = static_cast<double>(p.width);
    const double h = static_cast<double>(p.height);
    const Roi patch = chest_patch(p.width, p.height);
    auto inside = [](double x, double y, double cx, double cy, double ax, double ay) {
      const double dx = (x - cx) / ax;
      const double dy = (y - cy) / ay;
      return dx * dx + dy * dy <= 1.0;
    };
    for (std::size_t y = 0; y < p.height; ++y) {
      for (std::size_t x = 0; x < p.width; ++x) {
        const double fx = static_cast<double>(x) + 0.5;
        const double fy = static_cast<double>(y) + 0.5;
        double v = phantom_hu::air;
        if (inside(fx, fy, 0.5 * w, 0.5 * h, 0.46 * w, 0.40 * h)) v = phantom_hu::body;
        if (inside(fx, fy, 0.5 * w, 0.30 * h, 0.32 * w, 0.12 * h)) v = phantom_hu::lung;
        if (x >= patch.x && x < patch.x + patch.w && y >= patch.y && y < patch.y + patch.h)
          v = phantom_hu::soft_tissue + ramp_at(x);
        clean(x, y) = v;
      }
    }
  }
  // Keep the signal exactly representable in the binary32 container.
  for (double& v : clean.pixels()) v = static_cast<float>(v);
  return clean;
}

namespace phantom_detail {

inline Image gaussian_field(std::size_t w, std::size_t h, std::uint64_t seed,
                            double sigma) {
  GaussianStream stream(seed);
  Image field(w, h, 0.0);
  for (double& v : field.pixels()) v = sigma * stream.next();
  return field;
}

// 3x3 binomial smoothing, rescaled so the field keeps its variance.
inline Image texture_k3(const Image& field) {
  constexpr double k[3] = {0.25, 0.5, 0.25};
  constexpr double gain = 1.0 / (0.375);  // 1 / sqrt(sum k_i^2 k_j^2)
  const std::size_t w = field.width();
  const std::size_t h = field.height();
  Image out(w, h, 0.0);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int j = -1; j <= 1; ++j) {
        const std::size_t sy = std::clamp<long>(static_cast<long>(y) + j, 0, static_cast<long>(h) - 1);
        for (int i = -1; i <= 1; ++i) {
          const std::size_t sx = std::clamp<long>(static_cast<long>(x) + i, 0, static_cast<long>(w) - 1);
          acc += k[j + 1] * k[i + 1] * field(sx, sy);
        }
      }
      out(x, y) = gain * acc;
    }
  }
  return out;
}

// Builds clean + noise, rounded to the binary32 container, and re-derives the
// noise as (image - clean) so both identities hold exactly.
inline std::pair<Image, Image> compose(const Image& clean, const Image& noise) {
  Image img = add(clean, noise);
  for (double& v : img.pixels()) v = static_cast<float>(v);
  Image exact = subtract(img, clean);
  exact.meta() = {};
  return {std::move(img), std::move(exact)};
}

}  // namespace phantom_detail

inline PhantomPair generate_pair(const PhantomParams& p) {
  validate(p);
  Image clean = phantom_signal(p);
  const double sigma_low = p.sigma_high * std::sqrt(p.ratio);
  Image nh = phantom_detail::gaussian_field(p.width, p.height, p.seed, p.sigma_high);
  Image nl = phantom_detail::gaussian_field(p.width, p.height, p.seed ^ low_stream_salt,
                                            sigma_low);
  if (p.texture == NoiseTexture::k3) {
    nh = phantom_detail::texture_k3(nh);
    nl = phantom_detail::texture_k3(nl);
  }
  auto [high, noise_high] = phantom_detail::compose(clean, nh);
  auto [low, noise_low] = phantom_detail::compose(clean, nl);

  const std::string slice = "phantom-seed-" + std::to_string(p.seed);
  high.meta() = {phantom_hu::low_mas * p.ratio, slice};
  low.meta() = {phantom_hu::low_mas, slice};

  PhantomPair out{
      ScanPair{slice, std::move(high), std::move(low), phantom_roi(p), std::nullopt},
      GroundTruth{std::move(clean), std::move(noise_high), std::move(noise_low), p.ratio}};
  return out;
}

// Residuals an ideal filter would leave: the exact injected noise fields.
inline std::pair<Image, Image> oracle_residual(const ScanPair& pair,
                                               const GroundTruth& gt) {
  if (!pair.high.same_shape(gt.clean) || !pair.low.same_shape(gt.clean) ||
      !gt.noise_high.same_shape(gt.clean) || !gt.noise_low.same_shape(gt.clean))
    throw error(errc::mismatch, "ground truth dimensions do not match the pair");
  auto h = pair.high.pixels();
  auto l = pair.low.pixels();
  auto c = gt.clean.pixels();
  auto nh = gt.noise_high.pixels();
  auto nl = gt.noise_low.pixels();
  for (std::size_t i = 0; i < c.size(); ++i)
    if (h[i] != c[i] + nh[i] || l[i] != c[i] + nl[i])
      throw error(errc::mismatch, "ground truth does not reproduce the pair");
  return {subtract(pair.high, gt.clean), subtract(pair.low, gt.clean)};
}

}  // namespace ctnoise
