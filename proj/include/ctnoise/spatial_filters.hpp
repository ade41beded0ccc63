#pragma once

// Spatial-domain denoisers: matched (Gaussian template) filter, bilateral
// filter, Perona-Malik style anisotropic diffusion and patch-wise non-local
// means. All return a new image of the same size; inputs are never modified.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "ctnoise/error.hpp"
#include "ctnoise/image.hpp"

namespace ctnoise {

struct MatchedFilterParams {
  std::size_t half_width = 2;
  double sigma_t = 1.0;

  friend bool operator==(const MatchedFilterParams&, const MatchedFilterParams&) = default;
};

struct BilateralParams {
  std::size_t half_width = 2;
  double sigma_sx = 0.3;
  double sigma_sy = 0.3;
  double sigma_r = 50.0;

  friend bool operator==(const BilateralParams&, const BilateralParams&) = default;
};

enum class Conduction { exponential, reciprocal };

struct AdParams {
  std::size_t iterations = 20;
  double delta = 0.2;
  double kappa = 54.0;
  Conduction conduction = Conduction::exponential;

  friend bool operator==(const AdParams&, const AdParams&) = default;
};

// Fixed non-local means constants; the filter has no tunable parameter.
struct NlmConstants {
  static constexpr std::size_t patch_half = 3;    // 7x7 patch
  static constexpr std::size_t search_half = 10;  // 21x21 search window
  static constexpr double h_factor = 0.4;
};

namespace spatial_detail {

inline bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

inline void invalid(const std::string& what) {
  throw error(errc::invalid_params, what);
}

// Copy of `img` with `pad` replicated border pixels on every side.
struct Padded {
  std::size_t pad;
  std::size_t width;
  std::size_t height;
  std::vector<double> data;

  double at(std::size_t px, std::size_t py) const noexcept {
    return data[py * width + px];
  }
};

inline Padded replicate_pad(const Image& img, std::size_t pad) {
  Padded out{pad, img.width() + 2 * pad, img.height() + 2 * pad, {}};
  out.data.resize(out.width * out.height);
  const auto w = static_cast<long>(img.width());
  const auto h = static_cast<long>(img.height());
  const auto p = static_cast<long>(pad);
  for (std::size_t py = 0; py < out.height; ++py) {
    const long sy = std::clamp(static_cast<long>(py) - p, 0L, h - 1);
    for (std::size_t px = 0; px < out.width; ++px) {
      const long sx = std::clamp(static_cast<long>(px) - p, 0L, w - 1);
      out.data[py * out.width + px] =
          img(static_cast<std::size_t>(sx), static_cast<std::size_t>(sy));
    }
  }
  return out;
}

inline Image like(const Image& img) {
  Image out(img.width(), img.height(), 0.0);
  out.meta() = img.meta();
  return out;
}

}  // namespace spatial_detail

inline void validate(const MatchedFilterParams& p) {
  if (!spatial_detail::positive_finite(p.sigma_t))
    spatial_detail::invalid("mf sigma_t must be finite and > 0");
}

inline void validate(const BilateralParams& p) {
  if (p.half_width < 1) spatial_detail::invalid("bf half_width must be >= 1");
  if (!spatial_detail::positive_finite(p.sigma_sx) ||
      !spatial_detail::positive_finite(p.sigma_sy) ||
      !spatial_detail::positive_finite(p.sigma_r))
    spatial_detail::invalid("bf sigmas must be finite and > 0");
}

inline void validate(const AdParams& p) {
  if (!(p.delta > 0.0 && p.delta <= 0.25))
    spatial_detail::invalid("ad delta must lie in (0, 0.25]");
  if (!spatial_detail::positive_finite(p.kappa))
    spatial_detail::invalid("ad kappa must be finite and > 0");
}

// Unit-sum 1-D Gaussian taps; the 2-D template is their outer product.
inline std::vector<double> gaussian_taps(std::size_t half_width, double sigma) {
  std::vector<double> taps(2 * half_width + 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < taps.size(); ++i) {
    const double d = static_cast<double>(i) - static_cast<double>(half_width);
    taps[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += taps[i];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

// Row-major (2*half_width+1)^2 template used by matched_filter.
inline std::vector<double> matched_template(const MatchedFilterParams& p) {
  validate(p);
  const auto taps = gaussian_taps(p.half_width, p.sigma_t);
  std::vector<double> kernel(taps.size() * taps.size());
  for (std::size_t j = 0; j < taps.size(); ++j)
    for (std::size_t i = 0; i < taps.size(); ++i)
      kernel[j * taps.size() + i] = taps[j] * taps[i];
  return kernel;
}

// Correlation with a unit-sum Gaussian template (separable), replicate edges.
inline Image matched_filter(const Image& img, const MatchedFilterParams& p) {
  validate(p);
  const auto taps = gaussian_taps(p.half_width, p.sigma_t);
  const auto padded = spatial_detail::replicate_pad(img, p.half_width);
  const std::size_t w = img.width();
  const std::size_t h = img.height();

  // Horizontal pass over every padded row, then vertical pass.
  std::vector<double> horiz(w * padded.height);
  for (std::size_t py = 0; py < padded.height; ++py) {
    for (std::size_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::size_t k = 0; k < taps.size(); ++k)
        acc += taps[k] * padded.at(x + k, py);
      horiz[py * w + x] = acc;
    }
  }
  Image out = spatial_detail::like(img);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::size_t k = 0; k < taps.size(); ++k)
        acc += taps[k] * horiz[(y + k) * w + x];
      out(x, y) = acc;
    }
  }
  return out;
}

inline Image bilateral(const Image& img, const BilateralParams& p) {
  validate(p);
  const std::size_t hw = p.half_width;
  const std::size_t side = 2 * hw + 1;
  const auto padded = spatial_detail::replicate_pad(img, hw);

  std::vector<double> spatial(side * side);
  for (std::size_t j = 0; j < side; ++j) {
    const double dy = static_cast<double>(j) - static_cast<double>(hw);
    for (std::size_t i = 0; i < side; ++i) {
      const double dx = static_cast<double>(i) - static_cast<double>(hw);
      spatial[j * side + i] =
          std::exp(-dx * dx / (2.0 * p.sigma_sx * p.sigma_sx) -
                   dy * dy / (2.0 * p.sigma_sy * p.sigma_sy));
    }
  }
  const double range_coeff = 1.0 / (2.0 * p.sigma_r * p.sigma_r);

  Image out = spatial_detail::like(img);
  for (std::size_t y = 0; y < img.height(); ++y) {
    for (std::size_t x = 0; x < img.width(); ++x) {
      const double center = img(x, y);
      double num = 0.0;
      double den = 0.0;
      for (std::size_t j = 0; j < side; ++j) {
        const double* row = &padded.data[(y + j) * padded.width + x];
        const double* ws = &spatial[j * side];
        for (std::size_t i = 0; i < side; ++i) {
          const double d = row[i] - center;
          const double wgt = ws[i] * std::exp(-d * d * range_coeff);
          num += wgt * d;
          den += wgt;
        }
      }
      out(x, y) = center + num / den;
    }
  }
  return out;
}

// Explicit 4-neighbour diffusion with zero-flux (Neumann) boundaries.
inline Image anisotropic_diffusion(const Image& img, const AdParams& p) {
  validate(p);
  const std::size_t w = img.width();
  const std::size_t h = img.height();
  std::vector<double> cur(img.pixels().begin(), img.pixels().end());
  std::vector<double> flux_x(w * h, 0.0);  // edge (x, x+1)
  std::vector<double> flux_y(w * h, 0.0);  // edge (y, y+1)
  const double inv_kappa = 1.0 / p.kappa;
  const bool exponential = p.conduction == Conduction::exponential;

  auto conduct = [&](double grad) {
    const double s = grad * inv_kappa;
    const double g = exponential ? std::exp(-s * s) : 1.0 / (1.0 + s * s);
    return g * grad;
  };

  for (std::size_t it = 0; it < p.iterations; ++it) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x + 1 < w; ++x) {
        const std::size_t i = y * w + x;
        flux_x[i] = conduct(cur[i + 1] - cur[i]);
      }
    }
    for (std::size_t y = 0; y + 1 < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const std::size_t i = y * w + x;
        flux_y[i] = conduct(cur[i + w] - cur[i]);
      }
    }
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const std::size_t i = y * w + x;
        const double north = y > 0 ? -flux_y[i - w] : 0.0;
        const double south = y + 1 < h ? flux_y[i] : 0.0;
        const double east = x + 1 < w ? flux_x[i] : 0.0;
        const double west = x > 0 ? -flux_x[i - 1] : 0.0;
        cur[i] += p.delta * (north + east + south + west);
      }
    }
  }

  Image out(w, h, std::move(cur), img.meta());
  return out;
}

// Immerkaer's fast noise standard deviation estimate (3x3 Laplacian-difference
// operator, mean absolute response over interior pixels).
inline double immerkaer_sigma(const Image& img) {
  const std::size_t w = img.width();
  const std::size_t h = img.height();
  if (w < 3 || h < 3) throw error(errc::image_too_small, "need at least 3x3");
  double sum = 0.0;
  for (std::size_t y = 1; y + 1 < h; ++y) {
    for (std::size_t x = 1; x + 1 < w; ++x) {
      const double r =
          img(x - 1, y - 1) - 2.0 * img(x, y - 1) + img(x + 1, y - 1) -
          2.0 * img(x - 1, y) + 4.0 * img(x, y) - 2.0 * img(x + 1, y) +
          img(x - 1, y + 1) - 2.0 * img(x, y + 1) + img(x + 1, y + 1);
      sum += std::abs(r);
    }
  }
  return std::sqrt(std::numbers::pi / 2.0) * sum /
         (6.0 * static_cast<double>(w - 2) * static_cast<double>(h - 2));
}

// Patch-wise non-local means. Weight exp(-max(d2 - 2 s^2, 0) / (h s)^2) with
// d2 the mean squared 7x7 patch difference and s the Immerkaer estimate; the
// centre pixel receives the largest weight seen among its neighbours.
inline Image pwnlm(const Image& img) {
  using C = NlmConstants;
  const std::size_t w = img.width();
  const std::size_t h = img.height();
  if (std::min(w, h) < 2 * C::patch_half + 1)
    throw error(errc::image_too_small,
                "pwnlm needs at least 7x7, got " + std::to_string(w) + "x" +
                    std::to_string(h));

  const double sigma = immerkaer_sigma(img);
  if (!(sigma > 0.0)) return img;  // noise-free input: nothing to average

  const double floor = 2.0 * sigma * sigma;
  const double hh = C::h_factor * sigma;
  const double inv_h2 = 1.0 / (hh * hh);

  constexpr std::size_t ph = C::patch_half;
  constexpr std::size_t sh = C::search_half;
  constexpr std::size_t pad = ph + sh;
  constexpr double patch_area = static_cast<double>((2 * ph + 1) * (2 * ph + 1));
  const auto padded = spatial_detail::replicate_pad(img, pad);
  const std::size_t pw = padded.width;

  // Squared differences are needed on the image plus a patch_half margin.
  const std::size_t dw = w + 2 * ph;
  const std::size_t dh = h + 2 * ph;
  std::vector<double> diff(dw * dh);
  std::vector<double> rowsum(w * dh);
  std::vector<double> num(w * h, 0.0);
  std::vector<double> den(w * h, 0.0);
  std::vector<double> best(w * h, 0.0);

  const long s = static_cast<long>(sh);
  for (long oy = -s; oy <= s; ++oy) {
    for (long ox = -s; ox <= s; ++ox) {
      if (ox == 0 && oy == 0) continue;
      for (std::size_t y = 0; y < dh; ++y) {
        const std::size_t py = y + sh;  // padded row of (y - ph)
        const std::size_t qy = static_cast<std::size_t>(static_cast<long>(py) + oy);
        const double* prow = &padded.data[py * pw + sh];
        const double* qrow = &padded.data[qy * pw + static_cast<std::size_t>(static_cast<long>(sh) + ox)];
        double* drow = &diff[y * dw];
        for (std::size_t x = 0; x < dw; ++x) {
          const double d = prow[x] - qrow[x];
          drow[x] = d * d;
        }
      }
      for (std::size_t y = 0; y < dh; ++y) {
        const double* drow = &diff[y * dw];
        double* rrow = &rowsum[y * w];
        for (std::size_t x = 0; x < w; ++x) {
          double acc = 0.0;
          for (std::size_t k = 0; k < 2 * ph + 1; ++k) acc += drow[x + k];
          rrow[x] = acc;
        }
      }
      for (std::size_t y = 0; y < h; ++y) {
        const std::size_t qy = static_cast<std::size_t>(static_cast<long>(y + pad) + oy);
        const double* qrow = &padded.data[qy * pw + static_cast<std::size_t>(static_cast<long>(pad) + ox)];
        const double* prow = &padded.data[(y + pad) * pw + pad];
        for (std::size_t x = 0; x < w; ++x) {
          double acc = 0.0;
          for (std::size_t k = 0; k < 2 * ph + 1; ++k) acc += rowsum[(y + k) * w + x];
          const double d2 = acc / patch_area;
          const double wgt = std::exp(-std::max(d2 - floor, 0.0) * inv_h2);
          const std::size_t i = y * w + x;
          num[i] += wgt * (qrow[x] - prow[x]);
          den[i] += wgt;
          best[i] = std::max(best[i], wgt);
        }
      }
    }
  }

  Image out = spatial_detail::like(img);
  auto src = img.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const double d = den[i] + best[i];
    dst[i] = d > 0.0 ? src[i] + num[i] / d : src[i];
  }
  return out;
}

}  // namespace ctnoise
