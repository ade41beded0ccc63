#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "ctnoise/dtcwt.hpp"
#include "ctnoise/error.hpp"
#include "ctnoise/image.hpp"

namespace ctnoise {

enum class Shrinkage { hard, soft };

struct CdwtParams {
  static constexpr std::size_t levels = dtcwt_levels;
  double threshold = 150.0;  // complex coefficient magnitude, HU
  Shrinkage shrinkage = Shrinkage::hard;

  friend bool operator==(const CdwtParams&, const CdwtParams&) = default;
};

// Noise variance in unit-window intensity units (see window::to_unit).
struct FdeParams {
  double noise_variance = 1e-9;

  friend bool operator==(const FdeParams&, const FdeParams&) = default;
};

inline void validate(const CdwtParams& p) {
  if (!std::isfinite(p.threshold) || p.threshold < 0.0)
    throw error(errc::invalid_params, "cdwt threshold must be finite and >= 0");
}

inline void validate(const FdeParams& p) {
  if (!std::isfinite(p.noise_variance) || p.noise_variance < 0.0)
    throw error(errc::invalid_params, "fde noise_variance must be finite and >= 0");
}

// Detail coefficients below the threshold are zeroed; the lowpass is kept.
inline void shrink(CoefficientPyramid& pyr, const CdwtParams& p) {
  for (auto& level : pyr.levels) {
    for (auto& band : level.bands) {
      for (auto& c : band) {
        const double mag = std::abs(c);
        if (p.shrinkage == Shrinkage::hard) {
          if (mag < p.threshold) c = 0.0;
        } else {
          c = mag > p.threshold ? c * ((mag - p.threshold) / mag)
                                : std::complex<double>(0.0);
        }
      }
    }
  }
}

inline Image cdwt_denoise(const Image& img, const CdwtParams& p) {
  validate(p);
  auto pyr = dtcwt_forward(img, CdwtParams::levels);
  shrink(pyr, p);
  Image out = dtcwt_inverse(pyr);
  out.meta() = img.meta();
  return out;
}

namespace fde_detail {

using cplx = std::complex<double>;

// In-place 2-D DFT of a rows x cols row-major buffer.
inline void fft2(std::vector<cplx>& buf, std::size_t rows, std::size_t cols,
                 bool inverse) {
  Eigen::FFT<double> fft;
  std::vector<cplx> in, out;
  in.resize(cols);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(buf.begin() + static_cast<long>(r * cols), cols, in.begin());
    if (inverse)
      fft.inv(out, in);
    else
      fft.fwd(out, in);
    std::copy_n(out.begin(), cols, buf.begin() + static_cast<long>(r * cols));
  }
  in.resize(rows);
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t r = 0; r < rows; ++r) in[r] = buf[r * cols + c];
    if (inverse)
      fft.inv(out, in);
    else
      fft.fwd(out, in);
    for (std::size_t r = 0; r < rows; ++r) buf[r * cols + c] = out[r];
  }
}

}  // namespace fde_detail

// Spectral-subtraction Wiener filter on unit-window intensities of the
// mirror-padded (2W x 2H) image. Per frequency:
//   G = Ps / (Ps + s2 * N),  Ps = max(|U|^2 - s2 * N, 0),  N = 4WH.
inline Image fde_wiener(const Image& img, const FdeParams& p) {
  validate(p);
  using fde_detail::cplx;
  const std::size_t w = img.width();
  const std::size_t h = img.height();
  const std::size_t pw = 2 * w;
  const std::size_t ph = 2 * h;

  std::vector<cplx> buf(pw * ph);
  for (std::size_t y = 0; y < ph; ++y) {
    const std::size_t sy = y < h ? y : ph - 1 - y;
    for (std::size_t x = 0; x < pw; ++x) {
      const std::size_t sx = x < w ? x : pw - 1 - x;
      buf[y * pw + x] = window::to_unit(img(sx, sy));
    }
  }

  fde_detail::fft2(buf, ph, pw, /*inverse=*/false);
  const double noise_floor = p.noise_variance * static_cast<double>(pw * ph);
  for (auto& u : buf) {
    const double power = std::norm(u);
    const double signal = std::max(power - noise_floor, 0.0);
    const double denom = signal + noise_floor;
    const double gain = denom > 0.0 ? signal / denom : 1.0;
    u *= gain;
  }
  fde_detail::fft2(buf, ph, pw, /*inverse=*/true);

  Image out(w, h, 0.0);
  out.meta() = img.meta();
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      out(x, y) = window::from_unit(buf[y * pw + x].real());
  return out;
}

}  // namespace ctnoise
