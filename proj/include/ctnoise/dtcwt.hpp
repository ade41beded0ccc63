#pragma once

// 2-D dual-tree complex wavelet transform (Kingsbury). Level 1 uses the
// near-symmetric 13/19-tap biorthogonal pair, levels 2 and up the 14-tap
// Q-shift pair. Coefficient tables are the published "near_sym_b" and
// "qshift_b" sets (N. G. Kingsbury, "Complex wavelets for shift invariant
// analysis and filtering of signals", ACHA 10(3), 2001), as distributed with
// the open-source `dtcwt` reference implementation. Boundary handling, level
// extension and subband ordering follow that implementation so coefficients
// are directly comparable.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ctnoise/error.hpp"
#include "ctnoise/image.hpp"

namespace ctnoise {

namespace dtcwt_filters {

// near_sym_b analysis / synthesis, odd length, level 1.
inline constexpr std::array<double, 13> h0o = {
    -0.0017578125, 0.0, 0.022265625000000001, -0.046875, -0.048242187499999999,
    0.296875, 0.55546874999999996, 0.296875, -0.048242187499999999, -0.046875,
    0.022265625000000001, 0.0, -0.0017578125};
inline constexpr std::array<double, 19> h1o = {
    -7.0626395089285707e-05, 0.0, 0.0013419015066964285, -0.0018833705357142855,
    -0.0071568080357142846, 0.023856026785714284, 0.055643136160714278,
    -0.051688058035714281, -0.29975760323660716, 0.5594308035714286,
    -0.29975760323660716, -0.051688058035714281, 0.055643136160714278,
    0.023856026785714284, -0.0071568080357142846, -0.0018833705357142855,
    0.0013419015066964285, 0.0, -7.0626395089285707e-05};
inline constexpr std::array<double, 19> g0o = {
    7.0626395089285707e-05, 0.0, -0.0013419015066964285, -0.0018833705357142855,
    0.0071568080357142846, 0.023856026785714284, -0.055643136160714278,
    -0.051688058035714281, 0.29975760323660716, 0.5594308035714286,
    0.29975760323660716, -0.051688058035714281, -0.055643136160714278,
    0.023856026785714284, 0.0071568080357142846, -0.0018833705357142855,
    -0.0013419015066964285, 0.0, 7.0626395089285707e-05};
inline constexpr std::array<double, 13> g1o = {
    -0.0017578125, 0.0, 0.022265625000000001, 0.046875, -0.048242187499999999,
    -0.296875, 0.55546874999999996, -0.296875, -0.048242187499999999, 0.046875,
    0.022265625000000001, 0.0, -0.0017578125};

// qshift_b, even length, levels >= 2. The b filters are the a filters reversed.
inline constexpr std::array<double, 14> h0a = {
    0.003253142763653182, -0.00388321199915849, 0.034660346844853487,
    -0.038872801268827792, -0.11720388769911527, 0.27529538466888204,
    0.75614564389252248, 0.56881042071212273, 0.011866092033797,
    -0.1067118046866654, 0.023825384794920298, 0.017025223881553989,
    -0.0054394759372741151, -0.0045568956284754913};
inline constexpr std::array<double, 14> h0b = {
    -0.0045568956284754913, -0.0054394759372741151, 0.017025223881553989,
    0.023825384794920298, -0.1067118046866654, 0.011866092033797,
    0.56881042071212273, 0.75614564389252248, 0.27529538466888204,
    -0.11720388769911527, -0.038872801268827792, 0.034660346844853487,
    -0.00388321199915849, 0.003253142763653182};
inline constexpr std::array<double, 14> h1a = {
    -0.0045568956284754913, 0.0054394759372741151, 0.017025223881553989,
    -0.023825384794920298, -0.1067118046866654, -0.011866092033797,
    0.56881042071212273, -0.75614564389252248, 0.27529538466888204,
    0.11720388769911527, -0.038872801268827792, -0.034660346844853487,
    -0.00388321199915849, -0.003253142763653182};
inline constexpr std::array<double, 14> h1b = {
    -0.003253142763653182, -0.00388321199915849, -0.034660346844853487,
    -0.038872801268827792, 0.11720388769911527, 0.27529538466888204,
    -0.75614564389252248, 0.56881042071212273, -0.011866092033797,
    -0.1067118046866654, -0.023825384794920298, 0.017025223881553989,
    0.0054394759372741151, -0.0045568956284754913};
inline constexpr std::array<double, 14> g0a = h0b;
inline constexpr std::array<double, 14> g0b = h0a;
inline constexpr std::array<double, 14> g1a = h1b;
inline constexpr std::array<double, 14> g1b = h1a;

}  // namespace dtcwt_filters

// Real 2-D array, row-major. Rows run along the image y axis.
struct Plane {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Plane() = default;
  Plane(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  const double* row(std::size_t r) const { return data.data() + r * cols; }
  double* row(std::size_t r) { return data.data() + r * cols; }
};

// One decomposition level: six complex directional subbands
// (15, 45, 75, 105, 135, 165 degrees), each rows x cols.
struct PyramidLevel {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::array<std::vector<std::complex<double>>, 6> bands;
};

struct CoefficientPyramid {
  std::size_t width = 0;   // original image width (trimmed on inverse)
  std::size_t height = 0;
  Plane lowpass;
  std::vector<PyramidLevel> levels;  // finest first
};

inline constexpr std::size_t dtcwt_levels = 3;

namespace dtcwt_detail {

inline std::size_t reflect_index(long x, long n) {
  const long period = 2 * n;
  long y = x % period;
  if (y < 0) y += period;
  return static_cast<std::size_t>(y >= n ? period - 1 - y : y);
}

inline Plane transpose(const Plane& x) {
  Plane t(x.cols, x.rows);
  for (std::size_t r = 0; r < x.rows; ++r)
    for (std::size_t c = 0; c < x.cols; ++c) t(c, r) = x(r, c);
  return t;
}

// out.row(i) += sum_k h[k] * src.row(idx[i + m - 1 - k]) for a valid-mode
// convolution over the row sequence selected by `idx`.
inline void convolve_rows(const Plane& src, std::span<const std::size_t> idx,
                          std::span<const double> h, Plane& out,
                          std::size_t out_start, std::size_t out_stride) {
  const std::size_t m = h.size();
  const std::size_t n_out = idx.size() - m + 1;
  for (std::size_t i = 0; i < n_out; ++i) {
    double* dst = out.row(out_start + i * out_stride);
    for (std::size_t k = 0; k < m; ++k) {
      const double hk = h[k];
      if (hk == 0.0) continue;
      const double* s = src.row(idx[i + m - 1 - k]);
      for (std::size_t c = 0; c < src.cols; ++c) dst[c] += hk * s[c];
    }
  }
}

template <std::size_t M>
std::vector<double> taps_every_other(const std::array<double, M>& h,
                                     std::size_t first) {
  std::vector<double> out;
  for (std::size_t i = first; i < M; i += 2) out.push_back(h[i]);
  return out;
}

template <std::size_t M>
double dot(const std::array<double, M>& a, const std::array<double, M>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < M; ++i) s += a[i] * b[i];
  return s;
}

// Column filtering without decimation, odd-length filter, symmetric extension.
template <std::size_t M>
Plane colfilter(const Plane& x, const std::array<double, M>& h) {
  static_assert(M % 2 == 1);
  const long r = static_cast<long>(x.rows);
  const long m2 = static_cast<long>(M / 2);
  std::vector<std::size_t> idx;
  for (long i = -m2; i < r + m2; ++i) idx.push_back(reflect_index(i, r));
  Plane y(x.rows, x.cols);
  convolve_rows(x, idx, h, y, 0, 1);
  return y;
}

// Column filtering with decimation by 2 (Q-shift tree pair).
template <std::size_t M>
Plane coldfilt(const Plane& x, const std::array<double, M>& ha,
               const std::array<double, M>& hb) {
  static_assert(M % 2 == 0);
  const long r = static_cast<long>(x.rows);
  if (r % 4 != 0)
    throw error(errc::malformed_pyramid, "coldfilt needs rows divisible by 4");
  const long m = static_cast<long>(M);
  std::vector<std::size_t> xe;
  for (long i = -m; i < r + m; ++i) xe.push_back(reflect_index(i, r));

  const auto hao = taps_every_other(ha, 0);
  const auto hae = taps_every_other(ha, 1);
  const auto hbo = taps_every_other(hb, 0);
  const auto hbe = taps_every_other(hb, 1);

  std::vector<std::size_t> t0, t1, t2, t3;  // xe[t], xe[t-1], xe[t-2], xe[t-3]
  for (long t = 5; t < r + 2 * m - 2; t += 4) {
    t0.push_back(xe[static_cast<std::size_t>(t)]);
    t1.push_back(xe[static_cast<std::size_t>(t - 1)]);
    t2.push_back(xe[static_cast<std::size_t>(t - 2)]);
    t3.push_back(xe[static_cast<std::size_t>(t - 3)]);
  }

  Plane y(x.rows / 2, x.cols);
  const bool even_first = dot(ha, hb) > 0.0;
  const std::size_t s1 = even_first ? 0 : 1;
  const std::size_t s2 = even_first ? 1 : 0;
  convolve_rows(x, t1, hao, y, s1, 2);
  convolve_rows(x, t3, hae, y, s1, 2);
  convolve_rows(x, t0, hbo, y, s2, 2);
  convolve_rows(x, t2, hbe, y, s2, 2);
  return y;
}

// Column filtering with interpolation by 2 (Q-shift synthesis pair).
template <std::size_t M>
Plane colifilt(const Plane& x, const std::array<double, M>& ha,
               const std::array<double, M>& hb) {
  static_assert(M % 2 == 0 && (M / 2) % 2 == 1,
                "only filters with odd half-length are supported");
  const long r = static_cast<long>(x.rows);
  if (r % 2 != 0)
    throw error(errc::malformed_pyramid, "colifilt needs an even row count");
  const long m = static_cast<long>(M);
  const long m2 = m / 2;
  std::vector<std::size_t> xe;
  for (long i = -m2; i < r + m2; ++i) xe.push_back(reflect_index(i, r));

  const bool positive = dot(ha, hb) > 0.0;
  std::vector<std::size_t> ta, tb;
  for (long t = 2; t < r + m - 1; t += 2) {
    const long a = positive ? t : t - 1;
    const long b = positive ? t - 1 : t;
    ta.push_back(xe[static_cast<std::size_t>(a)]);
    tb.push_back(xe[static_cast<std::size_t>(b)]);
  }

  const auto hao = taps_every_other(ha, 0);
  const auto hae = taps_every_other(ha, 1);
  const auto hbo = taps_every_other(hb, 0);
  const auto hbe = taps_every_other(hb, 1);

  Plane y(x.rows * 2, x.cols);
  convolve_rows(x, tb, hao, y, 0, 4);
  convolve_rows(x, ta, hbo, y, 1, 4);
  convolve_rows(x, tb, hae, y, 2, 4);
  convolve_rows(x, ta, hbe, y, 3, 4);
  return y;
}

template <std::size_t M>
Plane rowfilter(const Plane& x, const std::array<double, M>& h) {
  return transpose(colfilter(transpose(x), h));
}

template <std::size_t M>
Plane rowdfilt(const Plane& x, const std::array<double, M>& ha,
               const std::array<double, M>& hb) {
  return transpose(coldfilt(transpose(x), ha, hb));
}

template <std::size_t M>
Plane rowifilt(const Plane& x, const std::array<double, M>& ha,
               const std::array<double, M>& hb) {
  return transpose(colifilt(transpose(x), ha, hb));
}

inline Plane add(Plane a, const Plane& b) {
  for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
  return a;
}

// Quads of real pixels -> two complex subbands.
inline void q2c(const Plane& y, std::vector<std::complex<double>>& z0,
                std::vector<std::complex<double>>& z1) {
  const double s = std::sqrt(0.5);
  const std::size_t rows = y.rows / 2;
  const std::size_t cols = y.cols / 2;
  z0.assign(rows * cols, {});
  z1.assign(rows * cols, {});
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double a = y(2 * r, 2 * c);
      const double b = y(2 * r, 2 * c + 1);
      const double cc = y(2 * r + 1, 2 * c);
      const double d = y(2 * r + 1, 2 * c + 1);
      const std::complex<double> p(a * s, b * s);
      const std::complex<double> q(d * s, -cc * s);
      z0[r * cols + c] = p - q;
      z1[r * cols + c] = p + q;
    }
  }
}

// Inverse of q2c.
inline Plane c2q(const std::vector<std::complex<double>>& w0,
                 const std::vector<std::complex<double>>& w1, std::size_t rows,
                 std::size_t cols) {
  const double s = std::sqrt(0.5);
  Plane x(rows * 2, cols * 2);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const auto p = w0[r * cols + c] * s + w1[r * cols + c] * s;
      const auto q = w0[r * cols + c] * s - w1[r * cols + c] * s;
      x(2 * r, 2 * c) = p.real();
      x(2 * r, 2 * c + 1) = p.imag();
      x(2 * r + 1, 2 * c) = q.imag();
      x(2 * r + 1, 2 * c + 1) = -q.real();
    }
  }
  return x;
}

// Subband slots filled by the three quad images of a level.
inline constexpr std::array<std::size_t, 2> horizontal_slots = {0, 5};
inline constexpr std::array<std::size_t, 2> vertical_slots = {2, 3};
inline constexpr std::array<std::size_t, 2> diagonal_slots = {1, 4};

inline void store(PyramidLevel& level, const Plane& quads,
                  const std::array<std::size_t, 2>& slots) {
  level.rows = quads.rows / 2;
  level.cols = quads.cols / 2;
  q2c(quads, level.bands[slots[0]], level.bands[slots[1]]);
}

inline Plane load(const PyramidLevel& level,
                  const std::array<std::size_t, 2>& slots) {
  return c2q(level.bands[slots[0]], level.bands[slots[1]], level.rows,
             level.cols);
}

inline Plane extend_to_multiple_of_4(Plane x) {
  if (x.rows % 4 != 0) {
    Plane e(x.rows + 2, x.cols);
    for (std::size_t r = 0; r < e.rows; ++r) {
      const std::size_t src = r == 0 ? 0 : (r == e.rows - 1 ? x.rows - 1 : r - 1);
      std::copy(x.row(src), x.row(src) + x.cols, e.row(r));
    }
    x = std::move(e);
  }
  if (x.cols % 4 != 0) {
    Plane e(x.rows, x.cols + 2);
    for (std::size_t r = 0; r < x.rows; ++r) {
      e(r, 0) = x(r, 0);
      std::copy(x.row(r), x.row(r) + x.cols, e.row(r) + 1);
      e(r, e.cols - 1) = x(r, x.cols - 1);
    }
    x = std::move(e);
  }
  return x;
}

inline Plane crop_one(const Plane& z, bool rows, bool cols) {
  const std::size_t r0 = rows ? 1 : 0;
  const std::size_t c0 = cols ? 1 : 0;
  Plane out(z.rows - 2 * r0, z.cols - 2 * c0);
  for (std::size_t r = 0; r < out.rows; ++r)
    std::copy(z.row(r + r0) + c0, z.row(r + r0) + c0 + out.cols, out.row(r));
  return out;
}

inline void malformed(const std::string& what) {
  throw error(errc::malformed_pyramid, what);
}

}  // namespace dtcwt_detail

// Forward transform with `dtcwt_levels` stages. Odd dimensions are extended by
// repeating the last row/column; levels whose lowpass is not a multiple of 4
// are extended by one repeated sample at each end.
inline CoefficientPyramid dtcwt_forward(const Image& img,
                                        std::size_t nlevels = dtcwt_levels) {
  namespace f = dtcwt_filters;
  namespace d = dtcwt_detail;
  if (nlevels < 1) d::malformed("at least one level is required");

  const std::size_t rows = img.height() + img.height() % 2;
  const std::size_t cols = img.width() + img.width() % 2;
  Plane x(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      x(r, c) = img(std::min(c, img.width() - 1), std::min(r, img.height() - 1));

  CoefficientPyramid pyr;
  pyr.width = img.width();
  pyr.height = img.height();
  pyr.levels.resize(nlevels);

  const Plane lo = d::colfilter(x, f::h0o);
  const Plane hi = d::colfilter(x, f::h1o);
  Plane lolo = d::rowfilter(lo, f::h0o);
  d::store(pyr.levels[0], d::rowfilter(hi, f::h0o), d::horizontal_slots);
  d::store(pyr.levels[0], d::rowfilter(lo, f::h1o), d::vertical_slots);
  d::store(pyr.levels[0], d::rowfilter(hi, f::h1o), d::diagonal_slots);

  for (std::size_t level = 1; level < nlevels; ++level) {
    lolo = d::extend_to_multiple_of_4(std::move(lolo));
    const Plane qlo = d::coldfilt(lolo, f::h0b, f::h0a);
    const Plane qhi = d::coldfilt(lolo, f::h1b, f::h1a);
    lolo = d::rowdfilt(qlo, f::h0b, f::h0a);
    d::store(pyr.levels[level], d::rowdfilt(qhi, f::h0b, f::h0a), d::horizontal_slots);
    d::store(pyr.levels[level], d::rowdfilt(qlo, f::h1b, f::h1a), d::vertical_slots);
    d::store(pyr.levels[level], d::rowdfilt(qhi, f::h1b, f::h1a), d::diagonal_slots);
  }
  pyr.lowpass = std::move(lolo);
  return pyr;
}

inline void validate(const CoefficientPyramid& pyr) {
  namespace d = dtcwt_detail;
  if (pyr.levels.empty()) d::malformed("pyramid has no levels");
  if (pyr.lowpass.data.size() != pyr.lowpass.rows * pyr.lowpass.cols)
    d::malformed("lowpass storage does not match its dimensions");
  for (std::size_t l = 0; l < pyr.levels.size(); ++l) {
    const auto& level = pyr.levels[l];
    if (level.rows == 0 || level.cols == 0) d::malformed("empty subband");
    for (const auto& band : level.bands)
      if (band.size() != level.rows * level.cols)
        d::malformed("subband storage does not match level " + std::to_string(l + 1));
  }
  const auto& coarsest = pyr.levels.back();
  if (pyr.lowpass.rows != 2 * coarsest.rows || pyr.lowpass.cols != 2 * coarsest.cols)
    d::malformed("lowpass dimensions do not match the coarsest level");
  const auto& finest = pyr.levels.front();
  const std::size_t ext_rows = 2 * finest.rows;
  const std::size_t ext_cols = 2 * finest.cols;
  if (pyr.height == 0 || pyr.width == 0 || pyr.height > ext_rows ||
      pyr.width > ext_cols || ext_rows - pyr.height > 1 || ext_cols - pyr.width > 1)
    d::malformed("original size does not match the finest level");
}

inline Image dtcwt_inverse(const CoefficientPyramid& pyr) {
  namespace f = dtcwt_filters;
  namespace d = dtcwt_detail;
  validate(pyr);

  Plane z = pyr.lowpass;
  for (std::size_t level = pyr.levels.size(); level >= 2; --level) {
    const auto& band = pyr.levels[level - 1];
    const Plane lh = d::load(band, d::horizontal_slots);
    const Plane hl = d::load(band, d::vertical_slots);
    const Plane hh = d::load(band, d::diagonal_slots);
    const Plane y1 = d::add(d::colifilt(z, f::g0b, f::g0a), d::colifilt(lh, f::g1b, f::g1a));
    const Plane y2 = d::add(d::colifilt(hl, f::g0b, f::g0a), d::colifilt(hh, f::g1b, f::g1a));
    z = d::add(d::rowifilt(y1, f::g0b, f::g0a), d::rowifilt(y2, f::g1b, f::g1a));

    const auto& finer = pyr.levels[level - 2];
    const std::size_t want_rows = 2 * finer.rows;
    const std::size_t want_cols = 2 * finer.cols;
    z = d::crop_one(z, z.rows != want_rows, z.cols != want_cols);
    if (z.rows != want_rows || z.cols != want_cols)
      d::malformed("subband sizes are inconsistent between levels " +
                   std::to_string(level - 1) + " and " + std::to_string(level));
  }

  const auto& band = pyr.levels.front();
  const Plane lh = d::load(band, d::horizontal_slots);
  const Plane hl = d::load(band, d::vertical_slots);
  const Plane hh = d::load(band, d::diagonal_slots);
  const Plane y1 = d::add(d::colfilter(z, f::g0o), d::colfilter(lh, f::g1o));
  const Plane y2 = d::add(d::colfilter(hl, f::g0o), d::colfilter(hh, f::g1o));
  z = d::add(d::rowfilter(y1, f::g0o), d::rowfilter(y2, f::g1o));

  Image out(pyr.width, pyr.height, 0.0);
  for (std::size_t r = 0; r < pyr.height; ++r)
    for (std::size_t c = 0; c < pyr.width; ++c) out(c, r) = z(r, c);
  return out;
}

}  // namespace ctnoise
