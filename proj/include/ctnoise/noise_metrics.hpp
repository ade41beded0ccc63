#pragma once

// Blind noise-ratio estimation from residual images and the cost used to rank
// filter settings:
//
//   R_blind = s2_low / s2_high                      (residual ROI variances)
//   M       = (MAE(high, f(high)) + MAE(low, f(low))) / 2   (unit window)
//   theta   = (1 - R_blind / R_the)^2 + beta * M
//
// R_the is the tube current time product ratio mAs_high / mAs_low.

#include <array>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctnoise/error.hpp"
#include "ctnoise/filter_spec.hpp"
#include "ctnoise/image.hpp"

namespace ctnoise {

inline constexpr std::array<double, 6> default_betas = {0.01, 0.1, 1.0,
                                                        10.0, 100.0, 1000.0};

// Residual variances at or below this (HU^2) make R_blind undefined.
inline constexpr double degenerate_variance = 1e-12;

// Registered high/low technique images of one slice.
struct ScanPair {
  std::string id;
  Image high;
  Image low;
  Roi roi;
  std::optional<double> rthe_override;
};

struct BetaTheta {
  double beta;
  double theta;

  friend bool operator==(const BetaTheta&, const BetaTheta&) = default;
};

struct NoiseEstimate {
  double sigma2_high = 0.0;
  double sigma2_low = 0.0;
  double r_blind = 0.0;
  double r_the = 0.0;
  double ratio_of_ratios = 0.0;
  double m = 0.0;
  std::vector<BetaTheta> theta_by_beta;

  std::optional<double> theta_at(double beta) const {
    for (const auto& bt : theta_by_beta)
      if (bt.beta == beta) return bt.theta;
    return std::nullopt;
  }
};

// Residual statistics before the ratio is formed; kept separately so that
// degenerate evaluations can still be reported.
struct ResidualStats {
  double sigma2_high = 0.0;
  double sigma2_low = 0.0;
  double m = 0.0;
};

inline void validate(const ScanPair& pair) {
  require_same_shape(pair.high, pair.low);
  require_roi(pair.high, pair.roi);
  if (pair.rthe_override &&
      !(std::isfinite(*pair.rthe_override) && *pair.rthe_override > 0.0))
    throw error(errc::invalid_params, "rthe_override must be finite and > 0");
}

inline void validate_betas(std::span<const double> betas) {
  if (betas.empty()) throw error(errc::invalid_params, "beta list is empty");
  for (double b : betas)
    if (!std::isfinite(b) || b < 0.0)
      throw error(errc::invalid_params, "beta values must be finite and >= 0");
}

inline double compute_r_the(const ScanPair& pair) {
  if (pair.rthe_override) return *pair.rthe_override;
  const auto& hi = pair.high.meta().mas;
  const auto& lo = pair.low.meta().mas;
  if (!hi || !lo || !(*hi > 0.0) || !(*lo > 0.0))
    throw error(errc::missing_dose,
                "pair '" + pair.id + "' needs mas > 0 on both images or an override");
  return *hi / *lo;
}

inline double r_blind(double sigma2_low, double sigma2_high) {
  if (!(sigma2_high > degenerate_variance))
    throw error(errc::degenerate_high_variance,
                "high-technique residual variance " + format_number(sigma2_high) +
                    " is not above " + format_number(degenerate_variance));
  return sigma2_low / sigma2_high;
}

// Mean over all pixels of |u_o - u_f| with u the unit-window intensity.
inline double mean_abs_error(const Image& original, const Image& filtered) {
  require_same_shape(original, filtered);
  auto po = original.pixels();
  auto pf = filtered.pixels();
  double sum = 0.0;
  for (std::size_t i = 0; i < po.size(); ++i)
    sum += std::abs(window::to_unit(po[i]) - window::to_unit(pf[i]));
  return sum / static_cast<double>(po.size());
}

inline double mean_abs_error(const ScanPair& pair, const Image& filtered_high,
                             const Image& filtered_low) {
  require_same_shape(pair.high, filtered_high);
  require_same_shape(pair.low, filtered_low);
  return 0.5 * (mean_abs_error(pair.high, filtered_high) +
                mean_abs_error(pair.low, filtered_low));
}

inline double theta(double ratio_of_ratios, double m, double beta) {
  const double miss = 1.0 - ratio_of_ratios;
  return miss * miss + beta * m;
}

inline NoiseEstimate finish_estimate(const ResidualStats& stats, double r_the,
                                     std::span<const double> betas) {
  validate_betas(betas);
  NoiseEstimate e;
  e.sigma2_high = stats.sigma2_high;
  e.sigma2_low = stats.sigma2_low;
  e.m = stats.m;
  e.r_the = r_the;
  e.r_blind = r_blind(stats.sigma2_low, stats.sigma2_high);
  e.ratio_of_ratios = e.r_blind / r_the;
  e.theta_by_beta.reserve(betas.size());
  for (double b : betas) e.theta_by_beta.push_back({b, theta(e.ratio_of_ratios, e.m, b)});
  return e;
}

// Pre-filter statistics: ROI variances of the original images, M = 0.
inline ResidualStats baseline_stats(const ScanPair& pair) {
  validate(pair);
  return {roi_variance(pair.high, pair.roi), roi_variance(pair.low, pair.roi), 0.0};
}

inline ResidualStats residual_stats(const ScanPair& pair, const FilterSpec& spec) {
  if (spec.kind() == FilterKind::none) return baseline_stats(pair);
  validate(pair);
  const Image fh = apply_filter(pair.high, spec);
  const Image fl = apply_filter(pair.low, spec);
  const Image rh = subtract(pair.high, fh);
  const Image rl = subtract(pair.low, fl);
  return {roi_variance(rh, pair.roi), roi_variance(rl, pair.roi),
          mean_abs_error(pair, fh, fl)};
}

inline NoiseEstimate baseline_estimate(
    const ScanPair& pair, std::span<const double> betas = default_betas) {
  const double r_the = compute_r_the(pair);
  return finish_estimate(baseline_stats(pair), r_the, betas);
}

inline NoiseEstimate estimate(const ScanPair& pair, const FilterSpec& spec,
                              std::span<const double> betas = default_betas) {
  validate_betas(betas);
  const double r_the = compute_r_the(pair);
  return finish_estimate(residual_stats(pair, spec), r_the, betas);
}

}  // namespace ctnoise
