#include <gtest/gtest.h>

#include <cmath>

#include "ctnoise/noise_metrics.hpp"
#include "ctnoise/phantom.hpp"
#include "test_support.hpp"

using namespace ctnoise;
using ctnoise::testing::gaussian_image;
using ctnoise::testing::random_image;

namespace {

ScanPair noise_pair(double var_high, double var_low, std::uint64_t seed) {
  Image hi = gaussian_image(160, 160, seed, 40.0, std::sqrt(var_high));
  Image lo = gaussian_image(160, 160, seed + 1000, 40.0, std::sqrt(var_low));
  hi.meta().mas = var_low / var_high * 5.0;
  lo.meta().mas = 5.0;
  return {"p", std::move(hi), std::move(lo), {16, 16, 128, 128}, std::nullopt};
}

// Brute-force sample variance in the same summation order as roi_variance.
double brute_variance(const Image& img, const Roi& r) {
  double s = 0.0;
  for (std::size_t y = r.y; y < r.y + r.h; ++y)
    for (std::size_t x = r.x; x < r.x + r.w; ++x) s += img(x, y);
  const double mean = s / double(r.w * r.h);
  double ss = 0.0;
  for (std::size_t y = r.y; y < r.y + r.h; ++y)
    for (std::size_t x = r.x; x < r.x + r.w; ++x)
      ss += (img(x, y) - mean) * (img(x, y) - mean);
  return ss / double(r.w * r.h - 1);
}

double brute_mae(const Image& o, const Image& f) {
  double s = 0.0;
  for (std::size_t y = 0; y < o.height(); ++y)
    for (std::size_t x = 0; x < o.width(); ++x)
      s += std::abs((o(x, y) + 1024.0) / 4096.0 - (f(x, y) + 1024.0) / 4096.0);
  return s / double(o.size());
}

}  // namespace

TEST(RThe, FromDoseAndOverride) {
  ScanPair pair{"p", Image(2, 2), Image(2, 2), {0, 0, 2, 1}, std::nullopt};
  pair.high.meta().mas = 48.0;
  pair.low.meta().mas = 5.0;
  EXPECT_EQ(compute_r_the(pair), 9.6);
  pair.rthe_override = 7.36;
  EXPECT_EQ(compute_r_the(pair), 7.36);
  pair.rthe_override.reset();
  pair.low.meta().mas = 48.0;
  EXPECT_EQ(compute_r_the(pair), 1.0);
  pair.low.meta().mas.reset();
  try {
    compute_r_the(pair);
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::missing_dose);
  }
}

TEST(RBlind, Values) {
  EXPECT_EQ(r_blind(200.0, 100.0), 2.0);
  for (double v : {1e-6, 3.7, 1e9}) EXPECT_EQ(r_blind(v, v), 1.0);
  for (double bad : {0.0, 1e-12, -1.0}) {
    try {
      r_blind(1.0, bad);
      FAIL() << bad;
    } catch (const error& e) {
      EXPECT_EQ(e.code(), errc::degenerate_high_variance);
    }
  }
  for (double c : {1e-3, 0.5, 7.0, -3.0}) {
    EXPECT_NEAR(r_blind(c * c * 37.0, c * c * 5.0), r_blind(37.0, 5.0), 1e-12 * 7.4);
  }
}

TEST(MeanAbsError, Values) {
  const Image a = random_image(8, 6, 1);
  ScanPair pair{"p", a, random_image(8, 6, 2), {0, 0, 8, 6}, 1.0};
  EXPECT_EQ(mean_abs_error(pair, pair.high, pair.low), 0.0);

  Image shifted = pair.high;
  for (double& v : shifted.pixels()) v += 40.96;
  EXPECT_NEAR(mean_abs_error(pair, shifted, pair.low), 0.005, 1e-15);
  EXPECT_THROW(mean_abs_error(pair, Image(3, 3), pair.low), error);
}

TEST(Theta, Values) {
  EXPECT_EQ(theta(0.5, 0.01, 10.0), 0.35);
  for (double b : {0.0, 0.01, 1000.0}) EXPECT_EQ(theta(1.0, 0.0, b), 0.0);
  EXPECT_EQ(theta(0.8, 0.3, 0.0), (1.0 - 0.8) * (1.0 - 0.8));
  EXPECT_LT(theta(0.9, 0.01, 1.0), theta(0.9, 0.02, 1.0));
  EXPECT_LT(theta(0.95, 0.01, 1.0), theta(1.1, 0.01, 1.0));
  EXPECT_GT(theta(1.0, 1e-9, 1.0), 0.0);
}

// R_blind, M and theta against a brute-force recomputation with the same summation
// order: results must agree to the last bit.
TEST(Estimate, BruteForceOnTinyPairs) {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    ScanPair pair{"p", random_image(4, 4, seed), random_image(4, 4, seed + 100),
                  {0, 0, 4, 4}, std::nullopt};
    pair.high.meta().mas = 48.0;
    pair.low.meta().mas = 5.0;
    const FilterSpec spec{MatchedFilterParams{1, 1.0}};
    const std::vector<double> betas = {0.01, 0.1, 1, 10, 100, 1000};
    const NoiseEstimate e = estimate(pair, spec, betas);

    const Image fh = matched_filter(pair.high, {1, 1.0});
    const Image fl = matched_filter(pair.low, {1, 1.0});
    Image rh(4, 4), rl(4, 4);
    for (std::size_t i = 0; i < 16; ++i) {
      rh.pixels()[i] = pair.high.pixels()[i] - fh.pixels()[i];
      rl.pixels()[i] = pair.low.pixels()[i] - fl.pixels()[i];
    }
    const double s2h = brute_variance(rh, pair.roi);
    const double s2l = brute_variance(rl, pair.roi);
    const double rb = s2l / s2h;
    const double ratio = rb / (48.0 / 5.0);
    const double m = 0.5 * (brute_mae(pair.high, fh) + brute_mae(pair.low, fl));
    EXPECT_EQ(e.sigma2_high, s2h);
    EXPECT_EQ(e.sigma2_low, s2l);
    EXPECT_EQ(e.r_blind, rb);
    EXPECT_EQ(e.ratio_of_ratios, ratio);
    EXPECT_EQ(e.m, m);
    ASSERT_EQ(e.theta_by_beta.size(), betas.size());
    for (std::size_t k = 0; k < betas.size(); ++k) {
      EXPECT_EQ(e.theta_by_beta[k].beta, betas[k]);
      EXPECT_EQ(e.theta_by_beta[k].theta, (1.0 - ratio) * (1.0 - ratio) + betas[k] * m);
    }
  }
}

TEST(Estimate, BaselineOnPureNoise) {
  const ScanPair pair = noise_pair(100.0, 960.0, 5);
  const NoiseEstimate e = estimate(pair, FilterSpec{});
  EXPECT_NEAR(e.ratio_of_ratios, 1.0, 0.05);
  EXPECT_EQ(e.m, 0.0);
  EXPECT_EQ(e.sigma2_high, roi_variance(pair.high, pair.roi));

  const ScanPair two = noise_pair(50.0, 100.0, 9);
  EXPECT_NEAR(baseline_estimate(two).r_blind, 2.0, 0.1);
}

TEST(Estimate, IdenticalImagesGiveUnitRatio) {
  ScanPair pair = noise_pair(100.0, 100.0, 2);
  pair.low = pair.high;
  pair.rthe_override = 1.0;
  EXPECT_EQ(baseline_estimate(pair).r_blind, 1.0);
}

TEST(Estimate, IdentityFilterIsDegenerate) {
  const ScanPair pair = noise_pair(100.0, 960.0, 3);
  try {
    estimate(pair, parse_filter_spec("ad:iterations=0"));
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::degenerate_high_variance);
  }
}

TEST(Estimate, InternalConsistency) {
  const ScanPair pair = noise_pair(100.0, 960.0, 4);
  for (const char* text : {"mf:half_width=1,sigma_t=1", "bf:half_width=2,sigma_sx=1,sigma_sy=1,sigma_r=50",
                           "ad", "cdwt:threshold=50", "fde:noise_variance=1e-6", "pwnlm"}) {
    const NoiseEstimate e = estimate(pair, parse_filter_spec(text));
    EXPECT_NEAR(e.r_blind, e.sigma2_low / e.sigma2_high, 1e-12 * e.r_blind) << text;
    EXPECT_EQ(e.ratio_of_ratios, e.r_blind / e.r_the);
    for (const auto& bt : e.theta_by_beta) {
      EXPECT_TRUE(std::isfinite(bt.theta));
      EXPECT_NEAR(bt.theta, theta(e.ratio_of_ratios, e.m, bt.beta), 1e-12);
    }
    EXPECT_GT(e.m, 0.0) << text;
  }
}

TEST(Estimate, LinearFiltersAreScaleInvariant) {
  const ScanPair pair = noise_pair(100.0, 960.0, 6);
  for (double c : {0.25, 3.0}) {
    ScanPair scaled = pair;
    scaled.high = scale(pair.high, c);
    scaled.low = scale(pair.low, c);
    const auto mf = parse_filter_spec("mf:half_width=2,sigma_t=1");
    EXPECT_NEAR(estimate(scaled, mf).ratio_of_ratios, estimate(pair, mf).ratio_of_ratios,
                1e-9 * estimate(pair, mf).ratio_of_ratios);
    // The noise variance parameter carries units of intensity squared.
    const FdeParams fp{1e-6};
    const auto before = estimate(pair, {fp}).ratio_of_ratios;
    const auto after = estimate(scaled, {FdeParams{fp.noise_variance * c * c}}).ratio_of_ratios;
    EXPECT_NEAR(after, before, 1e-9 * before);
  }
}

TEST(Estimate, RampContaminatesBaseline) {
  PhantomParams p;
  p.signal = {SignalKind::ramp, 50.0};
  p.seed = 42;
  const auto ph = generate_pair(p);
  const double base = std::abs(baseline_estimate(ph.pair).ratio_of_ratios - 1.0);
  const double ad = std::abs(estimate(ph.pair, default_spec(FilterKind::ad)).ratio_of_ratios - 1.0);
  EXPECT_GT(base, ad);
}

TEST(Estimate, RejectsBadInputs) {
  ScanPair pair = noise_pair(100.0, 960.0, 7);
  pair.roi = {150, 150, 20, 20};
  EXPECT_THROW(estimate(pair, FilterSpec{}), error);
  pair.roi = {0, 0, 10, 10};
  EXPECT_THROW(estimate(pair, FilterSpec{}, std::vector<double>{}), error);
  EXPECT_THROW(estimate(pair, FilterSpec{}, std::vector<double>{-1.0}), error);
  pair.low = Image(10, 10);
  EXPECT_THROW(estimate(pair, FilterSpec{}), error);
}
