#include <gtest/gtest.h>

#include <cmath>

#include "ctnoise/noise_metrics.hpp"
#include "ctnoise/phantom.hpp"

using namespace ctnoise;

namespace {

double roi_correlation(const Image& a, const Image& b, const Roi& r) {
  const double ma = roi_mean(a, r), mb = roi_mean(b, r);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t y = r.y; y < r.y + r.h; ++y)
    for (std::size_t x = r.x; x < r.x + r.w; ++x) {
      const double da = a(x, y) - ma, db = b(x, y) - mb;
      sab += da * db;
      saa += da * da;
      sbb += db * db;
    }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

// Reference outputs of the published SplitMix64 generator and of Box-Muller on
// its 53-bit uniforms (computed independently in Python).
TEST(Prng, ReferenceValues) {
  SplitMix64 rng(1234567);
  EXPECT_EQ(rng.next(), 6457827717110365317ULL);
  EXPECT_EQ(rng.next(), 3203168211198807973ULL);
  EXPECT_EQ(rng.next(), 9817491932198370423ULL);

  GaussianStream g(42);
  EXPECT_DOUBLE_EQ(g.next(), 0.8822489062222688);
  EXPECT_DOUBLE_EQ(g.next(), 1.388473285287707);
  EXPECT_DOUBLE_EQ(g.next(), -0.4508498757188601);
  EXPECT_DOUBLE_EQ(g.next(), 0.6707164409024291);
}

TEST(Phantom, Deterministic) {
  PhantomParams p;
  p.width = 96;
  p.height = 80;
  p.signal = {SignalKind::chest, 50.0};
  p.texture = NoiseTexture::k3;
  const auto a = generate_pair(p);
  const auto b = generate_pair(p);
  EXPECT_EQ(a.pair.high, b.pair.high);
  EXPECT_EQ(a.pair.low, b.pair.low);
  EXPECT_EQ(a.truth.noise_low, b.truth.noise_low);
  p.seed = 43;
  EXPECT_NE(generate_pair(p).pair.high, a.pair.high);
}

TEST(Phantom, DefaultGeometryAndDose) {
  const auto ph = generate_pair({});
  EXPECT_EQ(ph.pair.high.width(), 512u);
  EXPECT_EQ(ph.pair.roi, (Roi{192, 192, 128, 128}));
  EXPECT_EQ(compute_r_the(ph.pair), 9.6);
  EXPECT_EQ(ph.truth.true_ratio, 9.6);
  for (double v : ph.truth.clean.pixels()) EXPECT_EQ(v, 40.0);
}

TEST(Phantom, NoiseRatioAndIndependence) {
  const auto ph = generate_pair({});
  const Roi roi = ph.pair.roi;
  const double ratio =
      roi_variance(ph.truth.noise_low, roi) / roi_variance(ph.truth.noise_high, roi);
  EXPECT_GE(ratio, 9.12);
  EXPECT_LE(ratio, 10.08);
  EXPECT_LT(std::abs(roi_correlation(ph.truth.noise_high, ph.truth.noise_low, roi)),
            3.0 / std::sqrt(16384.0));
}

TEST(Phantom, HighNoiseVarianceWithinChiSquareInterval) {
  const double n = 128.0 * 128.0;
  const double half_width = 3.0 * std::sqrt(2.0 / (n - 1.0));
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    PhantomParams p;
    p.seed = seed;
    const auto ph = generate_pair(p);
    const double v = roi_variance(ph.truth.noise_high, ph.pair.roi);
    EXPECT_GT(v, 100.0 * (1.0 - half_width)) << seed;
    EXPECT_LT(v, 100.0 * (1.0 + half_width)) << seed;
  }
}

TEST(Phantom, GroundTruthIdentities) {
  PhantomParams p;
  p.width = 64;
  p.height = 64;
  p.signal = {SignalKind::ramp, 50.0};
  const auto ph = generate_pair(p);
  for (std::size_t i = 0; i < ph.truth.clean.size(); ++i) {
    EXPECT_EQ(ph.pair.high.pixels()[i], ph.truth.clean.pixels()[i] + ph.truth.noise_high.pixels()[i]);
    EXPECT_EQ(ph.pair.low.pixels()[i], ph.truth.clean.pixels()[i] + ph.truth.noise_low.pixels()[i]);
    EXPECT_EQ(ph.pair.high.pixels()[i], static_cast<float>(ph.pair.high.pixels()[i]));
  }
  const auto [rh, rl] = oracle_residual(ph.pair, ph.truth);
  EXPECT_EQ(rh.pixels().size(), ph.truth.noise_high.size());
  for (std::size_t i = 0; i < rh.size(); ++i) {
    EXPECT_EQ(rh.pixels()[i], ph.truth.noise_high.pixels()[i]);
    EXPECT_EQ(rl.pixels()[i], ph.truth.noise_low.pixels()[i]);
  }
}

TEST(Phantom, OracleRatioRecovery) {
  const auto ph = generate_pair({});
  const auto [rh, rl] = oracle_residual(ph.pair, ph.truth);
  const double rb = r_blind(roi_variance(rl, ph.pair.roi), roi_variance(rh, ph.pair.roi));
  EXPECT_NEAR(rb, 9.6, 0.05 * 9.6);
}

TEST(Phantom, OracleMismatch) {
  PhantomParams p;
  p.width = p.height = 32;
  auto ph = generate_pair(p);
  auto other = ph.truth;
  other.noise_high.pixels()[5] += 1.0;
  EXPECT_THROW(oracle_residual(ph.pair, other), error);
  other = ph.truth;
  other.clean = Image(16, 16);
  try {
    oracle_residual(ph.pair, other);
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::mismatch);
  }
}

TEST(Phantom, RampSignal) {
  PhantomParams p;
  p.signal = {SignalKind::ramp, 50.0};
  const auto ph = generate_pair(p);
  const Roi roi = ph.pair.roi;
  const auto& c = ph.truth.clean;
  EXPECT_EQ(c(roi.x, 7), 40.0);
  EXPECT_NEAR(c(roi.x + roi.w, 300) - c(roi.x, 300), 50.0, 1e-4);
  // Signal variance of a linear ramp over w samples: A^2 (w^2 - 1) / (12 w^2).
  const double w = double(roi.w);
  EXPECT_NEAR(roi_variance(c, roi), 2500.0 * (w * w - 1) / (12 * w * w) * (w * roi.h) / (w * roi.h - 1), 1e-3);
}

TEST(Phantom, ChestSignal) {
  PhantomParams p;
  p.signal = {SignalKind::chest, 0.0};
  const auto ph = generate_pair(p);
  const auto& c = ph.truth.clean;
  const Roi patch = chest_patch(512, 512);
  EXPECT_EQ(patch.w, 199u);  // floor(0.39 * 512)
  EXPECT_EQ(c(0, 0), -1000.0);
  EXPECT_EQ(c(256, 153), -800.0);  // lung centre
  EXPECT_EQ(c(40, 256), 50.0);     // body, left of the patch
  const Roi roi = ph.pair.roi;
  EXPECT_GE(roi.x, patch.x);
  EXPECT_LE(roi.x + roi.w, patch.x + patch.w);
  EXPECT_EQ(roi_variance(c, roi), 0.0);
  for (std::size_t y = patch.y; y < patch.y + patch.h; ++y) EXPECT_EQ(c(patch.x, y), 40.0);

  p.roi = Roi{0, 0, 64, 64};
  EXPECT_THROW(generate_pair(p), error);
}

TEST(Phantom, TexturedNoiseKeepsVariance) {
  PhantomParams p;
  p.texture = NoiseTexture::k3;
  const auto ph = generate_pair(p);
  const Roi roi = ph.pair.roi;
  EXPECT_NEAR(roi_variance(ph.truth.noise_high, roi), 100.0, 10.0);
  EXPECT_NEAR(roi_variance(ph.truth.noise_low, roi) / roi_variance(ph.truth.noise_high, roi), 9.6, 0.1 * 9.6);
  // Lag-1 correlation of the [1 2 1] kernel: (1*2 + 2*1) / (1 + 4 + 1) = 2/3.
  Image shifted(ph.truth.noise_high.width(), ph.truth.noise_high.height());
  for (std::size_t y = 0; y < shifted.height(); ++y)
    for (std::size_t x = 0; x + 1 < shifted.width(); ++x) shifted(x, y) = ph.truth.noise_high(x + 1, y);
  EXPECT_NEAR(roi_correlation(ph.truth.noise_high, shifted, roi), 2.0 / 3.0, 0.03);
}

TEST(Phantom, InvalidParams) {
  auto expect_invalid = [](PhantomParams p) {
    try {
      generate_pair(p);
      FAIL();
    } catch (const error& e) {
      EXPECT_EQ(e.code(), errc::invalid_params);
    }
  };
  PhantomParams p;
  p.ratio = -1.0;
  expect_invalid(p);
  p = {};
  p.sigma_high = 0.0;
  expect_invalid(p);
  p = {};
  p.roi = Roi{500, 500, 128, 128};
  expect_invalid(p);
  p = {};
  p.width = 4;
  expect_invalid(p);
}
