#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace rsenf;

namespace {
const GridProfile eu{50.0};

const ComponentTable& table30() {
  static const auto t = idle_sweep_table(eu, 30.0, percent_grid(5.0));
  return t;
}

LuminanceSeries video(double fps, int capacity, double idle, double seconds, std::optional<double> snr,
                      std::uint64_t seed = 3) {
  SynthesisConfig c;
  c.seed = seed;
  c.noise_snr_db = snr;
  const auto enf = synth_enf(seconds + 2, eu, c);
  return synth_luminance(enf, CaptureProfile::from_idle(fps, capacity, idle), c,
                         static_cast<int>(std::lround(seconds * fps)), eu);
}
}  // namespace

TEST(MatchIdle, FortyOverSeventyRatioOnePointNine) {
  const auto e = match_idle({40.0, 70.0, 1.9}, table30());
  ASSERT_TRUE(e.matched);
  EXPECT_EQ(*e.band_low_pct, 45.0);
  EXPECT_EQ(*e.band_high_pct, 50.0);
  EXPECT_EQ(*e.point_estimate_pct, 47.5);
}

TEST(MatchIdle, SeventyOverFortyRatioEightPointFive) {
  const auto e = match_idle({70.0, 40.0, 8.5}, table30());
  ASSERT_TRUE(e.matched);
  EXPECT_EQ(*e.band_low_pct, 35.0);
  EXPECT_EQ(*e.band_high_pct, 40.0);
}

TEST(MatchIdle, BandIsFiveWideWithMidpoint) {
  for (SpectralFeatures f : {SpectralFeatures{100.0, 70.0, 3.0}, {70.0, 100.0, 1.5}, {10.0, 40.0, 3.0}, {40.0, 10.0, 1.2}}) {
    const auto e = match_idle(f, table30());
    ASSERT_TRUE(e.matched);
    EXPECT_DOUBLE_EQ(*e.band_high_pct - *e.band_low_pct, 5.0);
    EXPECT_DOUBLE_EQ(*e.point_estimate_pct, 0.5 * (*e.band_low_pct + *e.band_high_pct));
  }
}

TEST(MatchIdle, AbsentSecondMatchesOnStrongestOnly) {
  SpectralFeatures f;
  f.h1_hz = 100.0;
  const auto e = match_idle(f, table30());
  ASSERT_TRUE(e.matched);
  EXPECT_EQ(*e.band_low_pct, 0.0);
}

TEST(MatchIdle, UnknownComponentUnmatched) {
  const auto e = match_idle({55.0, 70.0, 2.0}, table30());
  EXPECT_FALSE(e.matched);
  EXPECT_FALSE(e.band_low_pct.has_value());
  EXPECT_FALSE(e.point_estimate_pct.has_value());
}

TEST(EstimateIdle, TwentyFivePercentRoundTrip) {
  const auto s = video(30, 400, 0.25, 60, 20.0);
  const auto e = estimate_idle(s, eu, table30());
  ASSERT_TRUE(e.matched) << e.diagnostic;
  EXPECT_NEAR(*e.point_estimate_pct, 25.0, 5.0);
}

TEST(EstimateIdle, ResolutionIndependent) {
  for (double idle : {0.1, 0.4, 0.65}) {
    const auto a = estimate_idle(video(30, 300, idle, 40, 25.0), eu, table30());
    const auto b = estimate_idle(video(30, 600, idle, 40, 25.0), eu, table30());
    ASSERT_TRUE(a.matched && b.matched);
    EXPECT_EQ(*a.band_low_pct, *b.band_low_pct) << idle;
  }
}

TEST(EstimateIdle, NoiseOnlyIsUnmatched) {
  const auto s = video(30, 200, 0.3, 30, -60.0);
  const auto e = estimate_idle(s, eu, table30());
  EXPECT_FALSE(e.matched);
  EXPECT_FALSE(e.diagnostic.empty());
}

TEST(EstimateIdle, RejectsMismatchedTable) {
  const auto s = video(25, 200, 0.3, 25, 20.0);
  EXPECT_THROW(estimate_idle(s, eu, table30()), Error);
  const auto t = video(30, 200, 0.3, 10, 20.0);
  EXPECT_THROW(estimate_idle(t, eu, table30()), Error);
}

TEST(VerticalPhase, FortyEightPercent) {
  const auto s = video(30, 200, 0.48, 40, 30.0);
  const auto r = vertical_phase(RowMeansMatrix::from_series(s), eu);
  EXPECT_NEAR(r.idle_pct, 48.0, 2.0);
  EXPECT_NEAR(r.alias_freq_hz, 10.0, 0.2);
  EXPECT_EQ(r.per_row_phase.size(), 104u);
  EXPECT_NEAR(r.read_out_time_s, 104.0 / (30.0 * 200.0), 5e-4);
}

TEST(VerticalPhase, FourPercent) {
  const auto s = video(30, 200, 0.04, 40, 30.0);
  EXPECT_NEAR(vertical_phase(RowMeansMatrix::from_series(s), eu).idle_pct, 4.0, 2.0);
}

TEST(VerticalPhase, CycleCountFormula) {
  const auto s = video(30, 150, 0.3, 35, 30.0);
  const auto r = vertical_phase(RowMeansMatrix::from_series(s), eu);
  EXPECT_NEAR(r.idle_pct, 100.0 * (1.0 - r.cycle_count * 30.0 / 100.0), 1e-9);
  EXPECT_NEAR(r.cycle_count, std::round(r.cycle_count * 100) / 100, 1e-12);
}

TEST(VerticalPhase, DivisorFrameRateInapplicable) {
  const auto s = video(25, 100, 0.3, 35, 30.0);
  try {
    vertical_phase(RowMeansMatrix::from_series(s), eu);
    FAIL() << "expected inapplicable";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::inapplicable);
  }
}

TEST(VerticalPhase, TooShortRejected) {
  const auto s = video(30, 100, 0.3, 20, 30.0);
  EXPECT_THROW(vertical_phase(RowMeansMatrix::from_series(s), eu), Error);
}

TEST(VerticalPhase, NoiseOnlyUnreliable) {
  const auto s = video(30, 100, 0.3, 35, -40.0);
  try {
    vertical_phase(RowMeansMatrix::from_series(s), eu);
    FAIL() << "expected unreliable";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::unreliable);
  }
}

TEST(MethodsAgree, NonDivisorFrameRate) {
  for (double idle : {0.23, 0.38}) {
    const auto s = video(30, 300, idle, 60, 25.0);
    const auto e = estimate_idle(s, eu, table30());
    const auto v = vertical_phase(RowMeansMatrix::from_series(s), eu);
    ASSERT_TRUE(e.matched);
    EXPECT_LE(std::abs(*e.point_estimate_pct - v.idle_pct), 5.0) << idle;
  }
}
