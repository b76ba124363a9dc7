#include <gtest/gtest.h>

#include <functional>
#include <sstream>

#include "rsenf/rsenf.hpp"
#include "test_util.hpp"

using namespace rsenf;

namespace {

LuminanceSeries small_series() {
  const GridProfile eu(50.0);
  const auto capture = CaptureProfile::from_idle(30.0, 40, 0.25);
  const auto enf = synth_enf(10.0, eu, testutil::quiet_config(5));
  return synth_luminance(enf, capture, testutil::quiet_config(5), 200, eu);
}

std::string error_text(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Timestamps, FormatAndParse) {
  const auto t = io::parse_iso("2024-02-29T23:59:58Z");
  ASSERT_TRUE(t);
  EXPECT_EQ(io::format_iso(*t), "2024-02-29T23:59:58Z");
  EXPECT_EQ(io::format_iso(add_seconds(*t, 12.25)), "2024-03-01T00:00:10.250Z");
  EXPECT_EQ(io::parse_iso("2024-03-01T00:00:10.250Z"), add_seconds(*t, 12.25));
  EXPECT_FALSE(io::parse_iso("2023-02-29T00:00:00Z"));
  EXPECT_FALSE(io::parse_iso("2024-01-01"));
  EXPECT_FALSE(io::parse_iso("2024-01-01T00:00:00Zx"));
}

TEST(Rlum, RoundTripWithinNineDigits) {
  const auto s = small_series();
  std::stringstream buf;
  io::write_rlum(s, buf, {25.0});
  const auto back = io::read_rlum(buf);
  EXPECT_EQ(back.series.frame_count(), s.frame_count());
  EXPECT_EQ(back.series.rows_per_frame(), s.rows_per_frame());
  EXPECT_EQ(back.series.capture().row_capacity(), s.rows_per_frame());
  ASSERT_TRUE(back.series.grid_hint());
  EXPECT_EQ(back.series.grid_hint()->nominal_enf_hz(), 50.0);
  ASSERT_TRUE(back.meta.true_idle_pct);
  EXPECT_EQ(*back.meta.true_idle_pct, 25.0);
  for (std::size_t i = 0; i < s.samples().size(); ++i)
    EXPECT_NEAR(back.series.samples()[i], s.samples()[i], 1e-8 * std::abs(s.samples()[i]));

  // Once in decimal form, emit and load are exact inverses.
  std::stringstream again, again2;
  io::write_rlum(back.series, again, back.meta);
  const std::string text = again.str();
  io::write_rlum(io::read_rlum(again).series, again2, back.meta);
  EXPECT_EQ(text, again2.str());
}

TEST(Rlum, MissingLineReportsCounts) {
  const auto s = small_series();
  std::stringstream buf;
  io::write_rlum(s, buf);
  std::string text = buf.str();
  text.erase(text.rfind('\n', text.size() - 2) + 1);  // drop the last value line
  std::stringstream cut(text);
  const auto msg = error_text([&] { io::read_rlum(cut, "clip.rlum"); });
  EXPECT_NE(msg.find("clip.rlum:"), std::string::npos) << msg;
  EXPECT_NE(msg.find(std::to_string(s.samples().size() - 1) + " values"), std::string::npos) << msg;
  EXPECT_NE(msg.find(std::to_string(s.samples().size())), std::string::npos) << msg;
}

TEST(Rlum, HeaderRules) {
  std::stringstream bad_json("{not json\n1\n");
  EXPECT_NE(error_text([&] { io::read_rlum(bad_json, "a.rlum"); }).find("a.rlum:1:"), std::string::npos);
  std::stringstream missing(R"({"version":1,"frame_rate_fps":30,"frame_count":1})" "\n1\n");
  EXPECT_NE(error_text([&] { io::read_rlum(missing); }).find("rows_per_frame"), std::string::npos);
  std::stringstream version(R"({"version":2,"frame_rate_fps":30,"rows_per_frame":1,"frame_count":1})" "\n1\n");
  EXPECT_NE(error_text([&] { io::read_rlum(version); }).find("version"), std::string::npos);
  std::stringstream junk(R"({"version":1,"frame_rate_fps":30,"rows_per_frame":1,"frame_count":2})" "\n1\nabc\n");
  EXPECT_NE(error_text([&] { io::read_rlum(junk, "j.rlum"); }).find("j.rlum:3:"), std::string::npos);
}

TEST(EnfLog, RoundTrip) {
  const GridProfile us(60.0);
  const auto e = synth_enf(300.0, us, testutil::quiet_config(9), *io::parse_iso("2025-06-01T12:00:00Z"));
  std::stringstream buf;
  io::write_enf_csv(e, buf);
  const auto back = io::read_enf_log(buf);
  EXPECT_EQ(back.start_time, e.start_time);
  ASSERT_EQ(back.size(), e.size());
  for (std::size_t i = 0; i < e.size(); ++i) EXPECT_NEAR(back.values_hz[i], e.values_hz[i], 1e-6);
}

TEST(EnfLog, GapIsCadenceErrorAtOffendingRow) {
  std::stringstream buf(
      "timestamp_utc,frequency_hz\n"
      "2024-01-01T00:00:00Z,50.01\n"
      "2024-01-01T00:00:01Z,50.02\n"
      "2024-01-01T00:00:03Z,50.00\n");
  const auto msg = error_text([&] { io::read_enf_log(buf, "log.csv"); });
  EXPECT_NE(msg.find("log.csv:4:"), std::string::npos) << msg;
  EXPECT_NE(msg.find("cadence"), std::string::npos) << msg;
}

TEST(EnfLog, FrequencyOutsideNominalBand) {
  std::stringstream buf(
      "timestamp_utc,frequency_hz\n"
      "2024-01-01T00:00:00Z,50.01\n"
      "2024-01-01T00:00:01Z,51.2\n");
  EXPECT_NE(error_text([&] { io::read_enf_log(buf, "x.csv"); }).find("x.csv:3:"), std::string::npos);
  std::stringstream header("time,freq\n");
  EXPECT_NE(error_text([&] { io::read_enf_log(header, "h.csv"); }).find("h.csv:1:"), std::string::npos);
}

TEST(RowMeans, RoundTripAndRectangularity) {
  const auto m = RowMeansMatrix::from_series(small_series());
  std::stringstream buf;
  io::write_row_means(m, buf);
  const auto back = io::read_row_means(buf, 30.0);
  ASSERT_EQ(back.rows(), m.rows());
  ASSERT_EQ(back.frame_count(), m.frame_count());
  for (int r = 0; r < m.rows(); ++r)
    for (int f = 0; f < m.frame_count(); ++f) EXPECT_NEAR(back.at(r, f), m.at(r, f), 1e-8);

  std::stringstream ragged("frame_0,frame_1\n1,2\n3\n");
  EXPECT_NE(error_text([&] { io::read_row_means(ragged, 30.0, "rm.csv"); }).find("rm.csv:3:"), std::string::npos);
  std::stringstream header("frame_0,frame_2\n1,2\n");
  EXPECT_NE(error_text([&] { io::read_row_means(header, 30.0, "rm.csv"); }).find("rm.csv:1:"), std::string::npos);
}

TEST(Json, ReportFields) {
  VerificationReport r;
  r.metric_id = 2;
  r.candidates.push_back({100.0, 0.0, 0.97, 12.0, false});
  r.expected_lag_s = 12.0;
  const auto j = io::to_json(r);
  EXPECT_EQ(j["metric"], 2);
  EXPECT_TRUE(j["chosen_lag_s"].is_null());
  EXPECT_EQ(j["decision"], "ND");
  EXPECT_EQ(j["candidates"][0]["corr"], 0.97);
  EXPECT_EQ(j["candidates"][0]["component_hz"], 100.0);

  IdleEstimate e;
  const auto ej = io::to_json(e);
  EXPECT_TRUE(ej["ratio"].is_null());
  EXPECT_TRUE(ej["point_estimate_pct"].is_null());
  EXPECT_FALSE(ej["matched"].get<bool>());
}
