#pragma once

// Text file formats: RLUM luminance series, ENF log CSV, row-means CSV, and
// JSON records for estimates and reports.

#include <chrono>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "rsenf/core_model.hpp"
#include "rsenf/error.hpp"
#include "rsenf/idle_estimation.hpp"
#include "rsenf/series.hpp"
#include "rsenf/verification.hpp"

namespace rsenf::io {

using nlohmann::json;

// ---- timestamps ----

/// "YYYY-MM-DDTHH:MM:SSZ", with ".mmm" when the milliseconds are nonzero.
inline std::string format_iso(Timestamp t) {
  using namespace std::chrono;
  const auto day = floor<days>(t);
  const year_month_day ymd{day};
  const hh_mm_ss<milliseconds> tod{t - day};
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), static_cast<int>(tod.hours().count()),
                static_cast<int>(tod.minutes().count()), static_cast<int>(tod.seconds().count()));
  std::string out = buf;
  if (const auto ms = tod.subseconds().count(); ms != 0) {
    std::snprintf(buf, sizeof buf, ".%03d", static_cast<int>(ms));
    out += buf;
  }
  return out + "Z";
}

/// Parses "YYYY-MM-DDTHH:MM:SS[.fff]Z" (a space may replace the T; the Z is
/// optional and means UTC either way).
inline std::optional<Timestamp> parse_iso(const std::string& s) {
  using namespace std::chrono;
  int y, mo, d, h, mi, sec, consumed = 0;
  char sep;
  if (std::sscanf(s.c_str(), "%4d-%2d-%2d%c%2d:%2d:%2d%n", &y, &mo, &d, &sep, &h, &mi, &sec, &consumed) != 7) return {};
  if (sep != 'T' && sep != ' ') return {};
  std::size_t pos = static_cast<std::size_t>(consumed);
  int ms = 0;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    int digits = 0;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
      if (digits < 3) ms = ms * 10 + (s[pos] - '0');
      ++digits, ++pos;
    }
    if (digits == 0) return {};
    for (int i = digits; i < 3; ++i) ms *= 10;
  }
  if (pos < s.size() && s[pos] == 'Z') ++pos;
  if (pos != s.size()) return {};
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || sec > 59) return {};
  return Timestamp{sys_days{ymd}} + hours{h} + minutes{mi} + seconds{sec} + milliseconds{ms};
}

inline std::string format_value(double v) { return rsenf::detail::format_number(v); }

namespace detail {

[[noreturn]] inline void format_error(const std::string& source, std::size_t line, const std::string& rule) {
  fail(ErrorCode::format, source + ":" + std::to_string(line) + ": " + rule);
}

inline double parse_double(const std::string& text, const std::string& source, std::size_t line) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  while (end && (*end == ' ' || *end == '\t' || *end == '\r')) ++end;
  if (end == begin || *end != '\0' || !std::isfinite(v)) format_error(source, line, "not a finite number: '" + text + "'");
  return v;
}

inline std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::invalid_argument, "cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::invalid_argument, "cannot open '" + path + "' for writing");
  return out;
}

}  // namespace detail

// ---- RLUM ----

struct RlumMetadata {
  std::optional<double> true_idle_pct;
};

inline void write_rlum(const LuminanceSeries& s, std::ostream& out, const RlumMetadata& meta = {}) {
  json h;
  h["version"] = 1;
  h["frame_rate_fps"] = s.capture().frame_rate_fps();
  h["rows_per_frame"] = s.rows_per_frame();
  h["frame_count"] = s.frame_count();
  if (s.grid_hint()) h["grid_hz"] = s.grid_hint()->nominal_enf_hz();
  if (meta.true_idle_pct) h["true_idle_pct"] = *meta.true_idle_pct;
  out << h.dump() << '\n';
  for (double v : s.samples()) out << format_value(v) << '\n';
}

struct RlumFile {
  LuminanceSeries series;
  RlumMetadata meta;
};

/// The loaded capture has no idle information: row_capacity = rows_per_frame.
inline RlumFile read_rlum(std::istream& in, const std::string& source = "<rlum>") {
  std::string line;
  if (!std::getline(in, line)) detail::format_error(source, 1, "missing JSON header line");
  json h;
  try {
    h = json::parse(detail::strip_cr(line));
  } catch (const json::exception& e) {
    detail::format_error(source, 1, std::string("header is not valid JSON (") + e.what() + ")");
  }
  if (!h.is_object()) detail::format_error(source, 1, "header must be a JSON object");
  auto need = [&](const char* key) -> const json& {
    if (!h.contains(key) || !h[key].is_number()) detail::format_error(source, 1, std::string("header field '") + key + "' missing or not a number");
    return h[key];
  };
  if (need("version").get<double>() != 1) detail::format_error(source, 1, "unsupported version (expected 1)");
  const double fps = need("frame_rate_fps").get<double>();
  const auto rows_d = need("rows_per_frame").get<double>();
  const auto frames_d = need("frame_count").get<double>();
  if (!(fps > 0)) detail::format_error(source, 1, "frame_rate_fps must be positive");
  if (rows_d < 1 || rows_d != std::floor(rows_d)) detail::format_error(source, 1, "rows_per_frame must be a positive integer");
  if (frames_d < 1 || frames_d != std::floor(frames_d)) detail::format_error(source, 1, "frame_count must be a positive integer");
  const int rows = static_cast<int>(rows_d), frames = static_cast<int>(frames_d);
  std::optional<GridProfile> grid;
  if (h.contains("grid_hz")) {
    if (!h["grid_hz"].is_number() || !(h["grid_hz"].get<double>() > 0))
      detail::format_error(source, 1, "grid_hz must be a positive number");
    grid = GridProfile(h["grid_hz"].get<double>());
  }
  RlumMetadata meta;
  if (h.contains("true_idle_pct") && h["true_idle_pct"].is_number()) meta.true_idle_pct = h["true_idle_pct"].get<double>();

  const auto expected = static_cast<std::size_t>(rows) * static_cast<std::size_t>(frames);
  std::vector<double> samples;
  samples.reserve(expected);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::strip_cr(line);
    if (line.empty()) detail::format_error(source, lineno, "blank line in body");
    samples.push_back(detail::parse_double(line, source, lineno));
  }
  if (samples.size() != expected) {
    detail::format_error(source, lineno, "body has " + std::to_string(samples.size()) +
                                             " values but frame_count x rows_per_frame = " + std::to_string(expected));
  }
  return {LuminanceSeries(CaptureProfile::without_idle(fps, rows), grid, frames, std::move(samples)), meta};
}

inline RlumFile load_rlum(const std::string& path) {
  auto in = detail::open_in(path);
  return read_rlum(in, path);
}

inline void save_rlum(const LuminanceSeries& s, const std::string& path, const RlumMetadata& meta = {}) {
  auto out = detail::open_out(path);
  write_rlum(s, out, meta);
}

// ---- ENF log ----

inline void write_enf_csv(const EnfSeries& e, std::ostream& out) {
  require(std::abs(e.sample_period_s - 1.0) < 1e-9, "ENF log: sample period must be 1 s");
  out << "timestamp_utc,frequency_hz\n";
  for (std::size_t i = 0; i < e.size(); ++i)
    out << format_iso(e.start_time + std::chrono::seconds(i)) << ',' << format_value(e.values_hz[i]) << '\n';
}

/// Strict 1 s cadence; values within nominal +/- 1 Hz. Without an explicit
/// nominal, 50 or 60 Hz is taken, whichever is nearer the first value.
inline EnfSeries read_enf_log(std::istream& in, const std::string& source = "<enf-log>",
                              std::optional<double> nominal_hz = std::nullopt) {
  std::string line;
  if (!std::getline(in, line) || detail::strip_cr(line) != "timestamp_utc,frequency_hz")
    detail::format_error(source, 1, "header must be 'timestamp_utc,frequency_hz'");
  EnfSeries e;
  std::size_t lineno = 1;
  std::optional<Timestamp> prev;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::strip_cr(line);
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
      detail::format_error(source, lineno, "expected two comma-separated fields");
    const auto ts = parse_iso(line.substr(0, comma));
    if (!ts) detail::format_error(source, lineno, "timestamp is not ISO-8601 UTC: '" + line.substr(0, comma) + "'");
    const double f = detail::parse_double(line.substr(comma + 1), source, lineno);
    if (prev && *ts - *prev != std::chrono::seconds(1)) {
      detail::format_error(source, lineno, "cadence violation: expected " + format_iso(*prev + std::chrono::seconds(1)) +
                                               ", got " + format_iso(*ts) + " (rows must be exactly 1 s apart)");
    }
    if (!nominal_hz) nominal_hz = std::abs(f - 50.0) <= std::abs(f - 60.0) ? 50.0 : 60.0;
    if (std::abs(f - *nominal_hz) > 1.0)
      detail::format_error(source, lineno, "frequency " + format_value(f) + " Hz outside nominal +/- 1 Hz");
    if (!prev) e.start_time = *ts;
    prev = ts;
    e.values_hz.push_back(f);
  }
  if (e.values_hz.empty()) detail::format_error(source, lineno, "no data rows");
  e.sample_period_s = 1.0;
  return e;
}

inline EnfSeries load_enf_log(const std::string& path, std::optional<double> nominal_hz = std::nullopt) {
  auto in = detail::open_in(path);
  return read_enf_log(in, path, nominal_hz);
}

inline void save_enf_csv(const EnfSeries& e, const std::string& path) {
  auto out = detail::open_out(path);
  write_enf_csv(e, out);
}

// ---- row means ----

inline void write_row_means(const RowMeansMatrix& m, std::ostream& out) {
  for (int f = 0; f < m.frame_count(); ++f) out << (f ? "," : "") << "frame_" << f;
  out << '\n';
  for (int r = 0; r < m.rows(); ++r) {
    for (int f = 0; f < m.frame_count(); ++f) out << (f ? "," : "") << format_value(m.at(r, f));
    out << '\n';
  }
}

inline RowMeansMatrix read_row_means(std::istream& in, double frame_rate_fps, const std::string& source = "<row-means>") {
  std::string line;
  if (!std::getline(in, line)) detail::format_error(source, 1, "missing header line");
  line = detail::strip_cr(line);
  int frames = 0;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      if (cell != "frame_" + std::to_string(frames))
        detail::format_error(source, 1, "header column " + std::to_string(frames) + " must be 'frame_" +
                                            std::to_string(frames) + "', got '" + cell + "'");
      ++frames;
    }
  }
  if (frames == 0) detail::format_error(source, 1, "header has no columns");
  std::vector<double> values;
  std::size_t lineno = 1;
  int rows = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::strip_cr(line);
    std::stringstream ss(line);
    std::string cell;
    int cols = 0;
    while (std::getline(ss, cell, ',')) {
      values.push_back(detail::parse_double(cell, source, lineno));
      ++cols;
    }
    if (cols != frames)
      detail::format_error(source, lineno, "row has " + std::to_string(cols) + " columns, header has " + std::to_string(frames));
    ++rows;
  }
  if (rows == 0) detail::format_error(source, lineno, "no data rows");
  return RowMeansMatrix(CaptureProfile::without_idle(frame_rate_fps, rows), frames, std::move(values));
}

inline RowMeansMatrix load_row_means(const std::string& path, double frame_rate_fps) {
  auto in = detail::open_in(path);
  return read_row_means(in, frame_rate_fps, path);
}

inline void save_row_means(const RowMeansMatrix& m, const std::string& path) {
  auto out = detail::open_out(path);
  write_row_means(m, out);
}

// ---- JSON records ----

inline json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json to_json(const IdleEstimate& e) {
  return {{"h1_hz", e.h1_hz},
          {"h2_hz", e.h2_hz},
          {"ratio", finite_or_null(e.ratio)},
          {"band_low_pct", opt(e.band_low_pct)},
          {"band_high_pct", opt(e.band_high_pct)},
          {"point_estimate_pct", opt(e.point_estimate_pct)},
          {"matched", e.matched},
          {"h1_margin_db", e.h1_margin_db},
          {"h2_margin_db", e.h2_margin_db},
          {"diagnostic", e.diagnostic}};
}

inline json to_json(const VerticalPhaseResult& r) {
  return {{"per_row_phase", r.per_row_phase},
          {"vertical_radial_freq", r.vertical_radial_freq},
          {"read_out_time_s", r.read_out_time_s},
          {"cycle_count", r.cycle_count},
          {"idle_pct", r.idle_pct},
          {"alias_freq_hz", r.alias_freq_hz},
          {"circular_variance", r.circular_variance}};
}

inline json to_json(const VerificationReport& r) {
  json cands = json::array();
  for (const auto& c : r.candidates) {
    cands.push_back({{"component_hz", c.component_hz},
                     {"idle_pct", c.idle_assumption_pct},
                     {"corr", c.peak_corr},
                     {"lag_s", c.lag_s}});
  }
  json groups = json::array();
  for (const auto& g : r.groups) {
    groups.push_back({{"representative_lag_s", g.representative_lag_s},
                      {"member_count", g.member_count},
                      {"best_corr", g.best_corr},
                      {"d_g", g.d_g}});
  }
  return {{"metric", r.metric_id},
          {"threshold", r.threshold},
          {"expected_lag_s", r.expected_lag_s},
          {"chosen_lag_s", opt(r.chosen_lag_s)},
          {"decision", to_string(r.decision)},
          {"lag_tolerance_s", r.lag_tolerance_s},
          {"candidates", cands},
          {"lag_groups", groups}};
}

inline void save_json(const json& j, const std::string& path) {
  auto out = detail::open_out(path);
  out << j.dump(2) << '\n';
}

}  // namespace rsenf::io
