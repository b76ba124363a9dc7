#pragma once

// Command-line front end. Exit codes: 0 success, 2 validation error,
// 3 verify-time decided ND, 64 usage error.

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rsenf/core_model.hpp"
#include "rsenf/error.hpp"
#include "rsenf/idle_estimation.hpp"
#include "rsenf/io.hpp"
#include "rsenf/spectral.hpp"
#include "rsenf/synthesis.hpp"
#include "rsenf/verification.hpp"

namespace rsenf {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNoDecision = 3;
inline constexpr int kExitUsage = 64;

namespace detail {

inline void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  auto f = io::detail::open_out(path);
  f << text;
  if (!f) fail(ErrorCode::invalid_argument, "failed writing '" + path + "'");
}

inline Timestamp parse_time_flag(const std::string& text, const char* flag) {
  const auto t = io::parse_iso(text);
  if (!t) fail(ErrorCode::invalid_argument, std::string(flag) + ": not an ISO-8601 UTC timestamp: '" + text + "'");
  return *t;
}

inline GridProfile grid_for(std::optional<double> flag, const LuminanceSeries& series) {
  if (flag) return GridProfile(*flag);
  if (series.grid_hint()) return *series.grid_hint();
  fail(ErrorCode::invalid_argument, "--grid-hz is required when the RLUM header has no grid_hz");
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Rolling-shutter ENF toolkit"};
  app.name("rsenf");
  app.require_subcommand(1);

  // model
  double m_grid = 50, m_fps = 30, m_step = 5;
  int m_resolution = 1000;
  std::string m_out, m_curve;
  auto* model = app.add_subcommand("model", "Predict the two strongest components against idle period (CSV)");
  model->add_option("--grid-hz", m_grid, "Nominal ENF (Hz)")->capture_default_str();
  model->add_option("--fps", m_fps, "Frame rate")->capture_default_str();
  model->add_option("--idle-step", m_step, "Idle grid step (percent)")->capture_default_str();
  model->add_option("--resolution", m_resolution, "Synthetic row capacity M")->capture_default_str();
  model->add_option("--out", m_out, "Table CSV path (default stdout)");
  model->add_option("--curve-out", m_curve, "Plot-data CSV with component magnitudes");

  // simulate
  double s_duration = 480, s_fps = 30, s_idle = 0, s_grid = 50, s_ref_duration = 1800, s_offset = 600;
  int s_rows = 32;
  std::optional<double> s_snr;
  std::uint64_t s_seed = 1;
  std::string s_rlum, s_enf, s_start = "2024-01-01T00:00:00Z";
  auto* simulate = app.add_subcommand("simulate", "Synthesize a reference ENF log and a video luminance series");
  simulate->add_option("--duration", s_duration, "Video duration (s)")->capture_default_str();
  simulate->add_option("--fps", s_fps, "Frame rate")->capture_default_str();
  simulate->add_option("--rows", s_rows, "Rows kept per frame (L)")->capture_default_str();
  simulate->add_option("--idle", s_idle, "Idle fraction in [0, 0.95]")->capture_default_str();
  simulate->add_option("--snr-db", s_snr, "Noise SNR against the flicker power (default noiseless)");
  simulate->add_option("--seed", s_seed, "Random seed")->capture_default_str();
  simulate->add_option("--grid-hz", s_grid, "Nominal ENF (Hz)")->capture_default_str();
  simulate->add_option("--ref-duration", s_ref_duration, "Reference log duration (s)")->capture_default_str();
  simulate->add_option("--offset", s_offset, "Video start within the reference (s)")->capture_default_str();
  simulate->add_option("--start", s_start, "Reference start (ISO-8601 UTC)")->capture_default_str();
  simulate->add_option("--out-rlum", s_rlum, "Luminance output (RLUM)")->required();
  simulate->add_option("--out-enf", s_enf, "Reference ENF log output (CSV)")->required();

  // estimate-idle
  std::string e_rlum, e_json;
  std::optional<double> e_grid;
  auto* estimate = app.add_subcommand("estimate-idle", "Estimate the idle period by component-ratio matching");
  estimate->add_option("--rlum", e_rlum, "Luminance input (RLUM)")->required();
  estimate->add_option("--grid-hz", e_grid, "Nominal ENF (Hz), default from the RLUM header");
  estimate->add_option("--out-json", e_json, "JSON output (default stdout)");

  // vertical-phase
  std::string v_rows, v_json;
  double v_grid = 50, v_fps = 30;
  auto* vphase = app.add_subcommand("vertical-phase", "Estimate the idle period from the vertical phase progression");
  vphase->add_option("--row-means", v_rows, "Row-means CSV input")->required();
  vphase->add_option("--grid-hz", v_grid, "Nominal ENF (Hz)")->capture_default_str();
  vphase->add_option("--fps", v_fps, "Frame rate")->capture_default_str();
  vphase->add_option("--out-json", v_json, "JSON output (default stdout)");

  // extract-enf
  std::string x_rlum, x_csv, x_start = "1970-01-01T00:00:00Z";
  double x_component = 0, x_idle = 0;
  std::optional<double> x_grid;
  auto* extract = app.add_subcommand("extract-enf", "Extract an ENF trace around one component");
  extract->add_option("--rlum", x_rlum, "Luminance input (RLUM)")->required();
  extract->add_option("--component-hz", x_component, "Component frequency (Hz)")->required();
  extract->add_option("--idle-assume", x_idle, "Assumed idle fraction for interpolation")->capture_default_str();
  extract->add_option("--grid-hz", x_grid, "Nominal ENF (Hz), default from the RLUM header");
  extract->add_option("--start", x_start, "Time of the first video sample (ISO-8601 UTC)")->capture_default_str();
  extract->add_option("--out-csv", x_csv, "ENF CSV output (default stdout)");

  // verify-time
  std::string t_rlum, t_log, t_claim, t_json;
  int t_metric = 4;
  double t_threshold = kDefaultCorrThreshold, t_tolerance = 1.0;
  std::optional<double> t_grid;
  auto* verify = app.add_subcommand("verify-time", "Verify a claimed time of recording against an ENF log");
  verify->add_option("--rlum", t_rlum, "Luminance input (RLUM)")->required();
  verify->add_option("--enf-log", t_log, "Reference ENF log (CSV)")->required();
  verify->add_option("--claimed-start", t_claim, "Claimed recording start (ISO-8601 UTC)")->required();
  verify->add_option("--metric", t_metric, "Metric 1, 2, 3 or 4")->check(CLI::Range(1, 4))->capture_default_str();
  verify->add_option("--threshold", t_threshold, "Correlation threshold")->capture_default_str();
  verify->add_option("--lag-tolerance", t_tolerance, "Lag tolerance (s)")->capture_default_str();
  verify->add_option("--grid-hz", t_grid, "Nominal ENF (Hz), default from the RLUM header");
  verify->add_option("--out-json", t_json, "JSON report output (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*model) {
      const auto table = idle_sweep_table(GridProfile(m_grid), m_fps, percent_grid(m_step), m_resolution);
      std::ostringstream csv;
      write_component_table_csv(table, csv);
      detail::emit(m_out, csv.str(), out);
      if (!m_curve.empty()) {
        std::ostringstream curve;
        write_component_curve_csv(table, curve);
        detail::emit(m_curve, curve.str(), out);
      }
      return kExitOk;
    }

    if (*simulate) {
      require(s_idle >= 0.0 && s_idle <= 0.95, "--idle must lie in [0, 0.95]");
      require(s_rows >= 2, "--rows must be >= 2");
      require(s_duration > 0 && s_offset >= 0 && s_offset + s_duration <= s_ref_duration,
              "video [offset, offset + duration] must lie inside the reference log");
      const GridProfile grid(s_grid);
      const int capacity = static_cast<int>(std::lround(s_rows / (1.0 - s_idle)));
      const CaptureProfile capture(s_fps, s_rows, capacity);
      SynthesisConfig config;
      config.noise_snr_db = s_snr;
      config.seed = s_seed;
      const auto ref_start = detail::parse_time_flag(s_start, "--start");
      const auto reference = synth_enf(s_ref_duration, grid, config, ref_start);
      const auto video_enf = slice_enf(reference, s_offset, s_duration);
      const int frames = static_cast<int>(std::floor(s_duration * s_fps));
      const auto lum = synth_luminance(video_enf, capture, config, frames, grid);
      const double true_idle = 100.0 * capture.idle_ratio();
      io::save_rlum(lum, s_rlum, {true_idle});
      io::save_enf_csv(reference, s_enf);
      io::json truth = {{"true_idle_pct", true_idle},
                        {"row_capacity", capacity},
                        {"rows_per_frame", s_rows},
                        {"frame_rate_fps", s_fps},
                        {"frame_count", frames},
                        {"grid_hz", s_grid},
                        {"seed", s_seed},
                        {"snr_db", io::opt(s_snr)},
                        {"reference_start", io::format_iso(reference.start_time)},
                        {"video_start", io::format_iso(video_enf.start_time)},
                        {"offset_s", s_offset},
                        {"duration_s", s_duration}};
      io::save_json(truth, s_rlum + ".truth.json");
      return kExitOk;
    }

    if (*estimate) {
      const auto file = io::load_rlum(e_rlum);
      const auto grid = detail::grid_for(e_grid, file.series);
      const auto table = idle_sweep_table(grid, file.series.capture().frame_rate_fps(), percent_grid(5.0));
      const auto est = estimate_idle(file.series, grid, table);
      detail::emit(e_json, io::to_json(est).dump(2) + "\n", out);
      return kExitOk;
    }

    if (*vphase) {
      const auto rows = io::load_row_means(v_rows, v_fps);
      const auto r = vertical_phase(rows, GridProfile(v_grid));
      detail::emit(v_json, io::to_json(r).dump(2) + "\n", out);
      return kExitOk;
    }

    if (*extract) {
      const auto file = io::load_rlum(x_rlum);
      const auto grid = detail::grid_for(x_grid, file.series);
      ExtractOptions opts;
      opts.nominal_enf_hz = grid.nominal_enf_hz();
      opts.video_start = detail::parse_time_flag(x_start, "--start");
      const auto expanded = interpolate_idle(file.series, x_idle);
      const auto enf = extract_enf(expanded, x_component, opts);
      std::ostringstream csv;
      io::write_enf_csv(enf, csv);
      detail::emit(x_csv, csv.str(), out);
      return kExitOk;
    }

    if (*verify) {
      const auto file = io::load_rlum(t_rlum);
      const auto grid = detail::grid_for(t_grid, file.series);
      const auto reference = io::load_enf_log(t_log, grid.nominal_enf_hz());
      MetricConfig config;
      config.metric_id = t_metric;
      config.threshold = t_threshold;
      config.lag_tolerance_s = t_tolerance;
      config.extract.video_start = detail::parse_time_flag(t_claim, "--claimed-start");
      const auto report = verify_timestamp(file.series, reference, config.extract.video_start, grid, config);
      detail::emit(t_json, io::to_json(report).dump(2) + "\n", out);
      return report.decision == Outcome::ND ? kExitNoDecision : kExitOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitUsage;
}

}  // namespace rsenf
