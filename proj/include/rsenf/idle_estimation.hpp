#pragma once

// Idle-period estimation: spectral feature matching against a component
// table, and the per-row (vertical) phase baseline.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "rsenf/core_model.hpp"
#include "rsenf/error.hpp"
#include "rsenf/series.hpp"
#include "rsenf/spectral.hpp"

namespace rsenf {

// Component acceptance gate: peak-to-median spectral margin.
inline constexpr double kNoiseGateDb = 6.0;
// A measured ratio above this counts as "second component absent".
inline constexpr double kAbsentRatio = 100.0;
// Ratios (measured and tabulated) are capped here before log matching.
inline constexpr double kRatioCap = 1000.0;
// Frequencies closer than this identify the same component.
inline constexpr double kComponentMatchHz = 0.5;

struct SpectralFeatures {
  double h1_hz = 0.0;
  std::optional<double> h2_hz;  // none when the second component is absent
  double ratio = std::numeric_limits<double>::infinity();
};

struct IdleEstimate {
  double h1_hz = 0.0;
  double h2_hz = 0.0;  // 0 when absent
  double ratio = std::numeric_limits<double>::infinity();
  std::optional<double> band_low_pct;
  std::optional<double> band_high_pct;
  std::optional<double> point_estimate_pct;
  bool matched = false;
  double h1_margin_db = 0.0;
  double h2_margin_db = 0.0;
  std::string diagnostic;
};

namespace detail {

inline bool in_group(const std::vector<ComponentPrediction>& group, double f) {
  return std::any_of(group.begin(), group.end(), [f](const auto& c) { return std::abs(c.freq_hz - f) < kComponentMatchHz; });
}

// Whether a table row is consistent with the measured pair. Without a
// measured H2 only H1 is compared; a row whose second component vanishes
// admits only measurements without H2.
inline bool row_accepts(const ComponentTableRow& row, double h1, std::optional<double> h2) {
  if (!in_group(row.strongest, h1)) return false;
  if (!h2) return true;
  if (row.ratio_is_infinite()) return false;
  if (row.strongest.size() > 1) return in_group(row.strongest, *h2) && std::abs(*h2 - h1) >= kComponentMatchHz;
  return in_group(row.second, *h2);
}

inline double capped_log_ratio(double r) { return std::log(std::min(std::max(r, 1.0), kRatioCap)); }

struct CellMatch {
  std::size_t index;
  double distance;
};

inline std::optional<CellMatch> best_cell(const ComponentTable& table, double h1, std::optional<double> h2, double ratio) {
  std::optional<CellMatch> best;
  const double lr = capped_log_ratio(h2 ? ratio : kRatioCap);
  for (std::size_t i = 0; i + 1 < table.rows.size(); ++i) {
    const auto& a = table.rows[i];
    const auto& b = table.rows[i + 1];
    if (!row_accepts(a, h1, h2) || !row_accepts(b, h1, h2)) continue;
    const double la = capped_log_ratio(a.power_ratio), lb = capped_log_ratio(b.power_ratio);
    const double lo = std::min(la, lb), hi = std::max(la, lb);
    const double d = lr < lo ? lo - lr : (lr > hi ? lr - hi : 0.0);
    if (!best || d < best->distance - 1e-12) best = CellMatch{i, d};
  }
  return best;
}

}  // namespace detail

/// Finds the idle cell (pair of adjacent table rows) consistent with the
/// measured components, nearest in log ratio. Ties go to the lower idle. If
/// no cell admits the measured H2 it is treated as spurious and only H1 is
/// matched.
inline IdleEstimate match_idle(const SpectralFeatures& features, const ComponentTable& table) {
  require(table.rows.size() >= 2, "match_idle: reference table needs at least two rows");
  IdleEstimate est;
  est.h1_hz = features.h1_hz;
  est.h2_hz = features.h2_hz.value_or(0.0);
  est.ratio = features.h2_hz ? features.ratio : std::numeric_limits<double>::infinity();

  auto cell = detail::best_cell(table, features.h1_hz, features.h2_hz, features.ratio);
  if (!cell && features.h2_hz) {
    cell = detail::best_cell(table, features.h1_hz, std::nullopt, features.ratio);
    if (cell) est.diagnostic = "second component matched no table cell; matched on the strongest component only";
  }
  if (!cell) {
    est.diagnostic = "no table cell has the measured strongest component";
    return est;
  }
  est.matched = true;
  est.band_low_pct = table.rows[cell->index].idle_percent;
  est.band_high_pct = table.rows[cell->index + 1].idle_percent;
  est.point_estimate_pct = 0.5 * (*est.band_low_pct + *est.band_high_pct);
  return est;
}

/// Measures the two strongest model components in the full-series
/// periodogram and matches them against `reference`.
inline IdleEstimate estimate_idle(const LuminanceSeries& series, const GridProfile& grid, const ComponentTable& reference) {
  require(std::abs(reference.frame_rate_fps - series.capture().frame_rate_fps()) < 1e-9,
          "estimate_idle: reference table frame rate does not match the series");
  require(reference.grid == grid, "estimate_idle: reference table grid does not match");
  require(series.duration_s() >= 20.0 - 1e-9, "estimate_idle: series must last at least 20 s");

  const double fs = series.sample_rate_hz();
  const auto spec = magnitude_spectrum(series.samples(), fs, {1});
  std::vector<double> sorted(spec.magnitudes.begin() + 1, spec.magnitudes.end());
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double floor_mag = spec.amplitude_of(sorted[sorted.size() / 2]);

  struct Measured {
    double nominal, freq, magnitude, margin_db;
  };
  std::vector<Measured> peaks;
  for (const auto& c : candidate_components(grid, series.capture())) {
    if (c.freq_hz + 1.0 >= fs / 2.0) continue;
    const auto p = peak_in_band(spec, c.freq_hz, 1.0);
    const double margin = floor_mag > 0 ? 20.0 * std::log10(p.magnitude / floor_mag) : INFINITY;
    peaks.push_back({c.freq_hz, p.freq_hz, p.magnitude, margin});
  }
  std::sort(peaks.begin(), peaks.end(), [](auto& a, auto& b) { return a.magnitude > b.magnitude; });

  IdleEstimate est;
  if (peaks.empty() || peaks[0].margin_db < kNoiseGateDb) {
    est.diagnostic = "no candidate component rises 6 dB above the spectral noise floor";
    if (!peaks.empty()) est.h1_hz = peaks[0].freq, est.h1_margin_db = peaks[0].margin_db;
    return est;
  }
  SpectralFeatures f;
  f.h1_hz = peaks[0].nominal;
  if (peaks.size() > 1 && peaks[1].margin_db >= kNoiseGateDb && peaks[0].magnitude / peaks[1].magnitude <= kAbsentRatio) {
    f.h2_hz = peaks[1].nominal;
    f.ratio = peaks[0].magnitude / peaks[1].magnitude;
  }
  est = match_idle(f, reference);
  est.h1_hz = peaks[0].freq;
  est.h1_margin_db = peaks[0].margin_db;
  if (peaks.size() > 1) est.h2_margin_db = peaks[1].margin_db;
  if (f.h2_hz) est.h2_hz = peaks[1].freq;
  return est;
}

struct VerticalPhaseResult {
  std::vector<double> per_row_phase;  // unwrapped, radians
  double vertical_radial_freq = 0.0;  // radians per row
  double read_out_time_s = 0.0;
  double cycle_count = 0.0;
  double idle_pct = 0.0;
  double alias_freq_hz = 0.0;
  double circular_variance = 0.0;
};

// Circular variance of the line-fit residuals above which the row phases are
// considered noise.
inline constexpr double kMaxPhaseCircularVariance = 0.25;

/// Per-row phase of the aliased illumination tone under frame-rate sampling.
/// The phase advances by 2*pi*f_I / (Fr*M) per row, so its slope gives the
/// read-out time and the idle fraction 1 - N_c * Fr / f_I.
inline VerticalPhaseResult vertical_phase(const RowMeansMatrix& rows, const GridProfile& grid) {
  const double fr = rows.capture().frame_rate_fps();
  const double fi = grid.illumination_freq_hz();
  const double duration = rows.frame_count() / fr;
  const double alias_nominal = std::abs(fi - fr * std::round(fi / fr));
  if (alias_nominal < 1e-9 * fi || alias_nominal * duration < 1.0) {
    fail(ErrorCode::inapplicable, "vertical phase: alias ENF at DC (frame rate " + std::to_string(fr) +
                                      " fps divides the illumination frequency " + std::to_string(fi) +
                                      " Hz); method inapplicable");
  }
  require(rows.frame_count() >= static_cast<int>(std::ceil(30.0 * fr - 1e-9)),
          "vertical phase: need at least 30 s of frames");
  require(rows.rows() >= 3, "vertical phase: need at least 3 rows");

  const int nrows = rows.rows();
  const int nframes = rows.frame_count();
  auto row_series = [&](int r) {
    return std::span<const double>(rows.values().data() + static_cast<std::size_t>(r) * nframes, nframes);
  };

  // Locate the alias peak on the summed magnitude spectrum of a row subset.
  const int probes = std::min(nrows, 16);
  SpectrumEstimate sum;
  for (int i = 0; i < probes; ++i) {
    const int r = static_cast<int>(std::lround(static_cast<double>(i) * (nrows - 1) / std::max(1, probes - 1)));
    auto s = magnitude_spectrum(row_series(r), fr);
    if (i == 0)
      sum = std::move(s);
    else
      for (std::size_t k = 0; k < s.magnitudes.size(); ++k) sum.magnitudes[k] += s.magnitudes[k];
  }
  const double lo = std::max(alias_nominal - 1.0, 2.0 * sum.bin_spacing_hz);
  const double hi = std::min(alias_nominal + 1.0, fr / 2.0 - 2.0 * sum.bin_spacing_hz);
  const auto peak = peak_in_band(sum, 0.5 * (lo + hi), 0.5 * (hi - lo));
  {
    std::vector<double> m(sum.magnitudes.begin() + 1, sum.magnitudes.end());
    std::nth_element(m.begin(), m.begin() + m.size() / 2, m.end());
    const double margin_db = 20.0 * std::log10(peak.magnitude / sum.amplitude_of(m[m.size() / 2]));
    if (!(margin_db >= kNoiseGateDb))
      fail(ErrorCode::unreliable, "vertical phase: alias peak is below the 6 dB noise gate");
  }

  // Single-bin projection of each row at the alias frequency.
  VerticalPhaseResult out;
  out.alias_freq_hz = peak.freq_hz;
  const double dw = -2.0 * std::numbers::pi * peak.freq_hz / fr;
  std::vector<double> taper(nframes);
  for (int k = 0; k < nframes; ++k) taper[k] = detail::hann(k, nframes);
  out.per_row_phase.resize(nrows);
  for (int r = 0; r < nrows; ++r) {
    const auto x = row_series(r);
    double mean = 0;
    for (double v : x) mean += v;
    mean /= nframes;
    std::complex<double> acc = 0.0;
    for (int k = 0; k < nframes; ++k) acc += (x[k] - mean) * taper[k] * std::polar(1.0, dw * k);
    out.per_row_phase[r] = std::arg(acc);
  }
  for (int r = 1; r < nrows; ++r) {
    double d = out.per_row_phase[r] - out.per_row_phase[r - 1];
    d -= 2.0 * std::numbers::pi * std::round(d / (2.0 * std::numbers::pi));
    out.per_row_phase[r] = out.per_row_phase[r - 1] + d;
  }

  // Least-squares line through the unwrapped phases.
  const double n = nrows;
  const double lbar = (n - 1) / 2.0;
  double pbar = 0;
  for (double p : out.per_row_phase) pbar += p;
  pbar /= n;
  double sxy = 0, sxx = 0;
  for (int r = 0; r < nrows; ++r) {
    sxy += (r - lbar) * (out.per_row_phase[r] - pbar);
    sxx += (r - lbar) * (r - lbar);
  }
  const double slope = sxy / sxx;
  std::complex<double> resultant = 0.0;
  for (int r = 0; r < nrows; ++r) resultant += std::polar(1.0, out.per_row_phase[r] - (pbar + slope * (r - lbar)));
  out.circular_variance = 1.0 - std::abs(resultant) / n;
  if (out.circular_variance > kMaxPhaseCircularVariance) {
    fail(ErrorCode::unreliable, "vertical phase: row phases do not follow a line (circular variance " +
                                    std::to_string(out.circular_variance) + ")");
  }

  out.vertical_radial_freq = std::abs(slope);
  out.read_out_time_s = n * out.vertical_radial_freq / (2.0 * std::numbers::pi * fi);
  out.cycle_count = std::round(100.0 * out.vertical_radial_freq * n / (2.0 * std::numbers::pi)) / 100.0;
  out.idle_pct = 100.0 * (1.0 - out.cycle_count * fr / fi);
  if (out.idle_pct < -2.0 || out.idle_pct >= 100.0) {
    fail(ErrorCode::unreliable, "vertical phase: cycle count " + std::to_string(out.cycle_count) +
                                    " implies an impossible idle fraction");
  }
  out.idle_pct = std::max(0.0, out.idle_pct);
  return out;
}

}  // namespace rsenf
