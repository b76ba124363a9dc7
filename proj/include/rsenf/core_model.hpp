#pragma once

// Analytical model of ENF under rolling-shutter capture with an idle period.
//
// Dropping the last M-L of every M full-rate samples turns the illumination
// tone at f0 into a family of shifted components
//
//   Case 1:  f_y = f0 + m * Fr,   f_y < L * Fr / 2
//   Case 2:  f_y = f0 - m * Fr,   f_y > 0
//
// each weighted by |F_m(w_y)| where
//
//   F_m(w) = (1/M) * sum_{l=0}^{L-1} exp(-j * (w * (M - L) + 2*pi*m) / M * l)
//   w_y    = 2*pi * f_y / (Fr * L)
//
// A Case 2 component with parameter m is produced by sum index (M - m) mod M.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "rsenf/error.hpp"
#include "rsenf/profiles.hpp"

namespace rsenf {

enum class ComponentCase { case1, case2 };

struct ComponentPrediction {
  double freq_hz = 0.0;
  int m_index = 0;
  ComponentCase case_tag = ComponentCase::case1;
  int effective_sum_index = 0;
  // NaN until filled by attenuation_factor / strongest_components.
  double attenuation_magnitude = std::numeric_limits<double>::quiet_NaN();
  int rank = 0;  // 1-based; 0 = unranked
};

// Magnitudes below this are reported as exact zeros so that null components
// tie and fall back to frequency ordering.
inline constexpr double kMagnitudeZeroSnap = 1e-12;
// Relative tolerance under which two magnitudes count as a tie.
inline constexpr double kTieTolerance = 1e-9;
// A second component weaker than this makes the power ratio "infinite".
inline constexpr double kInfiniteRatioFloor = 1e-9;

/// Every shifted component the model admits for this capture. Attenuation is
/// left unset. Throws ErrorCode::degenerate when no candidate lies below the
/// effective Nyquist frequency L * Fr / 2.
inline std::vector<ComponentPrediction> candidate_components(const GridProfile& grid, const CaptureProfile& capture) {
  const double f0 = grid.illumination_freq_hz();
  const double fr = capture.frame_rate_fps();
  const int rows = capture.rows_per_frame();
  const int capacity = capture.row_capacity();
  const double nyquist = rows * fr / 2.0;
  const double eps = 1e-9 * f0;

  std::vector<ComponentPrediction> out;
  for (int m = 0;; ++m) {
    const double f = f0 + m * fr;
    if (!(f < nyquist - eps)) break;
    out.push_back({f, m, ComponentCase::case1, m});
  }
  // m = 0 of Case 2 is the same component as m = 0 of Case 1.
  for (int m = 1; f0 - m * fr > eps; ++m) {
    const double f = f0 - m * fr;
    if (!(f < nyquist - eps)) continue;
    out.push_back({f, m, ComponentCase::case2, (capacity - m % capacity) % capacity});
  }
  if (out.empty()) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "degenerate capture: effective Nyquist L*Fr/2 = %.6g Hz is at or below every candidate component",
                  nyquist);
    fail(ErrorCode::degenerate, buf);
  }
  return out;
}

/// |F| of the sum index that carries `component`, in closed form.
inline double attenuation_factor(const CaptureProfile& capture, const ComponentPrediction& component) {
  const double m_cap = capture.row_capacity();
  const double rows = capture.rows_per_frame();
  const double fr = capture.frame_rate_fps();

  // theta / (2*pi), reduced to (-1/2, 1/2] for accuracy.
  double cycles = (component.freq_hz * (m_cap - rows) / (fr * rows) + component.effective_sum_index) / m_cap;
  cycles -= std::round(cycles);
  const double theta = 2.0 * std::numbers::pi * cycles;

  double magnitude;
  if (std::abs(theta) < 1e-9) {
    magnitude = rows / m_cap;
  } else {
    magnitude = std::abs(std::sin(rows * theta / 2.0) / std::sin(theta / 2.0)) / m_cap;
  }
  return magnitude < kMagnitudeZeroSnap ? 0.0 : magnitude;
}

namespace detail {

inline bool nearly_equal(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b));
}

// Descending by magnitude; runs of tied magnitudes ordered by ascending frequency.
inline void rank_components(std::vector<ComponentPrediction>& comps) {
  std::sort(comps.begin(), comps.end(), [](const auto& a, const auto& b) {
    if (a.attenuation_magnitude != b.attenuation_magnitude) return a.attenuation_magnitude > b.attenuation_magnitude;
    return a.freq_hz < b.freq_hz;
  });
  std::size_t start = 0;
  while (start < comps.size()) {
    std::size_t end = start + 1;
    while (end < comps.size() &&
           nearly_equal(comps[start].attenuation_magnitude, comps[end].attenuation_magnitude, kTieTolerance)) {
      ++end;
    }
    std::sort(comps.begin() + static_cast<std::ptrdiff_t>(start), comps.begin() + static_cast<std::ptrdiff_t>(end),
              [](const auto& a, const auto& b) { return a.freq_hz < b.freq_hz; });
    start = end;
  }
  for (std::size_t i = 0; i < comps.size(); ++i) comps[i].rank = static_cast<int>(i) + 1;
}

}  // namespace detail

/// Candidates with attenuation filled in, strongest first, truncated to k.
inline std::vector<ComponentPrediction> strongest_components(const GridProfile& grid, const CaptureProfile& capture,
                                                             std::size_t k) {
  require(k >= 1, "strongest_components: k must be >= 1");
  auto comps = candidate_components(grid, capture);
  for (auto& c : comps) c.attenuation_magnitude = attenuation_factor(capture, c);
  detail::rank_components(comps);
  if (comps.size() > k) comps.resize(k);
  return comps;
}

struct ComponentTableRow {
  double idle_percent = 0.0;           // requested grid value
  double realized_idle_percent = 0.0;  // (M - L) / M after rounding L
  // Tie groups. When the strongest group has several members the second
  // group repeats it and the ratio is 1. `second` is empty when the second
  // component vanishes (ratio is then +inf).
  std::vector<ComponentPrediction> strongest;
  std::vector<ComponentPrediction> second;
  double power_ratio = 0.0;

  bool ratio_is_infinite() const { return std::isinf(power_ratio); }
  double h1_hz() const { return strongest.front().freq_hz; }
  double h2_hz() const { return second.empty() ? 0.0 : second.front().freq_hz; }
};

/// Reference table of the two strongest components against idle period.
/// `power_ratio` is a ratio of spectral magnitudes |F|, not of squared magnitudes.
struct ComponentTable {
  double frame_rate_fps = 0.0;
  GridProfile grid{50.0};
  int row_capacity = 0;
  std::vector<ComponentTableRow> rows;
};

inline ComponentTableRow table_row_for(const GridProfile& grid, const CaptureProfile& capture, double idle_percent) {
  auto ranked = strongest_components(grid, capture, std::numeric_limits<std::size_t>::max());
  ComponentTableRow row;
  row.idle_percent = idle_percent;
  row.realized_idle_percent = 100.0 * capture.idle_ratio();

  const double top = ranked.front().attenuation_magnitude;
  std::size_t i = 0;
  while (i < ranked.size() && detail::nearly_equal(ranked[i].attenuation_magnitude, top, kTieTolerance)) {
    row.strongest.push_back(ranked[i++]);
  }
  if (row.strongest.size() > 1) {
    row.second = row.strongest;
    row.power_ratio = 1.0;
    return row;
  }
  if (ranked.size() < 2 || ranked[1].attenuation_magnitude < kInfiniteRatioFloor) {
    row.power_ratio = std::numeric_limits<double>::infinity();
    return row;
  }
  const double next = ranked[1].attenuation_magnitude;
  for (std::size_t j = 1; j < ranked.size() && detail::nearly_equal(ranked[j].attenuation_magnitude, next, kTieTolerance);
       ++j) {
    row.second.push_back(ranked[j]);
  }
  row.power_ratio = top / next;
  return row;
}

/// Sweeps idle fractions with a synthetic capacity M = row_capacity_resolution
/// and L = round(M * (1 - r)).
inline ComponentTable idle_sweep_table(const GridProfile& grid, double frame_rate_fps, const std::vector<double>& idle_grid,
                                       int row_capacity_resolution = 1000) {
  require(!idle_grid.empty(), "idle_sweep_table: idle grid is empty");
  require(row_capacity_resolution >= 100, "idle_sweep_table: row capacity resolution must be >= 100");
  for (std::size_t i = 0; i < idle_grid.size(); ++i) {
    require(idle_grid[i] >= 0.0 && idle_grid[i] <= 0.95 + 1e-12, "idle_sweep_table: idle fractions must lie in [0, 0.95]");
    require(i == 0 || idle_grid[i] > idle_grid[i - 1], "idle_sweep_table: idle grid must be strictly increasing");
  }
  ComponentTable table;
  table.frame_rate_fps = frame_rate_fps;
  table.grid = grid;
  table.row_capacity = row_capacity_resolution;
  for (double r : idle_grid) {
    const auto capture = CaptureProfile::from_idle(frame_rate_fps, row_capacity_resolution, r);
    table.rows.push_back(table_row_for(grid, capture, 100.0 * r));
  }
  return table;
}

/// Idle grid 0, step, 2*step, ... up to 95 % (fractions).
inline std::vector<double> percent_grid(double step_percent, double max_percent = 95.0) {
  require(step_percent > 0.0, "idle step must be positive");
  std::vector<double> out;
  for (int i = 0;; ++i) {
    const double p = i * step_percent;
    if (p > max_percent + 1e-9) break;
    out.push_back(p / 100.0);
  }
  return out;
}

namespace detail {
inline std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}
}  // namespace detail

/// CSV with columns idle_percent,h1_hz,h2_hz,ratio. A vanished second
/// component is written as h2_hz = 0 and ratio = inf.
inline void write_component_table_csv(const ComponentTable& table, std::ostream& out) {
  out << "idle_percent,h1_hz,h2_hz,ratio\n";
  for (const auto& row : table.rows) {
    out << detail::format_number(row.idle_percent) << ',' << detail::format_number(row.h1_hz()) << ','
        << detail::format_number(row.h2_hz()) << ',' << detail::format_number(row.power_ratio) << '\n';
  }
}

/// Plot data: strongest and second components with their magnitudes.
inline void write_component_curve_csv(const ComponentTable& table, std::ostream& out) {
  out << "idle_percent,realized_idle_percent,h1_hz,h1_magnitude,h2_hz,h2_magnitude\n";
  for (const auto& row : table.rows) {
    const double h2_mag = row.second.empty() ? 0.0 : row.second.front().attenuation_magnitude;
    out << detail::format_number(row.idle_percent) << ',' << detail::format_number(row.realized_idle_percent) << ','
        << detail::format_number(row.h1_hz()) << ',' << detail::format_number(row.strongest.front().attenuation_magnitude)
        << ',' << detail::format_number(row.h2_hz()) << ',' << detail::format_number(h2_mag) << '\n';
  }
}

}  // namespace rsenf
