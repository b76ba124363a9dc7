#pragma once

#include <cmath>
#include <string>

#include "rsenf/error.hpp"

namespace rsenf {

/// Mains network parameters. The illumination flicker sits at twice the ENF.
class GridProfile {
 public:
  explicit GridProfile(double nominal_enf_hz) : nominal_enf_hz_(nominal_enf_hz) {
    require(std::isfinite(nominal_enf_hz) && nominal_enf_hz > 0.0,
            "grid: nominal ENF must be positive, got " + std::to_string(nominal_enf_hz));
  }

  double nominal_enf_hz() const noexcept { return nominal_enf_hz_; }
  double illumination_freq_hz() const noexcept { return 2.0 * nominal_enf_hz_; }

  friend bool operator==(const GridProfile&, const GridProfile&) = default;

 private:
  double nominal_enf_hz_;
};

/// Rolling-shutter sampling parameters.
///
/// `row_capacity` (M) is the number of rows the sensor could read during one
/// frame period with no idle time; `rows_per_frame` (L) is the number of rows
/// actually kept. The full-rate signal runs at frame_rate * M samples/s and
/// each frame keeps its first L samples.
class CaptureProfile {
 public:
  CaptureProfile(double frame_rate_fps, int rows_per_frame, int row_capacity)
      : frame_rate_fps_(frame_rate_fps), rows_per_frame_(rows_per_frame), row_capacity_(row_capacity) {
    require(std::isfinite(frame_rate_fps) && frame_rate_fps > 0.0, "capture: frame rate must be positive");
    require(rows_per_frame >= 1, "capture: rows_per_frame must be >= 1");
    require(rows_per_frame <= row_capacity, "capture: rows_per_frame (" + std::to_string(rows_per_frame) +
                                                ") exceeds row_capacity (" + std::to_string(row_capacity) + ")");
  }

  /// Capture with no idle period (M = L).
  static CaptureProfile without_idle(double frame_rate_fps, int rows) {
    return CaptureProfile(frame_rate_fps, rows, rows);
  }

  /// Capture with capacity M and L = round(M * (1 - idle_ratio)).
  static CaptureProfile from_idle(double frame_rate_fps, int row_capacity, double idle_ratio) {
    require(idle_ratio >= 0.0 && idle_ratio < 1.0, "capture: idle ratio must lie in [0, 1)");
    const int rows = static_cast<int>(std::lround(row_capacity * (1.0 - idle_ratio)));
    return CaptureProfile(frame_rate_fps, rows < 1 ? 1 : rows, row_capacity);
  }

  double frame_rate_fps() const noexcept { return frame_rate_fps_; }
  int rows_per_frame() const noexcept { return rows_per_frame_; }
  int row_capacity() const noexcept { return row_capacity_; }

  double idle_ratio() const noexcept {
    return static_cast<double>(row_capacity_ - rows_per_frame_) / static_cast<double>(row_capacity_);
  }

  /// Sample rate of the full (no idle) signal x[n].
  double full_sample_rate_hz() const noexcept { return frame_rate_fps_ * row_capacity_; }

  /// Rate at which the kept samples y[n] are treated as uniformly spaced.
  double kept_sample_rate_hz() const noexcept { return frame_rate_fps_ * rows_per_frame_; }

  friend bool operator==(const CaptureProfile&, const CaptureProfile&) = default;

 private:
  double frame_rate_fps_;
  int rows_per_frame_;
  int row_capacity_;
};

}  // namespace rsenf
