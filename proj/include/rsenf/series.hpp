#pragma once

#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "rsenf/error.hpp"
#include "rsenf/profiles.hpp"

namespace rsenf {

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

inline double seconds_between(Timestamp from, Timestamp to) {
  return std::chrono::duration<double>(to - from).count();
}

inline Timestamp add_seconds(Timestamp t, double seconds) {
  return t + std::chrono::milliseconds(std::llround(seconds * 1000.0));
}

/// Uniformly sampled ENF trace (ground-truth log or an extracted query).
struct EnfSeries {
  Timestamp start_time{};
  double sample_period_s = 1.0;
  std::vector<double> values_hz;

  std::size_t size() const noexcept { return values_hz.size(); }
  double duration_s() const noexcept { return values_hz.empty() ? 0.0 : (values_hz.size() - 1) * sample_period_s; }
  Timestamp end_time() const { return add_seconds(start_time, duration_s()); }
};

/// Concatenated per-row luminance samples, frame-major (row 0..L-1 of frame 0,
/// then frame 1, ...).
class LuminanceSeries {
 public:
  LuminanceSeries(CaptureProfile capture, std::optional<GridProfile> grid_hint, int frame_count,
                  std::vector<double> samples)
      : capture_(capture), grid_hint_(grid_hint), frame_count_(frame_count), samples_(std::move(samples)) {
    require(frame_count >= 1, "luminance series: frame_count must be >= 1");
    const auto expected = static_cast<std::size_t>(frame_count) * static_cast<std::size_t>(capture.rows_per_frame());
    require(samples_.size() == expected, "luminance series: expected " + std::to_string(expected) +
                                              " samples (frame_count x rows_per_frame), got " +
                                              std::to_string(samples_.size()));
    for (double v : samples_) require(std::isfinite(v), "luminance series: non-finite sample");
  }

  const CaptureProfile& capture() const noexcept { return capture_; }
  const std::optional<GridProfile>& grid_hint() const noexcept { return grid_hint_; }
  int frame_count() const noexcept { return frame_count_; }
  const std::vector<double>& samples() const noexcept { return samples_; }
  int rows_per_frame() const noexcept { return capture_.rows_per_frame(); }
  double sample_rate_hz() const noexcept { return capture_.kept_sample_rate_hz(); }
  double duration_s() const noexcept { return frame_count_ / capture_.frame_rate_fps(); }

  double at(int frame, int row) const {
    return samples_[static_cast<std::size_t>(frame) * rows_per_frame() + static_cast<std::size_t>(row)];
  }

 private:
  CaptureProfile capture_;
  std::optional<GridProfile> grid_hint_;
  int frame_count_;
  std::vector<double> samples_;
};

/// Per-row mean luminance, one time series (at the frame rate) per row.
class RowMeansMatrix {
 public:
  RowMeansMatrix(CaptureProfile capture, int frame_count, std::vector<double> row_major)
      : capture_(capture), frame_count_(frame_count), values_(std::move(row_major)) {
    require(frame_count >= 1, "row means: frame_count must be >= 1");
    require(values_.size() == static_cast<std::size_t>(frame_count) * capture.rows_per_frame(),
            "row means: matrix is not rows_per_frame x frame_count");
  }

  static RowMeansMatrix from_series(const LuminanceSeries& series) {
    const int rows = series.rows_per_frame();
    const int frames = series.frame_count();
    std::vector<double> v(static_cast<std::size_t>(rows) * frames);
    for (int f = 0; f < frames; ++f)
      for (int r = 0; r < rows; ++r) v[static_cast<std::size_t>(r) * frames + f] = series.at(f, r);
    return RowMeansMatrix(series.capture(), frames, std::move(v));
  }

  const CaptureProfile& capture() const noexcept { return capture_; }
  int rows() const noexcept { return capture_.rows_per_frame(); }
  int frame_count() const noexcept { return frame_count_; }
  double at(int row, int frame) const { return values_[static_cast<std::size_t>(row) * frame_count_ + frame]; }
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  CaptureProfile capture_;
  int frame_count_;
  std::vector<double> values_;
};

}  // namespace rsenf
