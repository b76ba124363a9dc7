#pragma once

// Synthetic ENF traces and rolling-shutter luminance series.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

#include "rsenf/error.hpp"
#include "rsenf/profiles.hpp"
#include "rsenf/rng.hpp"
#include "rsenf/series.hpp"

namespace rsenf {

struct EnfModel {
  double step_sigma_hz = 0.003;   // random-walk step per second
  double mean_reversion = 0.001;  // pull towards nominal per second, in [0, 1]
  double bound_hz = 0.5;          // hard clamp around nominal
};

struct LuminanceModel {
  double dc_level = 1.0;
  double modulation_depth = 0.1;
  double harmonic2_depth = 0.0;  // optional term at 4 x ENF
};

struct SynthesisConfig {
  EnfModel enf_model;
  LuminanceModel luminance;
  std::optional<double> noise_snr_db;  // against the modulation power; none = noiseless
  std::uint64_t seed = 1;
};

namespace detail {
inline constexpr std::uint64_t kEnfStream = 1;
inline constexpr std::uint64_t kLuminanceStream = 2;
}  // namespace detail

/// floor(duration_s) + 1 samples at 1 s spacing starting at `start_time`.
inline EnfSeries synth_enf(double duration_s, const GridProfile& grid, const SynthesisConfig& config,
                           Timestamp start_time = Timestamp{}) {
  require(std::isfinite(duration_s) && duration_s >= 1.0, "synth_enf: duration must be >= 1 s");
  const auto& m = config.enf_model;
  require(m.step_sigma_hz >= 0.0, "synth_enf: step sigma must be >= 0");
  require(m.mean_reversion >= 0.0 && m.mean_reversion <= 1.0, "synth_enf: mean reversion must lie in [0, 1]");
  require(m.bound_hz > 0.0, "synth_enf: bound must be positive");

  const double nominal = grid.nominal_enf_hz();
  const auto count = static_cast<std::size_t>(std::floor(duration_s)) + 1;
  const CounterNormal normal(config.seed, detail::kEnfStream);

  EnfSeries out;
  out.start_time = start_time;
  out.sample_period_s = 1.0;
  out.values_hz.resize(count);
  double dev = 0.0;
  out.values_hz[0] = nominal;
  for (std::size_t k = 1; k < count; ++k) {
    dev = dev - m.mean_reversion * dev + m.step_sigma_hz * normal(k);
    dev = std::clamp(dev, -m.bound_hz, m.bound_hz);
    out.values_hz[k] = nominal + dev;
  }
  return out;
}

namespace detail {

// Illumination phase (in cycles of the ENF, reduced mod 1) at arbitrary
// times, from the linearly interpolated 1 Hz trace.
class PhaseIntegrator {
 public:
  explicit PhaseIntegrator(const EnfSeries& enf) : enf_(enf), phase_at_sample_(enf.size()) {
    double acc = 0.0;
    for (std::size_t k = 0; k < enf.size(); ++k) {
      phase_at_sample_[k] = acc;
      if (k + 1 < enf.size()) {
        acc += 0.5 * (enf.values_hz[k] + enf.values_hz[k + 1]) * enf.sample_period_s;
        acc -= std::floor(acc);
      }
    }
  }

  // t in seconds from the first ENF sample.
  double cycles(double t) const {
    const double pos = t / enf_.sample_period_s;
    auto k = static_cast<std::size_t>(std::floor(pos));
    if (k + 1 >= enf_.size()) k = enf_.size() - 2;
    const double u = (pos - static_cast<double>(k)) * enf_.sample_period_s;
    const double v0 = enf_.values_hz[k];
    const double slope = (enf_.values_hz[k + 1] - v0) / enf_.sample_period_s;
    return phase_at_sample_[k] + v0 * u + 0.5 * slope * u * u;
  }

 private:
  const EnfSeries& enf_;
  std::vector<double> phase_at_sample_;
};

inline double noise_sigma(const SynthesisConfig& config) {
  if (!config.noise_snr_db) return 0.0;
  const auto& lum = config.luminance;
  const double power = 0.5 * lum.modulation_depth * lum.modulation_depth + 0.5 * lum.harmonic2_depth * lum.harmonic2_depth;
  return std::sqrt(power / std::pow(10.0, *config.noise_snr_db / 10.0));
}

inline void check_synthesis(const EnfSeries& enf, const CaptureProfile& capture, const SynthesisConfig& config,
                            int frame_count) {
  require(config.luminance.modulation_depth > 0.0, "synthesis: modulation depth must be positive");
  require(frame_count >= 1, "synthesis: frame_count must be >= 1");
  require(enf.size() >= 2, "synthesis: ENF trace needs at least 2 samples");
  const double needed = frame_count / capture.frame_rate_fps();
  if (enf.duration_s() + 1e-9 < needed) {
    fail(ErrorCode::invalid_argument, "synthesis: ENF trace covers " + std::to_string(enf.duration_s()) +
                                          " s but " + std::to_string(frame_count) + " frames need " +
                                          std::to_string(needed) + " s");
  }
}

// Full-rate sample n (time n / (Fr * M) from the ENF start).
struct FullRateSampler {
  FullRateSampler(const EnfSeries& enf, const CaptureProfile& capture, const SynthesisConfig& config)
      : phase(enf),
        lum(config.luminance),
        rate(capture.full_sample_rate_hz()),
        sigma(noise_sigma(config)),
        normal(config.seed, kLuminanceStream) {}

  double operator()(std::uint64_t n) const {
    const double cyc = phase.cycles(static_cast<double>(n) / rate);
    double x = lum.dc_level + lum.modulation_depth * std::cos(2.0 * std::numbers::pi * 2.0 * cyc);
    if (lum.harmonic2_depth != 0.0) x += lum.harmonic2_depth * std::cos(2.0 * std::numbers::pi * 4.0 * cyc);
    if (sigma > 0.0) x += sigma * normal(n);
    return x;
  }

  PhaseIntegrator phase;
  LuminanceModel lum;
  double rate;
  double sigma;
  CounterNormal normal;
};

}  // namespace detail

/// The full-rate signal x[n] for `frame_count` frames (frame_count * M samples).
inline std::vector<double> synth_full_rate(const EnfSeries& enf, const CaptureProfile& capture,
                                           const SynthesisConfig& config, int frame_count) {
  detail::check_synthesis(enf, capture, config, frame_count);
  const detail::FullRateSampler sample(enf, capture, config);
  std::vector<double> x(static_cast<std::size_t>(frame_count) * capture.row_capacity());
  for (std::size_t n = 0; n < x.size(); ++n) x[n] = sample(n);
  return x;
}

/// Keeps the first L of every M samples.
inline LuminanceSeries apply_rolling_shutter(const std::vector<double>& x_full, const CaptureProfile& capture,
                                             std::optional<GridProfile> grid_hint = std::nullopt) {
  const auto cap = static_cast<std::size_t>(capture.row_capacity());
  const auto rows = static_cast<std::size_t>(capture.rows_per_frame());
  require(!x_full.empty() && x_full.size() % cap == 0,
          "rolling shutter: input length " + std::to_string(x_full.size()) + " is not a positive multiple of M = " +
              std::to_string(cap));
  const std::size_t frames = x_full.size() / cap;
  std::vector<double> y;
  y.reserve(frames * rows);
  for (std::size_t f = 0; f < frames; ++f) {
    y.insert(y.end(), x_full.begin() + static_cast<std::ptrdiff_t>(f * cap),
             x_full.begin() + static_cast<std::ptrdiff_t>(f * cap + rows));
  }
  return LuminanceSeries(capture, grid_hint, static_cast<int>(frames), std::move(y));
}

/// Rolling-shutter luminance for `frame_count` frames starting at the first
/// ENF sample. Equal to apply_rolling_shutter(synth_full_rate(...)) but only
/// evaluates the kept samples.
inline LuminanceSeries synth_luminance(const EnfSeries& enf, const CaptureProfile& capture, const SynthesisConfig& config,
                                       int frame_count, std::optional<GridProfile> grid_hint = std::nullopt) {
  detail::check_synthesis(enf, capture, config, frame_count);
  const detail::FullRateSampler sample(enf, capture, config);
  const auto cap = static_cast<std::uint64_t>(capture.row_capacity());
  const auto rows = static_cast<std::uint64_t>(capture.rows_per_frame());
  std::vector<double> y(static_cast<std::size_t>(frame_count) * rows);
  std::size_t i = 0;
  for (std::uint64_t f = 0; f < static_cast<std::uint64_t>(frame_count); ++f)
    for (std::uint64_t r = 0; r < rows; ++r) y[i++] = sample(f * cap + r);
  return LuminanceSeries(capture, grid_hint, frame_count, std::move(y));
}

/// Sub-range of a trace, [offset_s, offset_s + duration_s], on whole samples.
inline EnfSeries slice_enf(const EnfSeries& enf, double offset_s, double duration_s) {
  const auto first = static_cast<std::size_t>(std::llround(offset_s / enf.sample_period_s));
  const auto count = static_cast<std::size_t>(std::llround(duration_s / enf.sample_period_s)) + 1;
  require(offset_s >= 0.0 && first + count <= enf.size(), "slice_enf: requested range lies outside the trace");
  EnfSeries out;
  out.start_time = add_seconds(enf.start_time, first * enf.sample_period_s);
  out.sample_period_s = enf.sample_period_s;
  out.values_hz.assign(enf.values_hz.begin() + static_cast<std::ptrdiff_t>(first),
                       enf.values_hz.begin() + static_cast<std::ptrdiff_t>(first + count));
  return out;
}

}  // namespace rsenf
