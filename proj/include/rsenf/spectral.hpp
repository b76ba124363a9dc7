#pragma once

// Periodograms with parabolic peak refinement, idle-sample interpolation and
// short-time ENF extraction.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "rsenf/error.hpp"
#include "rsenf/fft.hpp"
#include "rsenf/series.hpp"

namespace rsenf {

struct SpectrumOptions {
  // Transform length is the next power of two >= pad_factor * window length.
  std::size_t pad_factor = 4;
};

/// One-sided |X[k]| of the mean-removed, Hann-tapered, zero-padded window.
struct SpectrumEstimate {
  double bin_spacing_hz = 0.0;
  std::vector<double> magnitudes;  // transform_length / 2 + 1 bins
  double source_sample_rate_hz = 0.0;
  std::size_t transform_length = 0;
  double window_sum = 0.0;  // sum of taper weights, for amplitude scaling

  double freq_of(double bin) const { return bin * bin_spacing_hz; }
  double amplitude_of(double magnitude) const { return 2.0 * magnitude / window_sum; }
};

struct PeakReading {
  double freq_hz = 0.0;
  double magnitude = 0.0;  // amplitude of an equivalent sinusoid
};

namespace detail {

inline double hann(std::size_t i, std::size_t n) {
  if (n < 2) return 1.0;
  return 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1));
}

// Vertex offset in (-0.5, 0.5) and log-height of a parabola through three
// log-magnitudes. Falls back to the centre bin when a neighbour is zero.
inline std::pair<double, double> parabolic_log(double left, double centre, double right) {
  if (!(left > 0.0 && centre > 0.0 && right > 0.0)) return {0.0, centre > 0.0 ? std::log(centre) : -INFINITY};
  const double a = std::log(left), b = std::log(centre), c = std::log(right);
  const double denom = a - 2.0 * b + c;
  if (!(denom < 0.0)) return {0.0, b};
  const double p = std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
  return {p, b - 0.25 * (a - c) * p};
}

inline void check_not_flat(std::span<const double> x, double mean, const char* who) {
  double spread = 0.0;
  for (double v : x) spread = std::max(spread, std::abs(v - mean));
  if (!(spread > 0.0)) fail(ErrorCode::degenerate, std::string(who) + ": window is constant (all zero after mean removal)");
}

}  // namespace detail

inline SpectrumEstimate magnitude_spectrum(std::span<const double> x, double sample_rate_hz,
                                           const SpectrumOptions& options = {}) {
  require(x.size() >= 2, "spectrum: need at least 2 samples");
  require(sample_rate_hz > 0.0, "spectrum: sample rate must be positive");
  require(options.pad_factor >= 1, "spectrum: pad factor must be >= 1");
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());

  fft::RealForward plan(fft::next_pow2(options.pad_factor * x.size()));
  double* in = plan.input();
  double wsum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = detail::hann(i, x.size());
    wsum += w;
    in[i] = (x[i] - mean) * w;
  }
  std::fill(in + x.size(), in + plan.size(), 0.0);
  plan.execute();

  SpectrumEstimate s;
  s.transform_length = plan.size();
  s.source_sample_rate_hz = sample_rate_hz;
  s.bin_spacing_hz = sample_rate_hz / static_cast<double>(plan.size());
  s.window_sum = wsum;
  s.magnitudes.resize(plan.size() / 2 + 1);
  for (std::size_t k = 0; k < s.magnitudes.size(); ++k) s.magnitudes[k] = std::abs(plan.bin(k));
  return s;
}

/// Largest bin within [center - halfwidth, center + halfwidth], refined by a
/// parabola through the log-magnitudes of it and its two neighbours.
inline PeakReading peak_in_band(const SpectrumEstimate& s, double center_hz, double halfwidth_hz) {
  const double lo = center_hz - halfwidth_hz, hi = center_hz + halfwidth_hz;
  const auto last = static_cast<long>(s.magnitudes.size()) - 1;
  const long k0 = std::max(1L, static_cast<long>(std::ceil(lo / s.bin_spacing_hz)));
  const long k1 = std::min(last - 1, static_cast<long>(std::floor(hi / s.bin_spacing_hz)));
  require(k0 <= k1, "peak search: band holds no spectral bin");
  long best = k0;
  for (long k = k0 + 1; k <= k1; ++k)
    if (s.magnitudes[k] > s.magnitudes[best]) best = k;
  const auto [p, logmag] = detail::parabolic_log(s.magnitudes[best - 1], s.magnitudes[best], s.magnitudes[best + 1]);
  PeakReading r;
  r.freq_hz = std::clamp(s.freq_of(static_cast<double>(best) + p), lo, hi);
  r.magnitude = s.amplitude_of(std::exp(logmag));
  return r;
}

inline PeakReading periodogram_peak(std::span<const double> window, double sample_rate_hz, double band_center_hz,
                                    double band_halfwidth_hz, const SpectrumOptions& options = {}) {
  require(band_halfwidth_hz > 0.0, "periodogram: band half-width must be positive");
  const double nyquist = sample_rate_hz / 2.0;
  if (!(band_center_hz - band_halfwidth_hz > 0.0 && band_center_hz + band_halfwidth_hz < nyquist)) {
    fail(ErrorCode::invalid_argument, "periodogram: band " + std::to_string(band_center_hz) + " +/- " +
                                          std::to_string(band_halfwidth_hz) + " Hz is outside (0, " +
                                          std::to_string(nyquist) + ") Hz");
  }
  require(static_cast<double>(window.size()) >= 2.0 * sample_rate_hz - 1e-9,
          "periodogram: window must hold at least 2 s of samples");
  const double mean = std::accumulate(window.begin(), window.end(), 0.0) / static_cast<double>(window.size());
  detail::check_not_flat(window, mean, "periodogram");
  return peak_in_band(magnitude_spectrum(window, sample_rate_hz, options), band_center_hz, band_halfwidth_hz);
}

inline PeakReading periodogram_peak(const LuminanceSeries& series, double band_center_hz, double band_halfwidth_hz,
                                    const SpectrumOptions& options = {}) {
  return periodogram_peak(series.samples(), series.sample_rate_hz(), band_center_hz, band_halfwidth_hz, options);
}

/// Re-inserts the idle samples of each frame. With M' = round(L / (1 - a)),
/// sample j >= L of frame k becomes the mean of sample L-1 of frames k-1 and
/// k+1 (a single neighbour at either end).
inline LuminanceSeries interpolate_idle(const LuminanceSeries& series, double assumed_idle) {
  require(assumed_idle >= 0.0 && assumed_idle <= 0.95 + 1e-12, "interpolate_idle: assumed idle must lie in [0, 0.95]");
  require(series.frame_count() >= 3, "interpolate_idle: need at least 3 frames");
  const int rows = series.rows_per_frame();
  const int expanded = static_cast<int>(std::lround(rows / (1.0 - assumed_idle)));
  if (expanded == rows) return series;

  const int frames = series.frame_count();
  std::vector<double> out(static_cast<std::size_t>(frames) * expanded);
  for (int f = 0; f < frames; ++f) {
    double* dst = out.data() + static_cast<std::size_t>(f) * expanded;
    for (int r = 0; r < rows; ++r) dst[r] = series.at(f, r);
    double fill;
    if (f == 0)
      fill = series.at(1, rows - 1);
    else if (f == frames - 1)
      fill = series.at(frames - 2, rows - 1);
    else
      fill = 0.5 * (series.at(f - 1, rows - 1) + series.at(f + 1, rows - 1));
    std::fill(dst + rows, dst + expanded, fill);
  }
  return LuminanceSeries(CaptureProfile::without_idle(series.capture().frame_rate_fps(), expanded), series.grid_hint(),
                         frames, std::move(out));
}

struct ExtractOptions {
  double window_s = 20.0;
  double overlap_s = 19.0;
  double band_halfwidth_hz = 1.0;
  std::optional<double> nominal_enf_hz;  // defaults to the series' grid hint
  Timestamp video_start{};              // time of the first sample
};

namespace detail {

// Decimation factor for the baseband route: a divisor of the hop length in
// samples, keeping the decimated rate at or above 40 Hz.
inline std::size_t decimation_factor(double sample_rate_hz, double hop_s) {
  const double hop_samples = sample_rate_hz * hop_s;
  const auto rounded = static_cast<long long>(std::llround(hop_samples));
  const auto cap = static_cast<long long>(std::floor(sample_rate_hz / 40.0));
  if (cap <= 1) return 1;
  if (rounded > 0 && std::abs(hop_samples - static_cast<double>(rounded)) < 1e-6) {
    for (long long d = cap; d >= 1; --d)
      if (rounded % d == 0) return static_cast<std::size_t>(d);
  }
  return static_cast<std::size_t>(cap);
}

}  // namespace detail

/// Short-time ENF trace from one component. The signal is mixed down by the
/// component frequency, low-passed with a triangular kernel and decimated,
/// then each window's peak within +/- band of zero is refined parabolically.
/// Output sample w sits at the centre of window w.
inline EnfSeries extract_enf(const LuminanceSeries& series, double component_freq_hz, const ExtractOptions& options = {}) {
  const double fs = series.sample_rate_hz();
  const double hop = options.window_s - options.overlap_s;
  require(options.window_s > 0.0 && hop > 0.0, "extract_enf: need window > 0 and overlap < window");
  require(options.band_halfwidth_hz > 0.0, "extract_enf: band half-width must be positive");
  const double nominal = options.nominal_enf_hz ? *options.nominal_enf_hz
                         : series.grid_hint()  ? series.grid_hint()->nominal_enf_hz()
                                               : NAN;
  require(std::isfinite(nominal), "extract_enf: nominal ENF unknown (no grid hint and none given)");
  const auto& x = series.samples();
  const double duration = static_cast<double>(x.size()) / fs;
  if (duration + 1e-9 < options.window_s) {
    fail(ErrorCode::invalid_argument, "extract_enf: series lasts " + std::to_string(duration) + " s, shorter than the " +
                                          std::to_string(options.window_s) + " s window");
  }
  if (!(component_freq_hz - options.band_halfwidth_hz > 0.0 && component_freq_hz + options.band_halfwidth_hz < fs / 2.0)) {
    fail(ErrorCode::invalid_argument, "extract_enf: component " + std::to_string(component_freq_hz) +
                                          " Hz is outside the series' usable band (0, " + std::to_string(fs / 2.0) + ") Hz");
  }
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  detail::check_not_flat(x, mean, "extract_enf");

  const std::size_t dec = detail::decimation_factor(fs, hop);
  const double fs_d = fs / static_cast<double>(dec);
  const std::size_t n = x.size();
  const std::size_t nd = (n - 1) / dec + 1;

  // Mix and decimate in one pass: sample i contributes to outputs i/dec and
  // i/dec + 1 with triangular weights.
  std::vector<std::complex<double>> y(nd + 1);
  const double dw = -2.0 * std::numbers::pi * component_freq_hz / fs;
  const std::complex<double> step = std::polar(1.0, dw);
  std::complex<double> ph;
  const double norm = 1.0 / (static_cast<double>(dec) * static_cast<double>(dec));
  for (std::size_t i = 0; i < n; ++i) {
    if (i % 1024 == 0) ph = std::polar(1.0, std::fmod(dw * static_cast<double>(i), 2.0 * std::numbers::pi));
    const std::complex<double> z = (x[i] - mean) * ph;
    ph *= step;
    const std::size_t k = i / dec;
    const auto r = static_cast<double>(i - k * dec);
    y[k] += z * ((static_cast<double>(dec) - r) * norm);
    y[k + 1] += z * (r * norm);
  }
  y.resize(nd);

  const auto count = static_cast<std::size_t>(std::floor((duration - options.window_s) / hop + 1e-9)) + 1;
  const auto wlen = static_cast<std::size_t>(std::llround(options.window_s * fs_d));
  require(wlen >= 8, "extract_enf: window too short after decimation");
  fft::ComplexForward plan(fft::next_pow2(4 * wlen));
  const std::size_t nfft = plan.size();
  const double df = fs_d / static_cast<double>(nfft);
  const auto klo = static_cast<long>(std::ceil(-options.band_halfwidth_hz / df));
  const auto khi = static_cast<long>(std::floor(options.band_halfwidth_hz / df));
  auto wrap = [nfft](long k) { return static_cast<std::size_t>((k % static_cast<long>(nfft) + static_cast<long>(nfft)) %
                                                                static_cast<long>(nfft)); };

  std::vector<double> taper(wlen);
  for (std::size_t i = 0; i < wlen; ++i) taper[i] = detail::hann(i, wlen);

  EnfSeries out;
  out.sample_period_s = hop;
  out.start_time = add_seconds(options.video_start, options.window_s / 2.0);
  out.values_hz.resize(count);
  for (std::size_t w = 0; w < count; ++w) {
    auto start = static_cast<std::size_t>(std::llround(static_cast<double>(w) * hop * fs_d));
    start = std::min(start, nd - std::min(nd, wlen));
    for (std::size_t i = 0; i < nfft; ++i) plan.set(i, (i < wlen && start + i < nd) ? y[start + i] * taper[i] : 0.0);
    plan.execute();
    long best = klo;
    double best_mag = -1.0;
    for (long k = klo; k <= khi; ++k) {
      const double m = std::abs(plan.bin(wrap(k)));
      if (m > best_mag) best_mag = m, best = k;
    }
    const auto [p, logmag] =
        detail::parabolic_log(std::abs(plan.bin(wrap(best - 1))), best_mag, std::abs(plan.bin(wrap(best + 1))));
    (void)logmag;
    const double offset = std::clamp((static_cast<double>(best) + p) * df, -options.band_halfwidth_hz,
                                     options.band_halfwidth_hz);
    out.values_hz[w] = nominal + offset / 2.0;
  }
  return out;
}

}  // namespace rsenf
