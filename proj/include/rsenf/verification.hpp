#pragma once

// Time-of-recording verification: NCC alignment of extracted ENF against a
// reference log, candidate sweeps (Metrics 1-4) and the TD/FD/ND decision.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "rsenf/core_model.hpp"
#include "rsenf/error.hpp"
#include "rsenf/series.hpp"
#include "rsenf/spectral.hpp"

namespace rsenf {

inline constexpr double kDefaultCorrThreshold = 0.94;

struct NccResult {
  double peak_corr = -1.0;
  std::size_t lag_index = 0;
  double lag_s = 0.0;         // offset of the query start within the reference
  std::vector<double> trace;  // correlation per lag, when requested
};

namespace detail {

inline double centred_norm(std::span<const double> x, double& mean) {
  mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return std::sqrt(ss);
}

inline bool negligible_spread(double norm, double mean, std::size_t n) {
  return norm <= 1e-12 * std::max(1.0, std::abs(mean)) * std::sqrt(static_cast<double>(n));
}

}  // namespace detail

/// Zero-normalized cross-correlation over every lag at which the query lies
/// fully inside the reference. Both segments are mean-removed and scaled per
/// overlap.
inline NccResult ncc_align(const EnfSeries& query, const EnfSeries& reference, bool keep_trace = false) {
  require(query.size() >= 60, "ncc: query needs at least 60 samples");
  require(reference.size() >= query.size(), "ncc: reference is shorter than the query");
  require(std::abs(query.sample_period_s - reference.sample_period_s) < 1e-9,
          "ncc: query and reference sample periods differ");
  const std::size_t m = query.size();
  double qmean;
  const double qnorm = detail::centred_norm(query.values_hz, qmean);
  if (detail::negligible_spread(qnorm, qmean, m)) fail(ErrorCode::degenerate, "ncc: query has zero variance");
  std::vector<double> q(m);
  for (std::size_t i = 0; i < m; ++i) q[i] = (query.values_hz[i] - qmean) / qnorm;

  NccResult r;
  const std::size_t lags = reference.size() - m + 1;
  if (keep_trace) r.trace.resize(lags);
  for (std::size_t lag = 0; lag < lags; ++lag) {
    const std::span<const double> seg(reference.values_hz.data() + lag, m);
    double smean;
    const double snorm = detail::centred_norm(seg, smean);
    if (detail::negligible_spread(snorm, smean, m)) {
      fail(ErrorCode::degenerate, "ncc: reference segment at lag " + std::to_string(lag) + " has zero variance");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) acc += q[i] * (seg[i] - smean);
    const double c = acc / snorm;
    if (keep_trace) r.trace[lag] = c;
    if (lag == 0 || c > r.peak_corr) r.peak_corr = c, r.lag_index = lag;
  }
  r.lag_s = static_cast<double>(r.lag_index) * reference.sample_period_s;
  return r;
}

struct CandidateMatch {
  double component_hz = 0.0;
  double idle_assumption_pct = 0.0;
  double peak_corr = -1.0;  // -1 when extraction or alignment failed
  double lag_s = 0.0;       // offset of the video start within the reference
  bool failed = false;
};

struct MetricConfig {
  int metric_id = 4;
  std::vector<double> components_hz;          // empty: default set for the capture
  std::vector<double> idle_assumptions_pct;   // empty: metric default
  ExtractOptions extract;
  double threshold = kDefaultCorrThreshold;
  double lag_tolerance_s = 1.0;
};

/// Model components up to twice the illumination frequency, plus that
/// harmonic itself, in ascending order.
inline std::vector<double> default_components(const GridProfile& grid, const CaptureProfile& capture) {
  const double f0 = grid.illumination_freq_hz();
  std::vector<double> out;
  for (const auto& c : candidate_components(grid, capture))
    if (c.freq_hz <= 2.0 * f0 + 1e-9) out.push_back(c.freq_hz);
  out.push_back(2.0 * f0);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(), [](double a, double b) { return std::abs(a - b) < 1e-9; }), out.end());
  return out;
}

namespace detail {

inline void check_metric(int id) { require(id >= 1 && id <= 4, "metric id must be 1, 2, 3 or 4"); }

inline std::vector<double> metric_idles(const MetricConfig& config) {
  if (config.metric_id <= 2) return {0.0};
  if (!config.idle_assumptions_pct.empty()) return config.idle_assumptions_pct;
  std::vector<double> out;
  for (int p = 0; p <= 95; p += 5) out.push_back(p);
  return out;
}

inline std::vector<double> metric_components(const LuminanceSeries& series, const GridProfile& grid,
                                             const MetricConfig& config) {
  if (config.metric_id == 1) return {grid.illumination_freq_hz()};
  if (!config.components_hz.empty()) return config.components_hz;
  return default_components(grid, series.capture());
}

}  // namespace detail

/// One candidate per (component, idle assumption) of the metric, in
/// idle-major order. Failures are recorded as corr = -1, never thrown.
inline std::vector<CandidateMatch> evaluate_metrics(const LuminanceSeries& series, const EnfSeries& reference,
                                                    const GridProfile& grid, const MetricConfig& config) {
  detail::check_metric(config.metric_id);
  const auto idles = detail::metric_idles(config);
  const auto comps = detail::metric_components(series, grid, config);
  ExtractOptions opts = config.extract;
  opts.nominal_enf_hz = grid.nominal_enf_hz();

  auto sweep_idle = [&](double idle_pct) {
    std::vector<CandidateMatch> out;
    std::optional<LuminanceSeries> expanded;
    try {
      expanded = interpolate_idle(series, idle_pct / 100.0);
    } catch (const Error&) {
    }
    for (double comp : comps) {
      CandidateMatch c;
      c.component_hz = comp;
      c.idle_assumption_pct = idle_pct;
      try {
        if (!expanded) throw Error(ErrorCode::invalid_argument, "interpolation failed");
        const auto query = extract_enf(*expanded, comp, opts);
        const auto ncc = ncc_align(query, reference);
        c.peak_corr = ncc.peak_corr;
        c.lag_s = ncc.lag_s - seconds_between(opts.video_start, query.start_time);
      } catch (const Error&) {
        c.peak_corr = -1.0;
        c.failed = true;
      }
      out.push_back(c);
    }
    return out;
  };

  // Idle assumptions are independent; a small worker pool keeps at most one
  // expanded series per worker alive.
  std::vector<std::vector<CandidateMatch>> parts(idles.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < idles.size(); i = next++) parts[i] = sweep_idle(idles[i]);
  };
  const std::size_t workers = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, idles.size());
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  std::vector<CandidateMatch> all;
  for (auto& part : parts) all.insert(all.end(), part.begin(), part.end());
  return all;
}

struct LagGroup {
  double representative_lag_s = 0.0;
  std::size_t member_count = 0;
  double best_corr = 0.0;
  double d_g = 0.0;
};

struct Decision {
  std::optional<double> chosen_lag_s;
  std::vector<LagGroup> groups;  // Metric 4 only
};

/// Metrics 1-3: lag of the best candidate above the threshold. Metric 4:
/// passing lags are grouped (sorted, split where a lag exceeds the group's
/// first lag by more than the tolerance); each group scores
/// d_g = sqrt((n / n_max)^2 + rho^2) and the best group's top candidate wins.
inline Decision decide(const std::vector<CandidateMatch>& candidates, int metric_id,
                       double threshold = kDefaultCorrThreshold, double lag_tolerance_s = 1.0) {
  require(!candidates.empty(), "decide: no candidates");
  detail::check_metric(metric_id);
  std::vector<const CandidateMatch*> passing;
  for (const auto& c : candidates)
    if (!c.failed && c.peak_corr > threshold) passing.push_back(&c);
  Decision d;
  if (passing.empty()) return d;

  if (metric_id <= 3) {
    const auto* best = passing.front();
    for (const auto* c : passing)
      if (c->peak_corr > best->peak_corr) best = c;
    d.chosen_lag_s = best->lag_s;
    return d;
  }

  std::stable_sort(passing.begin(), passing.end(), [](auto* a, auto* b) { return a->lag_s < b->lag_s; });
  std::size_t start = 0;
  std::size_t n_max = 0;
  while (start < passing.size()) {
    std::size_t end = start + 1;
    while (end < passing.size() && passing[end]->lag_s - passing[start]->lag_s <= lag_tolerance_s + 1e-9) ++end;
    LagGroup g;
    g.member_count = end - start;
    const auto* best = passing[start];
    for (std::size_t i = start; i < end; ++i)
      if (passing[i]->peak_corr > best->peak_corr) best = passing[i];
    g.best_corr = best->peak_corr;
    g.representative_lag_s = best->lag_s;
    d.groups.push_back(g);
    n_max = std::max(n_max, g.member_count);
    start = end;
  }
  const LagGroup* winner = nullptr;
  for (auto& g : d.groups) {
    const double n = static_cast<double>(g.member_count) / static_cast<double>(n_max);
    g.d_g = std::sqrt(n * n + g.best_corr * g.best_corr);
    if (!winner || g.d_g > winner->d_g || (g.d_g == winner->d_g && g.best_corr > winner->best_corr)) winner = &g;
  }
  d.chosen_lag_s = winner->representative_lag_s;
  return d;
}

enum class Outcome { TD, FD, ND };

inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::TD: return "TD";
    case Outcome::FD: return "FD";
    default: return "ND";
  }
}

struct VerificationReport {
  int metric_id = 0;
  std::vector<CandidateMatch> candidates;
  std::vector<LagGroup> groups;
  std::optional<double> chosen_lag_s;
  Outcome decision = Outcome::ND;
  double expected_lag_s = 0.0;
  double threshold = kDefaultCorrThreshold;
  double lag_tolerance_s = 1.0;

  double best_corr() const {
    double b = -1.0;
    for (const auto& c : candidates) b = std::max(b, c.peak_corr);
    return b;
  }
};

inline Outcome classify(const std::optional<double>& chosen, double expected, double tolerance) {
  if (!chosen) return Outcome::ND;
  return std::abs(*chosen - expected) <= tolerance + 1e-9 ? Outcome::TD : Outcome::FD;
}

/// Decision for a precomputed candidate set against a claimed start.
inline VerificationReport report_for(std::vector<CandidateMatch> candidates, const EnfSeries& reference,
                                     Timestamp claimed_start, int metric_id, const MetricConfig& config) {
  if (claimed_start < reference.start_time || claimed_start > reference.end_time()) {
    fail(ErrorCode::invalid_argument, "claimed start lies outside the reference ENF log");
  }
  VerificationReport r;
  r.metric_id = metric_id;
  r.threshold = config.threshold;
  r.lag_tolerance_s = config.lag_tolerance_s;
  r.expected_lag_s = seconds_between(reference.start_time, claimed_start);
  const auto d = decide(candidates, metric_id, config.threshold, config.lag_tolerance_s);
  r.chosen_lag_s = d.chosen_lag_s;
  r.groups = d.groups;
  r.decision = classify(d.chosen_lag_s, r.expected_lag_s, config.lag_tolerance_s);
  r.candidates = std::move(candidates);
  return r;
}

inline VerificationReport verify_timestamp(const LuminanceSeries& series, const EnfSeries& reference,
                                           Timestamp claimed_start, const GridProfile& grid, MetricConfig config) {
  detail::check_metric(config.metric_id);
  if (claimed_start < reference.start_time || claimed_start > reference.end_time()) {
    fail(ErrorCode::invalid_argument, "claimed start lies outside the reference ENF log");
  }
  auto candidates = evaluate_metrics(series, reference, grid, config);
  return report_for(std::move(candidates), reference, claimed_start, config.metric_id, config);
}

}  // namespace rsenf
