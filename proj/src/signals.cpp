#include "steamflow/signals.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace steamflow {

double sample_reference(const ReferenceSignal& sig, double t) {
  if (!std::isfinite(sig.amplitude))
    throw ValidationError("ReferenceSignal: amplitude must be finite");
  if (sig.kind == ReferenceKind::step)
    return t < sig.start_time ? 0.0 : sig.amplitude;
  if (!(sig.frequency > 0.0))
    throw ValidationError("ReferenceSignal: sine frequency must be positive");
  return sig.amplitude * std::sin(sig.frequency * t + sig.phase);
}

NoiseGenerator::NoiseGenerator(const NoiseConfig& cfg, double sample_time)
    : cfg_(cfg), rng_(cfg.seed) {
  if (!(cfg.amplitude >= 0.0))
    throw ValidationError("NoiseConfig: amplitude must be >= 0");
  if (!(cfg.correlation_time > 0.0))
    throw ValidationError("NoiseConfig: correlation_time must be positive");
  if (!(sample_time > 0.0))
    throw ValidationError("NoiseGenerator: sample_time must be positive");
  alpha_ = std::exp(-sample_time / cfg.correlation_time);
}

double NoiseGenerator::next() {
  if (!cfg_.enabled || cfg_.amplitude == 0.0) return 0.0;
  const double white = rng_.uniform(-1.0, 1.0);
  state_ = alpha_ * state_ + (1.0 - alpha_) * white;
  // The filter state is a convex combination of the white samples, so
  // |state| <= 1 and the scaled output never exceeds 1.4 * amplitude; its
  // typical peak over a run is close to the configured amplitude.
  return 1.4 * cfg_.amplitude * state_;
}

namespace {

// First time (relative to t.front()) at which y reaches `threshold` from
// below, linearly interpolated between samples.
double first_crossing(const std::vector<double>& t,
                      const std::vector<double>& y, double threshold,
                      const char* metric) {
  if (y.front() >= threshold) return 0.0;
  for (std::size_t i = 1; i < y.size(); ++i) {
    if (y[i] >= threshold) {
      const double frac = (threshold - y[i - 1]) / (y[i] - y[i - 1]);
      return t[i - 1] + frac * (t[i] - t[i - 1]) - t.front();
    }
  }
  throw ValidationError(std::string(metric) +
                        " undefined: response never reaches the threshold");
}

}  // namespace

StepMetrics step_metrics(const std::vector<double>& t,
                         const std::vector<double>& y, double target,
                         const StepMetricsOptions& opts) {
  if (t.size() != y.size() || t.size() < 2)
    throw ValidationError("step_metrics: need >= 2 samples with equal t/y lengths");
  for (std::size_t i = 1; i < t.size(); ++i)
    if (!(t[i] > t[i - 1]))
      throw ValidationError("step_metrics: t must be strictly increasing");
  if (!std::isfinite(target))
    throw ValidationError("step_metrics: target must be finite");

  const std::size_t n = y.size();
  const std::size_t n_tail = std::max<std::size_t>(1, n / 10);

  StepMetrics m;
  double tail_sum = 0.0;
  for (std::size_t i = n - n_tail; i < n; ++i) tail_sum += y[i];
  m.steady_state = tail_sum / static_cast<double>(n_tail);

  // Never-settled guard: the two halves of the trailing window must agree
  // in the mean (a sample-wise variation test would reject every noisy run).
  if (n_tail >= 2) {
    const std::size_t half = n_tail / 2;
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t i = n - n_tail; i < n - half; ++i) s1 += y[i];
    for (std::size_t i = n - half; i < n; ++i) s2 += y[i];
    const double m1 = s1 / static_cast<double>(n_tail - half);
    const double m2 = s2 / static_cast<double>(half);
    if (std::abs(m1 - m2) > 0.05 * std::abs(m.steady_state) + 1e-12)
      throw ValidationError(
          "settling_time undefined: trailing output still drifting (run "
          "never settled)");
  }

  // Work with a positive steady state; α<0 mirrors the response.
  const double sign = m.steady_state < 0.0 ? -1.0 : 1.0;
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = sign * y[i];
  const double ss = sign * m.steady_state;
  if (!(ss > 0.0))
    throw ValidationError(
        "rise_time undefined: steady state is zero, thresholds degenerate");

  const double t_lo = first_crossing(t, w, opts.rise_lo * ss, "rise_time");
  const double t_hi = first_crossing(t, w, opts.rise_hi * ss, "rise_time");
  m.rise_time = t_hi - t_lo;

  const double peak = *std::max_element(w.begin(), w.end());
  m.overshoot_pct = std::max(0.0, 100.0 * (peak - ss) / ss);

  const double band = opts.settle_band * ss;
  std::size_t last_out = n;  // index of last sample outside the band
  for (std::size_t i = n; i-- > 0;) {
    if (std::abs(w[i] - ss) > band) {
      last_out = i;
      break;
    }
  }
  if (last_out == n) {
    m.settling_time = 0.0;  // never left the band
  } else if (last_out == n - 1) {
    m.settling_time = t.back() - t.front();  // still outside at the end
  } else {
    const double boundary = w[last_out] > ss ? ss + band : ss - band;
    const double frac =
        (boundary - w[last_out]) / (w[last_out + 1] - w[last_out]);
    m.settling_time =
        t[last_out] + frac * (t[last_out + 1] - t[last_out]) - t.front();
  }
  return m;
}

TrackMetrics track_metrics(const std::vector<double>& y) {
  if (y.empty()) throw ValidationError("track_metrics: empty sequence");
  TrackMetrics m;
  m.peak_value = *std::max_element(y.begin() + y.size() / 2, y.end());
  return m;
}

}  // namespace steamflow
