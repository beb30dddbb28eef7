#pragma once

#include <vector>

#include "steamflow/common.hpp"

namespace steamflow {

enum class ReferenceKind { step, sine };

struct ReferenceSignal {
  ReferenceKind kind = ReferenceKind::step;
  double amplitude = 1.0;   // flow units; sine scenarios default to 4
  double start_time = 0.0;  // step onset [s]
  double frequency = 0.2;   // sine [rad/s]
  double phase = 0.0;       // sine [rad]
};

double sample_reference(const ReferenceSignal& sig, double t);

/// Band-limited sensor disturbance: seeded uniform white noise through a
/// first-order low-pass with the given correlation time.  Added to the
/// measured output only; the true plant state evolves noise-free.
struct NoiseConfig {
  bool enabled = false;
  double amplitude = 0.05;        // flow units, typical peak magnitude
  double correlation_time = 0.5;  // seconds
  std::uint64_t seed = 0;
};

class NoiseGenerator {
 public:
  NoiseGenerator(const NoiseConfig& cfg, double sample_time);

  /// Next noise sample; 0 when disabled.  |value| <= 1.4 * amplitude always.
  double next();

 private:
  NoiseConfig cfg_;
  Rng rng_;
  double alpha_ = 0.0;  // filter pole exp(-Ts/tau)
  double state_ = 0.0;
};

struct StepMetricsOptions {
  double rise_lo = 0.1;       // rise-time lower threshold (fraction of ss)
  double rise_hi = 0.9;       // rise-time upper threshold
  double settle_band = 0.02;  // settling band (fraction of ss)
};

struct StepMetrics {
  double rise_time = 0.0;      // s, 10%→90% by default
  double overshoot_pct = 0.0;  // percent of steady state, >= 0
  double settling_time = 0.0;  // s, last exit from the ±band
  double steady_state = 0.0;   // flow units, mean of the final 10%
};

struct TrackMetrics {
  double peak_value = 0.0;  // max over the second half of the run
};

/// Step-response characteristics (Table 2 layout).  Times are measured
/// relative to t.front() so that shifting the time axis together with the
/// response leaves all metrics unchanged.  Throws ValidationError naming the
/// metric when the run never settles (trailing-window drift test) or never
/// crosses a rise threshold.
StepMetrics step_metrics(const std::vector<double>& t,
                         const std::vector<double>& y, double target,
                         const StepMetricsOptions& opts = {});

TrackMetrics track_metrics(const std::vector<double>& y);

}  // namespace steamflow
