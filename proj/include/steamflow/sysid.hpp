#pragma once

#include <iosfwd>
#include <vector>

#include "steamflow/neural.hpp"
#include "steamflow/plant.hpp"

namespace steamflow {

/// Piecewise-constant open-loop excitation (Table 2 "Training Data" block).
struct ExcitationConfig {
  double u_min = 1.0;
  double u_max = 2.0;
  double interval_min = 15.0;  // seconds
  double interval_max = 30.0;  // seconds
  int total_segments = 40;
  double sample_time = 0.1;
  std::uint64_t seed = 0;
};

struct Dataset {
  std::vector<double> u;
  std::vector<double> y;
  double sample_time = 0.1;
};

/// Symmetric affine normalization: norm(v) = (v - center) / scale.
struct Scaler {
  double center = 0.0;
  double scale = 1.0;
  double norm(double v) const { return (v - center) / scale; }
  double denorm(double v) const { return v * scale + center; }

  /// Map [lo, hi] onto [-1, 1]; degenerate ranges fall back to unit scale.
  static Scaler from_range(double lo, double hi) {
    Scaler s;
    s.center = 0.5 * (lo + hi);
    s.scale = 0.5 * (hi - lo);
    if (s.scale <= 0.0) s.scale = 1.0;
    return s;
  }
};

/// One-step NARX predictor: y(k) = net([y(k-1..k-4), u(k-1..k-4)]),
/// trained and evaluated in normalized coordinates.
struct NarxModel {
  Mlp net;
  int input_delays = 4;   // delayed plant inputs (Table 2)
  int output_delays = 4;  // delayed plant outputs (Table 2)
  Scaler u_scaler, y_scaler;
  double validation_rmse = 0.0;  // one-step, raw output units
  double output_range = 1.0;     // raw max - min of training outputs

  /// Histories are newest-first, raw units, length >= the delay counts.
  double predict(const std::vector<double>& y_hist,
                 const std::vector<double>& u_hist) const;
};

/// Affine-in-control decomposition ŷ(k+1) = f(hist) + g(hist)·u(k) with
/// hist = [y(k..k-3), u(k-1..k-3)] (normalized).
struct NarmaL2Model {
  Mlp f_net;
  Mlp g_net;
  /// Exact affine skip term added to the network part of f; used by the
  /// pinned-g identification to carry the -g·un(k-1) component analytically
  /// so the network only has to learn the (small-range) constant-input
  /// predictor.  Zero (empty) for jointly identified models.
  Eigen::VectorXd f_skip;
  int input_delays = 4;
  int output_delays = 4;
  Scaler u_scaler, y_scaler;
  double validation_rmse = 0.0;  // one-step, raw output units
  double output_range = 1.0;

  Eigen::VectorXd regressor(const std::vector<double>& y_hist,
                            const std::vector<double>& u_hist) const;
  double f(const Eigen::VectorXd& z) const {
    return f_net.forward(z)(0) +
           (f_skip.size() == z.size() ? f_skip.dot(z) : 0.0);
  }
  double g(const Eigen::VectorXd& z) const { return g_net.forward(z)(0); }

  /// ŷ(k+1) in raw units given raw histories (newest-first) and raw u(k).
  double predict(const std::vector<double>& y_hist,
                 const std::vector<double>& u_hist, double u_now) const;
};

struct IdentifyOptions {
  int hidden = 6;  // Table 2 hidden-layer size
  /// NARMA-L2 only: pin g to a constant target (normalized units) and fit f
  /// on the residual target.  The paper's plant has a near-zero true
  /// one-step gain, so a free g is degenerate; pinning it makes the
  /// resulting control law incremental.  Disable to jointly identify a
  /// genuinely input-affine system.
  bool regularize_g = true;
  double g_target = 0.005;
};

std::vector<double> generate_excitation(const ExcitationConfig& cfg);

/// Drive a fresh zero-state plant with generate_excitation(cfg); y[k] is the
/// output observed at step k, before u[k] acts (so y[k] depends only on
/// u[0..k-1], making the NARX regressor exactly causal).
Dataset collect_dataset(const ExcitationConfig& cfg, DiscretePlant& plant);

/// CSV with header t,u,y.
void save_dataset_csv(const Dataset& data, std::ostream& os);
Dataset load_dataset_csv(std::istream& is);

NarxModel identify_narx(const Dataset& data, const TrainConfig& cfg,
                        const IdentifyOptions& opts = {});
NarmaL2Model identify_narma_l2(const Dataset& data, const TrainConfig& cfg,
                               const IdentifyOptions& opts = {});

}  // namespace steamflow
