#pragma once

#include <vector>

#include "steamflow/neural.hpp"
#include "steamflow/sysid.hpp"

namespace steamflow {

/// Second-order reference model G_m(s) = ωn²/(s² + 2ζωn s + ωn²),
/// ZOH-discretized; unity DC gain.
class ReferenceModel {
 public:
  double zeta = 0.8;
  double omega_n = 1.0;
  double sample_time = 0.1;

  static ReferenceModel create(double zeta = 0.8, double omega_n = 1.0,
                               double sample_time = 0.1);

  double step(double r);
  double output() const { return C_.dot(state_); }
  void reset() { state_.setZero(); }

 private:
  Eigen::Matrix2d Ad_;
  Eigen::Vector2d Bd_;
  Eigen::RowVector2d C_;
  Eigen::Vector2d state_{0.0, 0.0};
};

/// Feedback-linearizing control u = (y_ref_next - f) / g from the NARMA-L2
/// model, with a floor on |g| and actuator clamping.  With a g-regularized
/// model (see IdentifyOptions) this is an incremental/integral law.
class NarmaL2Controller {
 public:
  NarmaL2Model model;
  double g_floor = 1e-3;  // post-normalization units
  double u_lo = -200.0;
  double u_hi = 200.0;

  NarmaL2Controller(NarmaL2Model m, double lo = -200.0, double hi = 200.0);

  /// One control step; pushes y_meas and the emitted (clamped) u into the
  /// internal histories.
  double control(double y_ref_next, double y_meas);
  void reset();

 private:
  TappedDelayLine y_hist_;  // raw measured outputs, newest first
  TappedDelayLine u_hist_;  // raw applied inputs, newest first
};

/// Neural controller trained so the closed loop follows the reference
/// model.  Runtime uses only controller_net and live measurements; the
/// plant surrogate is consumed during training and not stored.
class MrcController {
 public:
  Mlp controller_net;  // [r, r_prev, y, y_prev, u_prev1, u_prev2] -> u (norm.)
  ReferenceModel ref_model;  // the tracked dynamics (kept for provenance)
  Scaler u_scaler, y_scaler;
  double u_lo = -200.0;
  double u_hi = 200.0;
  double training_loss = 0.0;  // final mean squared residual

  double control(double r, double y_meas);
  void reset();

 private:
  double rn_prev_ = 0.0, yn_prev_ = 0.0, un_prev1_ = 0.0, un_prev2_ = 0.0;
};

struct MrcTrainOptions {
  int hidden = 6;
  double move_penalty = 1e-3;  // weight on (Δu)² rollout residuals
  int iterations = 250;        // LM iterations per start
  int restarts = 3;            // deterministic multi-start, best loss kept
  double train_amplitude = 4.0;  // piecewise-constant reference range
  double u_lo = -200.0;
  double u_hi = 200.0;
};

/// Dynamic backpropagation: Levenberg-Marquardt on the stacked rollout
/// residuals [y_surrogate - y_m, sqrt(mu)·Δu] over piecewise-constant and
/// sinusoidal reference episodes, differentiating through the surrogate.
MrcController train_mrc(const NarxModel& surrogate, const ReferenceModel& rm,
                        const TrainConfig& cfg,
                        const MrcTrainOptions& opts = {});

struct NmpcOptions {
  int horizon_N1 = 1;
  int horizon_N2 = 10;
  int control_horizon_Nu = 2;
  double rho = 1.2;        // control-move weight (normalized units)
  double traj_pole = 0.91; // per-sample pole of the first-order reference
                           // trajectory from the measurement; 0 = track the
                           // raw reference directly
  double u_lo = -200.0;
  double u_hi = 200.0;
  int max_iters = 40;        // quasi-Newton iterations per restart
  bool fd_gradient = false;  // central differences instead of backprop
};

/// Receding-horizon controller over a NARX model: bounded quasi-Newton with
/// deterministic restarts, warm-started from the previous solution; only the
/// first optimized move is applied.
class NmpcController {
 public:
  NmpcController(NarxModel model, NmpcOptions opts = {});

  /// y_ref_traj supplies references for steps k+1..k+N2 (the last entry is
  /// held beyond its end).  Pushes y_meas and the applied u internally.
  double control(const std::vector<double>& y_ref_traj, double y_meas);

  /// Fill both histories with a constant operating point (testing/startup).
  void seed_history(double y_raw, double u_raw);
  void reset();

  bool last_warning() const { return last_warning_; }
  double last_cost() const { return last_cost_; }
  const NmpcOptions& options() const { return opts_; }
  const NarxModel& model() const { return model_; }

  /// Cost (and optionally its gradient) of a normalized move sequence d
  /// against a normalized shaped-target sequence w — exposed for testing.
  double cost(const Eigen::VectorXd& d, const std::vector<double>& w_norm,
              Eigen::VectorXd* grad) const;

 private:
  Eigen::VectorXd optimize(const Eigen::VectorXd& start,
                           const std::vector<double>& w_norm, double* cost_out,
                           bool* converged) const;

  NarxModel model_;
  NmpcOptions opts_;
  TappedDelayLine y_hist_;  // normalized
  TappedDelayLine u_hist_;  // normalized
  Eigen::VectorXd warm_;
  bool warm_valid_ = false;
  bool last_warning_ = false;
  double last_cost_ = 0.0;
};

}  // namespace steamflow
