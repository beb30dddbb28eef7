#pragma once

#include <Eigen/Dense>
#include <vector>

#include "steamflow/common.hpp"

namespace steamflow {

/// Physical constants of the electro-mechanical valve actuator (Table 1).
struct ActuatorParams {
  double inductance_L = 1.0;   ///< coil inductance [H]
  double resistance_R = 5.0;   ///< coil resistance [ohm]
  double mass_m = 1.0;         ///< plunger mass [kg]
  double damper_D = 1.0;       ///< damping [N s/m]
  double spring_k = 2.0;       ///< spring constant [N/m]
  double relay_km = 0.25;      ///< force per ampere [N/A]
  double sensor_p = 3.0;       ///< flow-sensor sensitivity [1/s]
};

/// Rational transfer function in descending powers of s; strictly proper.
struct TransferFunction {
  std::vector<double> numerator;
  std::vector<double> denominator;
};

/// Continuous-time state-space realization (single input, single output).
struct StateSpace {
  Eigen::MatrixXd A;
  Eigen::VectorXd B;
  Eigen::RowVectorXd C;
  double D_term = 0.0;
};

/// Exact zero-order-hold discretization of a StateSpace, with mutable state.
/// One instance is confined to one simulation run.
class DiscretePlant {
 public:
  Eigen::MatrixXd Ad;
  Eigen::VectorXd Bd;
  Eigen::RowVectorXd C;
  double sample_time = 0.1;
  Eigen::VectorXd state;

  /// Current output C·state without advancing time.
  double output() const { return C.dot(state); }

  /// Advance one sample under constant input u; returns the new output.
  double step(double u);

  void reset() { state.setZero(); }
};

/// Expand (L s + R)(s + p)(m s^2 + D s + k) against the numerator p·k_m.
/// The convolution is carried out in double arithmetic, which is exact for
/// the integer/dyadic-rational parameters of Table 1.
TransferFunction build_transfer_function(const ActuatorParams& params);

/// Controllable canonical realization of a strictly proper transfer function.
StateSpace tf_to_state_space(const TransferFunction& tf);

/// Exact ZOH discretization: Ad = exp(A·Ts), Bd = ∫0..Ts exp(Aτ)dτ · B,
/// both obtained from one augmented matrix exponential.
DiscretePlant discretize(const StateSpace& ss, double sample_time);

/// Matrix exponential by scaling-and-squaring with a fixed-order Taylor
/// series (tolerance ~1e-15 on the scaled matrix).
Eigen::MatrixXd expm(const Eigen::MatrixXd& A);

/// Convenience: the paper's plant 0.75/(s^4+9s^3+25s^2+31s+30), discretized.
DiscretePlant make_paper_plant(double sample_time = 0.1);

}  // namespace steamflow
