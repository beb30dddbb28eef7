#include "steamflow/plant.hpp"

#include <cmath>

namespace steamflow {

namespace {

// Polynomial product, coefficients in descending powers.
std::vector<double> poly_mul(const std::vector<double>& a,
                             const std::vector<double>& b) {
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw ValidationError(std::string("ActuatorParams.") + name +
                          " must be strictly positive and finite");
}

}  // namespace

TransferFunction build_transfer_function(const ActuatorParams& p) {
  require_positive(p.inductance_L, "inductance_L");
  require_positive(p.resistance_R, "resistance_R");
  require_positive(p.mass_m, "mass_m");
  require_positive(p.damper_D, "damper_D");
  require_positive(p.spring_k, "spring_k");
  require_positive(p.sensor_p, "sensor_p");
  if (!(p.relay_km >= 0.0) || !std::isfinite(p.relay_km))
    throw ValidationError("ActuatorParams.relay_km must be finite and >= 0");

  TransferFunction tf;
  tf.numerator = {p.sensor_p * p.relay_km};
  // (L s + R) (s + p) (m s^2 + D s + k)
  tf.denominator =
      poly_mul(poly_mul({p.inductance_L, p.resistance_R}, {1.0, p.sensor_p}),
               {p.mass_m, p.damper_D, p.spring_k});
  return tf;
}

StateSpace tf_to_state_space(const TransferFunction& tf) {
  if (tf.denominator.empty() || tf.denominator.front() == 0.0)
    throw ValidationError("transfer function: leading denominator coefficient is zero");
  if (tf.numerator.size() >= tf.denominator.size())
    throw ValidationError("transfer function must be strictly proper");

  const double lead = tf.denominator.front();
  const int n = static_cast<int>(tf.denominator.size()) - 1;

  // Monic denominator s^n + a1 s^(n-1) + ... + an, numerator padded to length n.
  std::vector<double> a(n), b(n, 0.0);
  for (int i = 0; i < n; ++i) a[i] = tf.denominator[i + 1] / lead;
  const int offset = n - static_cast<int>(tf.numerator.size());
  for (std::size_t i = 0; i < tf.numerator.size(); ++i)
    b[offset + i] = tf.numerator[i] / lead;

  StateSpace ss;
  ss.A = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) ss.A(i, i + 1) = 1.0;
  for (int j = 0; j < n; ++j) ss.A(n - 1, j) = -a[n - 1 - j];
  ss.B = Eigen::VectorXd::Zero(n);
  ss.B(n - 1) = 1.0;
  ss.C = Eigen::RowVectorXd::Zero(n);
  for (int j = 0; j < n; ++j) ss.C(j) = b[n - 1 - j];
  ss.D_term = 0.0;
  return ss;
}

Eigen::MatrixXd expm(const Eigen::MatrixXd& A) {
  const int n = static_cast<int>(A.rows());
  const double norm = A.cwiseAbs().rowwise().sum().maxCoeff();  // inf-norm
  int squarings = 0;
  if (norm > 0.5) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    if (squarings > 60) squarings = 60;
  }
  const Eigen::MatrixXd As = A / std::ldexp(1.0, squarings);

  // Taylor series to order 18: remainder < 1e-19 for ||As|| <= 0.5.
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
  for (int k = 1; k <= 18; ++k) {
    term = (term * As) / static_cast<double>(k);
    result += term;
  }
  for (int s = 0; s < squarings; ++s) result = result * result;
  return result;
}

DiscretePlant discretize(const StateSpace& ss, double sample_time) {
  if (!(sample_time > 0.0))
    throw ValidationError("discretize: sample_time must be positive");
  const int n = static_cast<int>(ss.A.rows());

  // Van Loan augmented matrix: exp([[A, B], [0, 0]]·Ts) = [[Ad, Bd], [0, I]].
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n + 1, n + 1);
  M.topLeftCorner(n, n) = ss.A;
  M.topRightCorner(n, 1) = ss.B;
  const Eigen::MatrixXd E = expm(M * sample_time);

  DiscretePlant plant;
  plant.Ad = E.topLeftCorner(n, n);
  plant.Bd = E.topRightCorner(n, 1);
  plant.C = ss.C;
  plant.sample_time = sample_time;
  plant.state = Eigen::VectorXd::Zero(n);
  return plant;
}

double DiscretePlant::step(double u) {
  if (!std::isfinite(u))
    throw ValidationError("plant_step: input u is not finite");
  state = Ad * state + Bd * u;
  return C.dot(state);
}

DiscretePlant make_paper_plant(double sample_time) {
  return discretize(tf_to_state_space(build_transfer_function(ActuatorParams{})),
                    sample_time);
}

}  // namespace steamflow
