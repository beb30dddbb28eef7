#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>

#include "doctest.h"
#include "steamflow/plant.hpp"

using namespace steamflow;

namespace {

// Independent oracle: y(t) for a unit step from zero state via complex
// eigendecomposition, x(t) = V diag((e^{λt}-1)/λ) V^{-1} B.
double modal_step_response(const StateSpace& ss, double t) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(ss.A);
  const Eigen::MatrixXcd V = es.eigenvectors();
  const Eigen::VectorXcd lambda = es.eigenvalues();
  const Eigen::VectorXcd w = V.partialPivLu().solve(ss.B.cast<std::complex<double>>());
  std::complex<double> y = 0.0;
  for (int i = 0; i < lambda.size(); ++i) {
    const std::complex<double> phi = (std::exp(lambda(i) * t) - 1.0) / lambda(i);
    y += (ss.C.cast<std::complex<double>>() * V.col(i))(0) * phi * w(i);
  }
  return y.real();
}

// Independent oracle: RK4 integration of x' = Ax + Bu with constant u.
Eigen::VectorXd rk4_hold(const StateSpace& ss, Eigen::VectorXd x, double u,
                         double T, double h) {
  const auto f = [&](const Eigen::VectorXd& xv) -> Eigen::VectorXd {
    return ss.A * xv + ss.B * u;
  };
  const long n = std::lround(T / h);
  for (long i = 0; i < n; ++i) {
    const Eigen::VectorXd k1 = f(x);
    const Eigen::VectorXd k2 = f(x + 0.5 * h * k1);
    const Eigen::VectorXd k3 = f(x + 0.5 * h * k2);
    const Eigen::VectorXd k4 = f(x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return x;
}

std::complex<double> tf_eval(const TransferFunction& tf, std::complex<double> s) {
  std::complex<double> num = 0.0, den = 0.0;
  for (double c : tf.numerator) num = num * s + c;
  for (double c : tf.denominator) den = den * s + c;
  return num / den;
}

}  // namespace

TEST_CASE("build_transfer_function: Table 1 parameters give the paper's plant") {
  const TransferFunction tf = build_transfer_function(ActuatorParams{});
  REQUIRE(tf.numerator.size() == 1);
  CHECK(tf.numerator[0] == 0.75);  // integer-exact
  REQUIRE(tf.denominator.size() == 5);
  CHECK(tf.denominator[0] == 1.0);
  CHECK(tf.denominator[1] == 9.0);
  CHECK(tf.denominator[2] == 25.0);
  CHECK(tf.denominator[3] == 31.0);
  CHECK(tf.denominator[4] == 30.0);
}

TEST_CASE("build_transfer_function: zero-gain relay zeroes the numerator") {
  ActuatorParams p;
  p.relay_km = 0.0;
  const TransferFunction tf = build_transfer_function(p);
  CHECK(tf.numerator[0] == 0.0);
  CHECK(tf.denominator == build_transfer_function(ActuatorParams{}).denominator);
}

TEST_CASE("build_transfer_function: symbolic expansion oracle") {
  // (2s+4)(s+1)(s^2+2s+1) = 2s^4 + 10s^3 + 18s^2 + 14s + 4 (expanded by the
  // polynomial-multiplication oracle; verified against tf_eval spot checks).
  ActuatorParams p;
  p.inductance_L = 2;
  p.resistance_R = 4;
  p.mass_m = 1;
  p.damper_D = 2;
  p.spring_k = 1;
  p.relay_km = 1;
  p.sensor_p = 1;
  const TransferFunction tf = build_transfer_function(p);
  CHECK(tf.numerator[0] == 1.0);
  CHECK(tf.denominator == std::vector<double>{2, 10, 18, 14, 4});
  // Spot check against direct factor evaluation at s = 2.
  const std::complex<double> s{2.0, 0.0};
  const std::complex<double> expected =
      1.0 / ((2.0 * s + 4.0) * (s + 1.0) * (s * s + 2.0 * s + 1.0));
  CHECK(std::abs(tf_eval(tf, s) - expected) < 1e-15);
}

TEST_CASE("build_transfer_function: invalid parameters name the field") {
  ActuatorParams p;
  p.mass_m = 0.0;
  CHECK_THROWS_WITH_AS(build_transfer_function(p),
                       doctest::Contains("mass_m"), ValidationError);
  p = ActuatorParams{};
  p.inductance_L = -1.0;
  CHECK_THROWS_WITH_AS(build_transfer_function(p),
                       doctest::Contains("inductance_L"), ValidationError);
}

TEST_CASE("tf_to_state_space: first-order canonical form") {
  const StateSpace ss = tf_to_state_space({{1.0}, {1.0, 1.0}});
  CHECK(ss.A(0, 0) == -1.0);
  CHECK(ss.B(0) == 1.0);
  CHECK(ss.C(0) == 1.0);
  CHECK(ss.D_term == 0.0);
}

TEST_CASE("tf_to_state_space: paper plant companion form and frequency response") {
  const TransferFunction tf = build_transfer_function(ActuatorParams{});
  const StateSpace ss = tf_to_state_space(tf);
  REQUIRE(ss.A.rows() == 4);
  CHECK(ss.A(3, 0) == -30.0);
  CHECK(ss.A(3, 1) == -31.0);
  CHECK(ss.A(3, 2) == -25.0);
  CHECK(ss.A(3, 3) == -9.0);
  CHECK(ss.C(0) == 0.75);
  CHECK(ss.C(1) == 0.0);
  CHECK(ss.C(2) == 0.0);
  CHECK(ss.C(3) == 0.0);

  for (double w : {0.1, 1.0, 10.0}) {
    const std::complex<double> jw{0.0, w};
    const Eigen::MatrixXcd M =
        jw * Eigen::MatrixXcd::Identity(4, 4) - ss.A.cast<std::complex<double>>();
    const std::complex<double> resp =
        (ss.C.cast<std::complex<double>>() *
         M.partialPivLu().solve(ss.B.cast<std::complex<double>>()))(0);
    CHECK(std::abs(resp - tf_eval(tf, jw)) < 1e-12);
  }
}

TEST_CASE("tf_to_state_space: DC gain of the paper plant is 0.025") {
  const StateSpace ss =
      tf_to_state_space(build_transfer_function(ActuatorParams{}));
  const double dc = (ss.C * (-ss.A).partialPivLu().solve(ss.B))(0);
  CHECK(dc == doctest::Approx(0.025).epsilon(1e-12));
}

TEST_CASE("tf_to_state_space: improper transfer function rejected") {
  CHECK_THROWS_AS(tf_to_state_space({{1.0, 0.0}, {1.0, 1.0}}), ValidationError);
  CHECK_THROWS_AS(tf_to_state_space({{1.0}, {0.0, 1.0}}), ValidationError);
}

TEST_CASE("discretize: integrator and scalar closed forms") {
  StateSpace ss;
  ss.A = Eigen::MatrixXd::Zero(1, 1);
  ss.B = Eigen::VectorXd::Ones(1);
  ss.C = Eigen::RowVectorXd::Ones(1);
  const DiscretePlant integ = discretize(ss, 0.1);
  CHECK(integ.Ad(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(integ.Bd(0) == doctest::Approx(0.1).epsilon(1e-14));

  ss.A(0, 0) = -1.0;
  const DiscretePlant lag = discretize(ss, 0.1);
  CHECK(lag.Ad(0, 0) == doctest::Approx(std::exp(-0.1)).epsilon(1e-14));
  CHECK(lag.Bd(0) == doctest::Approx(1.0 - std::exp(-0.1)).epsilon(1e-13));

  CHECK_THROWS_AS(discretize(ss, 0.0), ValidationError);
}

TEST_CASE("discretize: paper plant settles to its DC gain") {
  DiscretePlant plant = make_paper_plant(0.1);
  double y = 0.0;
  for (int k = 0; k < 600; ++k) y = plant.step(1.0);
  CHECK(y == doctest::Approx(0.025).epsilon(4e-5));  // 0.025 ± 1e-6
  CHECK(std::abs(y - 0.025) < 1e-6);
}

TEST_CASE("plant_step: zero state, zero input stays zero; non-finite rejected") {
  DiscretePlant plant = make_paper_plant(0.1);
  for (int k = 0; k < 100; ++k) CHECK(plant.step(0.0) == 0.0);
  CHECK_THROWS_AS(plant.step(std::nan("")), ValidationError);
}

TEST_CASE("plant_step: one step matches high-resolution RK4 within 1e-8") {
  const StateSpace ss =
      tf_to_state_space(build_transfer_function(ActuatorParams{}));
  DiscretePlant plant = make_paper_plant(0.1);
  const double y = plant.step(1.0);
  const Eigen::VectorXd x_rk4 =
      rk4_hold(ss, Eigen::VectorXd::Zero(4), 1.0, 0.1, 1e-4);
  CHECK(std::abs(y - ss.C.dot(x_rk4)) < 1e-8);
}

TEST_CASE("plant_step: 600-step unit step matches the modal oracle") {
  const StateSpace ss =
      tf_to_state_space(build_transfer_function(ActuatorParams{}));
  DiscretePlant plant = make_paper_plant(0.1);
  double max_err = 0.0;
  for (int k = 1; k <= 600; ++k) {
    const double y = plant.step(1.0);
    max_err = std::max(max_err, std::abs(y - modal_step_response(ss, 0.1 * k)));
  }
  CHECK(max_err < 1e-6);

  // Poles of the factored denominator: -5, -3, -0.5 ± j1.3229.
  Eigen::EigenSolver<Eigen::MatrixXd> es(ss.A);
  std::vector<double> re;
  for (int i = 0; i < 4; ++i) re.push_back(es.eigenvalues()(i).real());
  std::sort(re.begin(), re.end());
  CHECK(re[0] == doctest::Approx(-5.0).epsilon(1e-9));
  CHECK(re[1] == doctest::Approx(-3.0).epsilon(1e-9));
  CHECK(re[2] == doctest::Approx(-0.5).epsilon(1e-9));
  CHECK(re[3] == doctest::Approx(-0.5).epsilon(1e-9));
}

TEST_CASE("linearity and superposition from zero state") {
  DiscretePlant p1 = make_paper_plant(0.1);
  DiscretePlant p2 = make_paper_plant(0.1);
  DiscretePlant p3 = make_paper_plant(0.1);
  Rng rng(7);
  for (int k = 0; k < 200; ++k) {
    const double u1 = rng.uniform(-2.0, 2.0);
    const double u2 = rng.uniform(-2.0, 2.0);
    const double y1 = p1.step(u1);
    const double y2 = p2.step(u2);
    const double y12 = p3.step(u1 + u2);
    CHECK(std::abs(y12 - (y1 + y2)) <= 1e-10 * std::max(1.0, std::abs(y12)));
  }
  // Scaling: response to α·u equals α·response(u).
  DiscretePlant pa = make_paper_plant(0.1);
  DiscretePlant pb = make_paper_plant(0.1);
  Rng rng2(8);
  for (int k = 0; k < 200; ++k) {
    const double u = rng2.uniform(-1.0, 1.0);
    const double ya = pa.step(u);
    const double yb = pb.step(3.5 * u);
    CHECK(std::abs(yb - 3.5 * ya) <= 1e-10 * std::max(1.0, std::abs(yb)));
  }
}

TEST_CASE("stability: bounded input keeps output bounded over 1e5 steps") {
  DiscretePlant plant = make_paper_plant(0.1);
  Rng rng(3);
  double max_abs = 0.0;
  for (long k = 0; k < 100000; ++k)
    max_abs = std::max(max_abs, std::abs(plant.step(rng.uniform(-200.0, 200.0))));
  CHECK(max_abs < 50.0);  // DC gain 0.025 * 200 = 5 plus transients
}

TEST_CASE("ZOH matches RK4 trajectories for 10 random parameter sets") {
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    ActuatorParams p;
    p.inductance_L = rng.uniform(0.5, 2.0);
    p.resistance_R = rng.uniform(1.0, 8.0);
    p.mass_m = rng.uniform(0.5, 2.0);
    p.damper_D = rng.uniform(0.5, 3.0);
    p.spring_k = rng.uniform(0.5, 4.0);
    p.relay_km = rng.uniform(0.1, 1.0);
    p.sensor_p = rng.uniform(0.5, 4.0);
    const StateSpace ss = tf_to_state_space(build_transfer_function(p));
    DiscretePlant plant = discretize(ss, 0.1);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(4);
    double max_err = 0.0;
    for (int k = 0; k < 100; ++k) {
      const double y = plant.step(1.0);
      x = rk4_hold(ss, x, 1.0, 0.1, 0.1 / 100.0);  // substep Ts/100
      max_err = std::max(max_err, std::abs(y - ss.C.dot(x)));
    }
    CAPTURE(trial);
    CHECK(max_err < 1e-6);
  }
}
