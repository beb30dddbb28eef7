#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "steamflow/neural.hpp"

using namespace steamflow;

TEST_CASE("TappedDelayLine: newest-first order, zero padding, reset") {
  TappedDelayLine tdl(3);
  CHECK(tdl.read() == std::vector<double>{0, 0, 0});
  tdl.push(1.0);
  tdl.push(2.0);
  CHECK(tdl.read() == std::vector<double>{2, 1, 0});
  tdl.push(3.0);
  tdl.push(4.0);
  CHECK(tdl.read() == std::vector<double>{4, 3, 2});
  tdl.reset();
  CHECK(tdl.read() == std::vector<double>{0, 0, 0});
  CHECK_THROWS_AS(TappedDelayLine(0), ValidationError);
}

TEST_CASE("Mlp: init bounds, determinism, and forward structure") {
  Rng rng1(5), rng2(5);
  const Mlp a = Mlp::create({3, 4, 1}, rng1);
  const Mlp b = Mlp::create({3, 4, 1}, rng2);
  CHECK(a.get_params() == b.get_params());  // bitwise deterministic
  CHECK(a.num_params() == 3 * 4 + 4 + 4 * 1 + 1);
  const double bound0 = 1.0 / std::sqrt(3.0);
  for (int i = 0; i < 4; ++i) {
    CHECK(a.biases[0](i) == 0.0);
    for (int j = 0; j < 3; ++j) CHECK(std::abs(a.weights[0](i, j)) <= bound0);
  }

  // Hand-built single neuron: y = 2*tanh(0.5x + 0.1) - 1.
  Mlp net;
  net.layer_sizes = {1, 1, 1};
  net.weights = {Eigen::MatrixXd::Constant(1, 1, 0.5),
                 Eigen::MatrixXd::Constant(1, 1, 2.0)};
  net.biases = {Eigen::VectorXd::Constant(1, 0.1),
                Eigen::VectorXd::Constant(1, -1.0)};
  const double x = 0.7;
  const double y = net.forward(Eigen::VectorXd::Constant(1, x))(0);
  CHECK(y == doctest::Approx(2.0 * std::tanh(0.5 * x + 0.1) - 1.0).epsilon(1e-15));
}

TEST_CASE("Mlp: get/set params round trip and duplicate evaluation") {
  Rng rng(9);
  Mlp net = Mlp::create({2, 5, 3, 1}, rng);
  const Eigen::VectorXd theta = net.get_params();
  Rng rng2(17);
  Mlp other = Mlp::create({2, 5, 3, 1}, rng2);
  other.set_params(theta);
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(2, -0.3, 0.8);
  CHECK((net.forward(x) - other.forward(x)).cwiseAbs().maxCoeff() == 0.0);
  // Evaluating twice gives bit-identical results (pure function).
  CHECK(net.forward(x) == net.forward(x));
  CHECK_THROWS_AS(net.set_params(Eigen::VectorXd::Zero(3)), ValidationError);
}

TEST_CASE("mlp_gradient matches central finite differences on 20 seeds") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    Mlp net = Mlp::create({3, 6, 2}, rng);
    Eigen::VectorXd x(3), target(2);
    for (int i = 0; i < 3; ++i) x(i) = rng.uniform(-1.0, 1.0);
    for (int i = 0; i < 2; ++i) target(i) = rng.uniform(-1.0, 1.0);

    const Eigen::VectorXd grad = mlp_gradient(net, x, target);
    const Eigen::VectorXd theta = net.get_params();
    const double h = 1e-6;
    double max_err = 0.0;
    for (int p = 0; p < net.num_params(); ++p) {
      Eigen::VectorXd tp = theta, tm = theta;
      tp(p) += h;
      tm(p) -= h;
      Mlp np = net, nm = net;
      np.set_params(tp);
      nm.set_params(tm);
      const double lp = 0.5 * (np.forward(x) - target).squaredNorm();
      const double lm = 0.5 * (nm.forward(x) - target).squaredNorm();
      max_err = std::max(max_err, std::abs(grad(p) - (lp - lm) / (2 * h)));
    }
    CAPTURE(seed);
    CHECK(max_err < 1e-5);
  }
}

TEST_CASE("mlp_gradient: hand-derived linear neuron") {
  // Linear "network" with no hidden layer: y = w*x + b.
  Mlp net;
  net.layer_sizes = {1, 1};
  net.weights = {Eigen::MatrixXd::Constant(1, 1, 1.0)};
  net.biases = {Eigen::VectorXd::Zero(1)};
  // x = 1, target = 0: L = ½(w·1 + b)², dL/dw = (w+b)·1 = 1, dL/db = 1.
  const Eigen::VectorXd g = mlp_gradient(net, Eigen::VectorXd::Ones(1),
                                         Eigen::VectorXd::Zero(1));
  CHECK(g(0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(g(1) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("forward_with_jacobians: input Jacobian matches finite differences") {
  Rng rng(33);
  const Mlp net = Mlp::create({4, 5, 2}, rng);
  Eigen::VectorXd x(4);
  for (int i = 0; i < 4; ++i) x(i) = rng.uniform(-1.0, 1.0);
  Eigen::MatrixXd dp, di;
  const Eigen::VectorXd y = net.forward_with_jacobians(x, &dp, &di);
  CHECK((y - net.forward(x)).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(di.rows() == 2);
  REQUIRE(di.cols() == 4);
  REQUIRE(dp.rows() == 2);
  REQUIRE(dp.cols() == net.num_params());
  const double h = 1e-6;
  for (int j = 0; j < 4; ++j) {
    Eigen::VectorXd xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    const Eigen::VectorXd fd = (net.forward(xp) - net.forward(xm)) / (2 * h);
    CHECK((di.col(j) - fd).cwiseAbs().maxCoeff() < 1e-6);
  }
  // Parameter Jacobian consistency with mlp_gradient: grad = J^T (y - t).
  Eigen::VectorXd target(2);
  target << 0.3, -0.2;
  const Eigen::VectorXd grad = mlp_gradient(net, x, target);
  CHECK((grad - dp.transpose() * (y - target)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("train: exact fit stays exact, loss never increases") {
  // Targets generated by the network itself: initial loss 0, must stay 0.
  Rng rng(2);
  Mlp net = Mlp::create({2, 4, 1}, rng);
  std::vector<Eigen::VectorXd> inputs, targets;
  for (int i = 0; i < 10; ++i) {
    Eigen::VectorXd x(2);
    x << rng.uniform(-1, 1), rng.uniform(-1, 1);
    inputs.push_back(x);
    targets.push_back(net.forward(x));
  }
  TrainConfig cfg;
  cfg.epochs = 10;
  const TrainResult res = train(net, inputs, targets, cfg);
  for (double l : res.loss_history) CHECK(l <= 1e-20);
}

TEST_CASE("train: fits y = 0.5x to MSE < 1e-4 with both algorithms") {
  std::vector<Eigen::VectorXd> inputs, targets;
  for (int i = 0; i <= 20; ++i) {
    const double x = -1.0 + 0.1 * i;
    inputs.push_back(Eigen::VectorXd::Constant(1, x));
    targets.push_back(Eigen::VectorXd::Constant(1, 0.5 * x));
  }
  for (auto algo : {TrainAlgorithm::levenberg_marquardt,
                    TrainAlgorithm::gradient_momentum}) {
    Rng rng(4);
    Mlp net = Mlp::create({1, 6, 1}, rng);
    TrainConfig cfg;
    cfg.seed = 4;
    cfg.algorithm = algo;
    cfg.epochs = (algo == TrainAlgorithm::levenberg_marquardt) ? 65 : 4000;
    const TrainResult res = train(net, inputs, targets, cfg);
    CAPTURE(static_cast<int>(algo));
    CHECK(res.loss_history.back() < 1e-4);
    // Monotone non-increasing accepted loss.
    for (std::size_t i = 1; i < res.loss_history.size(); ++i)
      CHECK(res.loss_history[i] <= res.loss_history[i - 1] + 1e-15);
    CHECK(res.loss_history.back() <= res.loss_history.front());
  }
}

TEST_CASE("train: deterministic bitwise across repeated runs") {
  std::vector<Eigen::VectorXd> inputs, targets;
  Rng data_rng(6);
  for (int i = 0; i < 30; ++i) {
    const double x = data_rng.uniform(-1, 1);
    inputs.push_back(Eigen::VectorXd::Constant(1, x));
    targets.push_back(Eigen::VectorXd::Constant(1, std::sin(2 * x)));
  }
  TrainConfig cfg;
  cfg.epochs = 20;
  auto make = [] {
    Rng rng(12);
    return Mlp::create({1, 5, 1}, rng);
  };
  const TrainResult r1 = train(make(), inputs, targets, cfg);
  const TrainResult r2 = train(make(), inputs, targets, cfg);
  CHECK(r1.net.get_params() == r2.net.get_params());
  CHECK(r1.loss_history == r2.loss_history);
}

TEST_CASE("lm_minimize: quadratic residuals converge to the exact optimum") {
  // residuals r = [p0 - 3, 2(p1 + 1)]; unique optimum (3, -1).
  LmProblem prob;
  prob.residuals = [](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(2);
    r << p(0) - 3.0, 2.0 * (p(1) + 1.0);
    return r;
  };
  prob.jacobian = [](const Eigen::VectorXd&) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2, 2);
    J(0, 0) = 1.0;
    J(1, 1) = 2.0;
    return J;
  };
  const LmResult res = lm_minimize(prob, Eigen::VectorXd::Zero(2), LmOptions{});
  CHECK(std::abs(res.params(0) - 3.0) < 1e-8);
  CHECK(std::abs(res.params(1) + 1.0) < 1e-8);
  for (std::size_t i = 1; i < res.loss_history.size(); ++i)
    CHECK(res.loss_history[i] <= res.loss_history[i - 1] + 1e-15);
}

TEST_CASE("lm_minimize: Rosenbrock-style nonlinear residuals decrease") {
  LmProblem prob;
  prob.residuals = [](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(2);
    r << 10.0 * (p(1) - p(0) * p(0)), 1.0 - p(0);
    return r;
  };
  prob.jacobian = [](const Eigen::VectorXd& p) {
    Eigen::MatrixXd J(2, 2);
    J << -20.0 * p(0), 10.0, -1.0, 0.0;
    return J;
  };
  Eigen::VectorXd init(2);
  init << -1.2, 1.0;
  LmOptions opts;
  opts.max_iters = 200;
  const LmResult res = lm_minimize(prob, init, opts);
  CHECK(std::abs(res.params(0) - 1.0) < 1e-6);
  CHECK(std::abs(res.params(1) - 1.0) < 1e-6);
}

TEST_CASE("save_mlp/load_mlp: exact round trip including extras") {
  Rng rng(21);
  const Mlp net = Mlp::create({4, 6, 1}, rng);
  std::map<std::string, std::vector<double>> extras{
      {"norm_u", {1.5, 0.5}}, {"norm_y", {0.02512345678901234, 1e-3}}};
  std::stringstream ss;
  save_mlp(ss, net, extras);
  std::map<std::string, std::vector<double>> extras_in;
  const Mlp back = load_mlp(ss, &extras_in);
  CHECK(back.layer_sizes == net.layer_sizes);
  CHECK(back.get_params() == net.get_params());  // bit-exact via %.17g
  CHECK(extras_in == extras);
}

TEST_CASE("load_mlp: malformed input rejected") {
  std::stringstream ss("not a network");
  CHECK_THROWS_AS(load_mlp(ss), ValidationError);
}
