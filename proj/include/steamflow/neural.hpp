#pragma once

#include <Eigen/Dense>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "steamflow/common.hpp"

namespace steamflow {

/// Fixed-depth buffer holding the most recent values, newest first,
/// zero-padded before warm-up.
class TappedDelayLine {
 public:
  explicit TappedDelayLine(int depth) : buffer_(depth, 0.0) {
    if (depth < 1) throw ValidationError("TappedDelayLine depth must be >= 1");
  }

  void push(double v) {
    for (std::size_t i = buffer_.size() - 1; i > 0; --i)
      buffer_[i] = buffer_[i - 1];
    buffer_[0] = v;
  }

  /// [newest, ..., oldest]; length == depth always.
  const std::vector<double>& read() const { return buffer_; }

  int depth() const { return static_cast<int>(buffer_.size()); }
  void reset() { std::fill(buffer_.begin(), buffer_.end(), 0.0); }

 private:
  std::vector<double> buffer_;
};

/// Feed-forward perceptron: tanh hidden layers, linear output.
struct Mlp {
  std::vector<int> layer_sizes;           // input, hidden..., output
  std::vector<Eigen::MatrixXd> weights;   // weights[l]: sizes[l+1] x sizes[l]
  std::vector<Eigen::VectorXd> biases;    // biases[l]: sizes[l+1]

  /// Seeded init: weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)],
  /// biases zero.
  static Mlp create(const std::vector<int>& sizes, Rng& rng);

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;

  int num_params() const;
  Eigen::VectorXd get_params() const;
  void set_params(const Eigen::VectorXd& theta);

  /// Full Jacobians for scalar- or vector-output nets.
  /// d_params: out_dim x num_params (same flattening as get_params);
  /// d_inputs: out_dim x in_dim.  Either pointer may be null.
  Eigen::VectorXd forward_with_jacobians(const Eigen::VectorXd& x,
                                         Eigen::MatrixXd* d_params,
                                         Eigen::MatrixXd* d_inputs) const;
};

/// Exact reverse-mode gradient of ½‖forward(x) − target‖² w.r.t. all
/// parameters, flattened in get_params order.
Eigen::VectorXd mlp_gradient(const Mlp& net, const Eigen::VectorXd& x,
                             const Eigen::VectorXd& target);

enum class TrainAlgorithm { levenberg_marquardt, gradient_momentum };

struct TrainConfig {
  int epochs = 65;                 // Table 2 epoch budget
  std::uint64_t seed = 0;
  TrainAlgorithm algorithm = TrainAlgorithm::levenberg_marquardt;
  double lm_lambda_init = 1e-2;
  double lr = 0.05;
  double momentum = 0.9;
};

struct TrainResult {
  Mlp net;
  std::vector<double> loss_history;  // MSE after each epoch, length <= epochs
};

/// Batch supervised training; deterministic, final MSE <= initial MSE.
TrainResult train(Mlp net, const std::vector<Eigen::VectorXd>& inputs,
                  const std::vector<Eigen::VectorXd>& targets,
                  const TrainConfig& cfg);

/// Generic damped least-squares (Levenberg-Marquardt) minimizer of
/// mean(residuals²); shared by identification and controller training.
struct LmProblem {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> residuals;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jacobian;
};

struct LmOptions {
  int max_iters = 65;
  double lambda_init = 1e-2;
  double lambda_decrease = 0.3;
  double lambda_increase = 3.0;
  int max_inner = 25;  // damping retries per outer iteration
};

struct LmResult {
  Eigen::VectorXd params;
  std::vector<double> loss_history;  // mean squared residual per accepted step
};

LmResult lm_minimize(const LmProblem& problem, Eigen::VectorXd init,
                     const LmOptions& opts);

/// Plain-text persistence with named sections (layer sizes, row-major weight
/// arrays, biases, extra named constant vectors such as normalization
/// parameters).  Doubles serialized with 17 significant digits; round-trip
/// exact.
void save_mlp(std::ostream& os, const Mlp& net,
              const std::map<std::string, std::vector<double>>& extras = {});
Mlp load_mlp(std::istream& is,
             std::map<std::string, std::vector<double>>* extras = nullptr);

}  // namespace steamflow
