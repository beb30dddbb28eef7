#include "steamflow/neural.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace steamflow {

Mlp Mlp::create(const std::vector<int>& sizes, Rng& rng) {
  if (sizes.size() < 2) throw ValidationError("Mlp needs at least two layers");
  for (int s : sizes)
    if (s < 1) throw ValidationError("Mlp layer sizes must be >= 1");

  Mlp net;
  net.layer_sizes = sizes;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes[l]));
    Eigen::MatrixXd w(sizes[l + 1], sizes[l]);
    for (int i = 0; i < w.rows(); ++i)
      for (int j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-bound, bound);
    net.weights.push_back(std::move(w));
    net.biases.push_back(Eigen::VectorXd::Zero(sizes[l + 1]));
  }
  return net;
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& x) const {
  if (x.size() != layer_sizes.front())
    throw ValidationError("mlp_forward: input dimension mismatch");
  Eigen::VectorXd a = x;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    a = weights[l] * a + biases[l];
    if (l + 1 < weights.size()) a = a.array().tanh();
  }
  return a;
}

int Mlp::num_params() const {
  int n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l)
    n += static_cast<int>(weights[l].size() + biases[l].size());
  return n;
}

Eigen::VectorXd Mlp::get_params() const {
  Eigen::VectorXd theta(num_params());
  int k = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    for (int i = 0; i < weights[l].rows(); ++i)
      for (int j = 0; j < weights[l].cols(); ++j) theta(k++) = weights[l](i, j);
    for (int i = 0; i < biases[l].size(); ++i) theta(k++) = biases[l](i);
  }
  return theta;
}

void Mlp::set_params(const Eigen::VectorXd& theta) {
  if (theta.size() != num_params())
    throw ValidationError("set_params: parameter vector size mismatch");
  int k = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    for (int i = 0; i < weights[l].rows(); ++i)
      for (int j = 0; j < weights[l].cols(); ++j) weights[l](i, j) = theta(k++);
    for (int i = 0; i < biases[l].size(); ++i) biases[l](i) = theta(k++);
  }
}

Eigen::VectorXd Mlp::forward_with_jacobians(const Eigen::VectorXd& x,
                                            Eigen::MatrixXd* d_params,
                                            Eigen::MatrixXd* d_inputs) const {
  if (x.size() != layer_sizes.front())
    throw ValidationError("mlp forward: input dimension mismatch");
  const std::size_t L = weights.size();

  // Forward pass, caching post-activation values a[l] (a[0] = input).
  std::vector<Eigen::VectorXd> a(L + 1);
  a[0] = x;
  for (std::size_t l = 0; l < L; ++l) {
    a[l + 1] = weights[l] * a[l] + biases[l];
    if (l + 1 < L) a[l + 1] = a[l + 1].array().tanh();
  }
  const Eigen::VectorXd& y = a[L];
  if (d_params == nullptr && d_inputs == nullptr) return y;

  const int out_dim = static_cast<int>(y.size());
  if (d_params) d_params->resize(out_dim, num_params());
  if (d_inputs) d_inputs->resize(out_dim, static_cast<int>(x.size()));

  // One reverse sweep per output component.
  for (int o = 0; o < out_dim; ++o) {
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(out_dim);
    delta(o) = 1.0;
    int k = num_params();
    for (std::size_t li = L; li-- > 0;) {
      if (d_params) {
        k -= static_cast<int>(weights[li].size() + biases[li].size());
        int kk = k;
        for (int i = 0; i < weights[li].rows(); ++i)
          for (int j = 0; j < weights[li].cols(); ++j)
            (*d_params)(o, kk++) = delta(i) * a[li](j);
        for (int i = 0; i < biases[li].size(); ++i)
          (*d_params)(o, kk++) = delta(i);
      }
      delta = weights[li].transpose() * delta;
      if (li > 0)  // a[li] is a tanh activation
        delta = delta.cwiseProduct(
            (1.0 - a[li].array().square()).matrix());
    }
    if (d_inputs) d_inputs->row(o) = delta.transpose();
  }
  return y;
}

Eigen::VectorXd mlp_gradient(const Mlp& net, const Eigen::VectorXd& x,
                             const Eigen::VectorXd& target) {
  if (target.size() != net.layer_sizes.back())
    throw ValidationError("mlp_gradient: target dimension mismatch");
  Eigen::MatrixXd jac;
  const Eigen::VectorXd y = net.forward_with_jacobians(x, &jac, nullptr);
  return jac.transpose() * (y - target);
}

LmResult lm_minimize(const LmProblem& problem, Eigen::VectorXd init,
                     const LmOptions& opts) {
  if (!(opts.lambda_init > 0.0))
    throw ValidationError("lm_minimize: lambda_init must be positive");
  const int n = static_cast<int>(init.size());

  Eigen::VectorXd theta = std::move(init);
  Eigen::VectorXd r = problem.residuals(theta);
  double loss = r.squaredNorm() / static_cast<double>(r.size());
  double lambda = opts.lambda_init;

  LmResult result;
  for (int it = 0; it < opts.max_iters; ++it) {
    const Eigen::MatrixXd J = problem.jacobian(theta);
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * r;

    bool accepted = false;
    for (int inner = 0; inner < opts.max_inner; ++inner) {
      Eigen::MatrixXd M = JtJ;
      M.diagonal().array() += lambda;
      const Eigen::VectorXd step = M.ldlt().solve(g);
      const Eigen::VectorXd candidate = theta - step;
      const Eigen::VectorXd r2 = problem.residuals(candidate);
      const double loss2 = r2.squaredNorm() / static_cast<double>(r2.size());
      if (std::isfinite(loss2) && loss2 < loss) {
        theta = candidate;
        r = r2;
        loss = loss2;
        lambda = std::max(lambda * opts.lambda_decrease, 1e-12);
        accepted = true;
        break;
      }
      lambda *= opts.lambda_increase;
    }
    if (!accepted) break;  // stuck at a (local) minimum
    result.loss_history.push_back(loss);
    if (loss < 1e-30 || static_cast<int>(n) == 0) break;
  }
  result.params = theta;
  return result;
}

namespace {

void check_dataset(const std::vector<Eigen::VectorXd>& inputs,
                   const std::vector<Eigen::VectorXd>& targets,
                   const Mlp& net) {
  if (inputs.empty() || inputs.size() != targets.size())
    throw ValidationError("train: dataset empty or inputs/targets mismatched");
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].size() != net.layer_sizes.front() ||
        targets[i].size() != net.layer_sizes.back())
      throw ValidationError("train: sample dimension mismatch");
    if (!inputs[i].allFinite() || !targets[i].allFinite())
      throw ValidationError("train: dataset contains non-finite values");
  }
}

double dataset_mse(const Mlp& net, const std::vector<Eigen::VectorXd>& inputs,
                   const std::vector<Eigen::VectorXd>& targets) {
  double sum = 0.0;
  long count = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    sum += (net.forward(inputs[i]) - targets[i]).squaredNorm();
    count += targets[i].size();
  }
  return sum / static_cast<double>(count);
}

}  // namespace

TrainResult train(Mlp net, const std::vector<Eigen::VectorXd>& inputs,
                  const std::vector<Eigen::VectorXd>& targets,
                  const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw ValidationError("train: epochs must be >= 1");
  check_dataset(inputs, targets, net);
  const int out_dim = net.layer_sizes.back();
  const long n_res = static_cast<long>(inputs.size()) * out_dim;

  TrainResult result;
  if (cfg.algorithm == TrainAlgorithm::levenberg_marquardt) {
    Mlp work = net;
    LmProblem problem;
    problem.residuals = [&](const Eigen::VectorXd& theta) {
      work.set_params(theta);
      Eigen::VectorXd r(n_res);
      for (std::size_t i = 0; i < inputs.size(); ++i)
        r.segment(i * out_dim, out_dim) = work.forward(inputs[i]) - targets[i];
      return r;
    };
    problem.jacobian = [&](const Eigen::VectorXd& theta) {
      work.set_params(theta);
      Eigen::MatrixXd J(n_res, work.num_params());
      Eigen::MatrixXd jac;
      for (std::size_t i = 0; i < inputs.size(); ++i) {
        work.forward_with_jacobians(inputs[i], &jac, nullptr);
        J.middleRows(i * out_dim, out_dim) = jac;
      }
      return J;
    };
    LmOptions opts;
    opts.max_iters = cfg.epochs;
    opts.lambda_init = cfg.lm_lambda_init;
    LmResult lm = lm_minimize(problem, net.get_params(), opts);
    net.set_params(lm.params);
    result.loss_history = std::move(lm.loss_history);
  } else {
    // Full-batch gradient descent with momentum; a step that increases the
    // loss is rolled back with a halved learning rate, so the final MSE
    // never exceeds the initial one.
    double lr = cfg.lr;
    double loss = dataset_mse(net, inputs, targets);
    Eigen::VectorXd theta = net.get_params();
    Eigen::VectorXd velocity = Eigen::VectorXd::Zero(theta.size());
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(theta.size());
      for (std::size_t i = 0; i < inputs.size(); ++i)
        grad += mlp_gradient(net, inputs[i], targets[i]);
      grad /= static_cast<double>(inputs.size());

      velocity = cfg.momentum * velocity - lr * grad;
      Mlp candidate = net;
      candidate.set_params(theta + velocity);
      const double loss2 = dataset_mse(candidate, inputs, targets);
      if (std::isfinite(loss2) && loss2 <= loss) {
        theta += velocity;
        net = std::move(candidate);
        loss = loss2;
      } else {
        velocity.setZero();
        lr *= 0.5;
      }
      result.loss_history.push_back(loss);
    }
  }
  result.net = std::move(net);
  return result;
}

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void save_mlp(std::ostream& os, const Mlp& net,
              const std::map<std::string, std::vector<double>>& extras) {
  os << "layers";
  for (int s : net.layer_sizes) os << ' ' << s;
  os << '\n';
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    os << "weights " << l;
    for (int i = 0; i < net.weights[l].rows(); ++i)
      for (int j = 0; j < net.weights[l].cols(); ++j)
        os << ' ' << fmt17(net.weights[l](i, j));
    os << '\n';
    os << "biases " << l;
    for (int i = 0; i < net.biases[l].size(); ++i)
      os << ' ' << fmt17(net.biases[l](i));
    os << '\n';
  }
  for (const auto& [name, values] : extras) {
    os << name;
    for (double v : values) os << ' ' << fmt17(v);
    os << '\n';
  }
}

Mlp load_mlp(std::istream& is,
             std::map<std::string, std::vector<double>>* extras) {
  Mlp net;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "layers") {
      int s;
      while (ls >> s) net.layer_sizes.push_back(s);
      if (net.layer_sizes.size() < 2)
        throw ValidationError("load_mlp: malformed layers section");
      for (std::size_t l = 0; l + 1 < net.layer_sizes.size(); ++l) {
        net.weights.emplace_back(
            Eigen::MatrixXd::Zero(net.layer_sizes[l + 1], net.layer_sizes[l]));
        net.biases.emplace_back(Eigen::VectorXd::Zero(net.layer_sizes[l + 1]));
      }
    } else if (key == "weights" || key == "biases") {
      std::size_t l;
      if (!(ls >> l) || l >= net.weights.size())
        throw ValidationError("load_mlp: bad layer index in " + key);
      const bool is_w = (key == "weights");
      const long count = is_w ? net.weights[l].size() : net.biases[l].size();
      for (long k = 0; k < count; ++k) {
        double v;
        if (!(ls >> v)) throw ValidationError("load_mlp: truncated " + key);
        if (is_w)
          net.weights[l](k / net.weights[l].cols(), k % net.weights[l].cols()) = v;
        else
          net.biases[l](k) = v;
      }
    } else {
      std::vector<double> values;
      double v;
      while (ls >> v) values.push_back(v);
      if (extras) (*extras)[key] = std::move(values);
    }
  }
  if (net.layer_sizes.empty())
    throw ValidationError("load_mlp: no layers section found");
  return net;
}

}  // namespace steamflow
