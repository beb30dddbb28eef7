#include "steamflow/sysid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace steamflow {

std::vector<double> generate_excitation(const ExcitationConfig& cfg) {
  if (!(cfg.u_min <= cfg.u_max))
    throw ValidationError("ExcitationConfig: u_min must be <= u_max");
  if (!(cfg.interval_min > 0.0) || !(cfg.interval_min <= cfg.interval_max))
    throw ValidationError(
        "ExcitationConfig: intervals must be positive with min <= max");
  if (!(cfg.sample_time > 0.0))
    throw ValidationError("ExcitationConfig: sample_time must be positive");
  if (cfg.total_segments < 1)
    throw ValidationError("ExcitationConfig: total_segments must be >= 1");

  Rng rng(cfg.seed);
  std::vector<double> u;
  for (int s = 0; s < cfg.total_segments; ++s) {
    const double amplitude = rng.uniform(cfg.u_min, cfg.u_max);
    const double duration = rng.uniform(cfg.interval_min, cfg.interval_max);
    const long samples =
        std::max(1l, std::lround(duration / cfg.sample_time));
    u.insert(u.end(), samples, amplitude);
  }
  return u;
}

Dataset collect_dataset(const ExcitationConfig& cfg, DiscretePlant& plant) {
  if (!plant.state.isZero(0.0))
    throw ValidationError("collect_dataset: plant must start from zero state");
  Dataset data;
  data.sample_time = cfg.sample_time;
  data.u = generate_excitation(cfg);
  data.y.reserve(data.u.size());
  for (double uk : data.u) {
    data.y.push_back(plant.output());
    plant.step(uk);
  }
  return data;
}

void save_dataset_csv(const Dataset& data, std::ostream& os) {
  os << "t,u,y\n";
  char buf[128];
  for (std::size_t k = 0; k < data.u.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "%.12g,%.12g,%.12g\n",
                  static_cast<double>(k) * data.sample_time, data.u[k],
                  data.y[k]);
    os << buf;
  }
}

Dataset load_dataset_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "t,u,y")
    throw ValidationError("dataset CSV: missing or malformed header (want t,u,y)");
  Dataset data;
  std::vector<double> t;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    double tv, uv, yv;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &tv, &uv, &yv) != 3)
      throw ValidationError("dataset CSV: malformed row: " + line);
    t.push_back(tv);
    data.u.push_back(uv);
    data.y.push_back(yv);
  }
  data.sample_time = t.size() >= 2 ? t[1] - t[0] : 0.1;
  return data;
}

namespace {

Scaler scaler_from_data(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return Scaler::from_range(*lo, *hi);
}

void check_identify_pre(const Dataset& data, int delays) {
  if (data.u.size() != data.y.size())
    throw ValidationError("identify: u and y lengths differ");
  if (static_cast<int>(data.u.size()) <= delays + 10)
    throw ValidationError("identify: insufficient data (need > delays + 10 samples)");
  for (std::size_t i = 0; i < data.u.size(); ++i)
    if (!std::isfinite(data.u[i]) || !std::isfinite(data.y[i]))
      throw ValidationError("identify: dataset contains non-finite values");
}

}  // namespace

double NarxModel::predict(const std::vector<double>& y_hist,
                          const std::vector<double>& u_hist) const {
  if (static_cast<int>(y_hist.size()) < output_delays ||
      static_cast<int>(u_hist.size()) < input_delays)
    throw ValidationError("NarxModel::predict: history too short");
  Eigen::VectorXd z(output_delays + input_delays);
  for (int i = 0; i < output_delays; ++i) z(i) = y_scaler.norm(y_hist[i]);
  for (int i = 0; i < input_delays; ++i)
    z(output_delays + i) = u_scaler.norm(u_hist[i]);
  return y_scaler.denorm(net.forward(z)(0));
}

NarxModel identify_narx(const Dataset& data, const TrainConfig& cfg,
                        const IdentifyOptions& opts) {
  NarxModel model;
  const int d = std::max(model.input_delays, model.output_delays);
  check_identify_pre(data, d);

  model.u_scaler = scaler_from_data(data.u);
  model.y_scaler = scaler_from_data(data.y);
  model.output_range = 2.0 * model.y_scaler.scale;

  const int n = static_cast<int>(data.u.size());
  std::vector<Eigen::VectorXd> inputs, targets;
  for (int k = d; k < n; ++k) {
    Eigen::VectorXd z(model.output_delays + model.input_delays);
    for (int i = 0; i < model.output_delays; ++i)
      z(i) = model.y_scaler.norm(data.y[k - 1 - i]);
    for (int i = 0; i < model.input_delays; ++i)
      z(model.output_delays + i) = model.u_scaler.norm(data.u[k - 1 - i]);
    inputs.push_back(std::move(z));
    targets.push_back(Eigen::VectorXd::Constant(1, model.y_scaler.norm(data.y[k])));
  }

  // Contiguous 80/20 split (temporal structure preserved).
  const std::size_t n_train = (inputs.size() * 4) / 5;
  std::vector<Eigen::VectorXd> train_in(inputs.begin(), inputs.begin() + n_train);
  std::vector<Eigen::VectorXd> train_tg(targets.begin(), targets.begin() + n_train);

  Rng rng(cfg.seed);
  Mlp net = Mlp::create(
      {model.output_delays + model.input_delays, opts.hidden, 1}, rng);
  TrainResult tr = train(std::move(net), train_in, train_tg, cfg);
  model.net = std::move(tr.net);

  double sq = 0.0;
  for (std::size_t i = n_train; i < inputs.size(); ++i) {
    const double e = model.net.forward(inputs[i])(0) - targets[i](0);
    sq += e * e;
  }
  const std::size_t n_val = inputs.size() - n_train;
  model.validation_rmse =
      n_val ? std::sqrt(sq / static_cast<double>(n_val)) * model.y_scaler.scale
            : 0.0;
  return model;
}

Eigen::VectorXd NarmaL2Model::regressor(const std::vector<double>& y_hist,
                                        const std::vector<double>& u_hist) const {
  if (static_cast<int>(y_hist.size()) < output_delays ||
      static_cast<int>(u_hist.size()) < input_delays - 1)
    throw ValidationError("NarmaL2Model::regressor: history too short");
  Eigen::VectorXd z(output_delays + input_delays - 1);
  for (int i = 0; i < output_delays; ++i) z(i) = y_scaler.norm(y_hist[i]);
  for (int i = 0; i + 1 < input_delays; ++i)
    z(output_delays + i) = u_scaler.norm(u_hist[i]);
  return z;
}

double NarmaL2Model::predict(const std::vector<double>& y_hist,
                             const std::vector<double>& u_hist,
                             double u_now) const {
  const Eigen::VectorXd z = regressor(y_hist, u_hist);
  return y_scaler.denorm(f(z) + g(z) * u_scaler.norm(u_now));
}

NarmaL2Model identify_narma_l2(const Dataset& data, const TrainConfig& cfg,
                               const IdentifyOptions& opts) {
  NarmaL2Model model;
  const int d = std::max(model.input_delays, model.output_delays);
  check_identify_pre(data, d);

  model.u_scaler = scaler_from_data(data.u);
  model.y_scaler = scaler_from_data(data.y);
  model.output_range = 2.0 * model.y_scaler.scale;

  // Sample k predicts y(k+1) from z = [yn(k..k-3), un(k-1..k-3)] and un(k).
  const int n = static_cast<int>(data.u.size());
  const int zdim = model.output_delays + model.input_delays - 1;
  std::vector<Eigen::VectorXd> zs;
  std::vector<double> u_now, y_next;
  for (int k = d; k + 1 < n; ++k) {
    Eigen::VectorXd z(zdim);
    for (int i = 0; i < model.output_delays; ++i)
      z(i) = model.y_scaler.norm(data.y[k - i]);
    for (int i = 0; i + 1 < model.input_delays; ++i)
      z(model.output_delays + i) = model.u_scaler.norm(data.u[k - 1 - i]);
    zs.push_back(std::move(z));
    u_now.push_back(model.u_scaler.norm(data.u[k]));
    y_next.push_back(model.y_scaler.norm(data.y[k + 1]));
  }

  const std::size_t n_train = (zs.size() * 4) / 5;
  Rng rng(cfg.seed);
  Mlp f_net = Mlp::create({zdim, opts.hidden, 1}, rng);
  Mlp g_net = Mlp::create({zdim, opts.hidden, 1}, rng);

  if (opts.regularize_g) {
    // Pin g to the constant target exactly and carry its -g·un(k-1)
    // counterpart as an exact affine skip term in f, so that the model
    // predicts ŷ(k+1) = f_net(z) + g·(un(k) - un(k-1)).  The network part
    // then only has to learn the constant-input one-step predictor (a
    // small-range, well-conditioned fit); a soft joint fit instead forces f
    // to span a ±g dynamic range, and its absolute error reappears as a
    // closed-loop steady-state offset of the resulting incremental law.
    for (auto& w : g_net.weights) w.setZero();
    for (auto& b : g_net.biases) b.setZero();
    g_net.biases.back()(0) = opts.g_target;
    model.f_skip = Eigen::VectorXd::Zero(zdim);
    model.f_skip(model.output_delays) = -opts.g_target;  // un(k-1) channel

    // Train on the constant-input samples only (un(k) == un(k-1)); the few
    // segment-boundary samples are the only ones where the skip/g pair does
    // not cancel, and they would otherwise act as large-residual outliers.
    std::vector<Eigen::VectorXd> train_in;
    std::vector<Eigen::VectorXd> train_tg;
    train_in.reserve(n_train);
    train_tg.reserve(n_train);
    for (std::size_t i = 0; i < n_train; ++i) {
      if (u_now[i] != zs[i](model.output_delays)) continue;
      train_in.push_back(zs[i]);
      train_tg.push_back(Eigen::VectorXd::Constant(1, y_next[i]));
    }
    if (train_in.size() < 20)
      throw ValidationError(
          "identify_narma_l2: excitation holds too short (need constant-input "
          "samples to fit the pinned-g model)");
    TrainResult tr = train(std::move(f_net), train_in, train_tg, cfg);
    model.f_net = std::move(tr.net);
    model.g_net = std::move(g_net);
  } else {
    const int nf = f_net.num_params();
    const int ng = g_net.num_params();

    Mlp fw = f_net, gw = g_net;
    auto load_params = [&](const Eigen::VectorXd& theta) {
      fw.set_params(theta.head(nf));
      gw.set_params(theta.tail(ng));
    };
    LmProblem problem;
    problem.residuals = [&](const Eigen::VectorXd& theta) {
      load_params(theta);
      Eigen::VectorXd r(n_train);
      for (std::size_t i = 0; i < n_train; ++i)
        r(i) = fw.forward(zs[i])(0) + gw.forward(zs[i])(0) * u_now[i] -
               y_next[i];
      return r;
    };
    problem.jacobian = [&](const Eigen::VectorXd& theta) {
      load_params(theta);
      Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n_train, nf + ng);
      Eigen::MatrixXd jf, jg;
      for (std::size_t i = 0; i < n_train; ++i) {
        fw.forward_with_jacobians(zs[i], &jf, nullptr);
        gw.forward_with_jacobians(zs[i], &jg, nullptr);
        J.row(i).head(nf) = jf.row(0);
        J.row(i).tail(ng) = jg.row(0) * u_now[i];
      }
      return J;
    };

    Eigen::VectorXd init(nf + ng);
    init << f_net.get_params(), g_net.get_params();
    LmOptions lm_opts;
    lm_opts.max_iters = cfg.epochs;
    lm_opts.lambda_init = cfg.lm_lambda_init;
    const LmResult lm = lm_minimize(problem, init, lm_opts);

    model.f_net = std::move(fw);
    model.g_net = std::move(gw);
    model.f_net.set_params(lm.params.head(nf));
    model.g_net.set_params(lm.params.tail(ng));
  }

  // Degenerate-g guard: scan training regressors.
  double g_abs_max = 0.0;
  const std::size_t stride = std::max<std::size_t>(1, n_train / 1000);
  for (std::size_t i = 0; i < n_train; i += stride)
    g_abs_max = std::max(g_abs_max, std::abs(model.g_net.forward(zs[i])(0)));
  if (g_abs_max < 1e-3)
    throw TrainingError(
        "identify_narma_l2: degenerate g (|g| < 1e-3 on all training "
        "regressors); the plant's one-step input gain is not identifiable");

  double sq = 0.0;
  for (std::size_t i = n_train; i < zs.size(); ++i) {
    const double e = model.f(zs[i]) + model.g(zs[i]) * u_now[i] - y_next[i];
    sq += e * e;
  }
  const std::size_t n_val = zs.size() - n_train;
  model.validation_rmse =
      n_val ? std::sqrt(sq / static_cast<double>(n_val)) * model.y_scaler.scale
            : 0.0;
  return model;
}

}  // namespace steamflow
