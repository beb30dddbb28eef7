// Command-line harness: identify plant models, train controllers, run
// closed-loop scenarios, and reproduce the published performance tables.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "steamflow/harness.hpp"
#include "steamflow/plant.hpp"

using namespace steamflow;

namespace {

std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    seeds.push_back(std::stoull(tok));
  }
  return seeds;
}

int cmd_identify(std::uint64_t seed, const std::string& out, bool wide) {
  ExcitationConfig exc;  // Table 2 defaults: u in [1,2], intervals [15,30] s
  if (wide) {
    exc.u_min = -200.0;
    exc.u_max = 200.0;
  }
  exc.seed = seed;

  DiscretePlant plant = make_paper_plant(exc.sample_time);
  const Dataset data = collect_dataset(exc, plant);

  TrainConfig cfg;
  cfg.seed = seed;
  IdentifyOptions opts;
  if (wide) opts.g_target = 25.0;
  const NarxModel narx = identify_narx(data, cfg, opts);
  const NarmaL2Model narma = identify_narma_l2(data, cfg, opts);

  std::filesystem::create_directories(out);
  {
    std::ofstream os(out + "/dataset.csv");
    save_dataset_csv(data, os);
  }
  {
    std::ofstream os(out + "/narx.txt");
    save_mlp(os, narx.net,
             {{"norm_u", {narx.u_scaler.center, narx.u_scaler.scale}},
              {"norm_y", {narx.y_scaler.center, narx.y_scaler.scale}},
              {"validation_rmse", {narx.validation_rmse}}});
  }
  {
    std::ofstream os(out + "/narma_f.txt");
    std::map<std::string, std::vector<double>> extras{
        {"norm_u", {narma.u_scaler.center, narma.u_scaler.scale}},
        {"norm_y", {narma.y_scaler.center, narma.y_scaler.scale}},
        {"validation_rmse", {narma.validation_rmse}}};
    if (narma.f_skip.size() > 0)
      extras["f_skip"] = std::vector<double>(
          narma.f_skip.data(), narma.f_skip.data() + narma.f_skip.size());
    save_mlp(os, narma.f_net, extras);
  }
  {
    std::ofstream os(out + "/narma_g.txt");
    save_mlp(os, narma.g_net);
  }
  std::printf("dataset: %zu samples (%s profile)\n", data.u.size(),
              wide ? "wide" : "table-2");
  std::printf("NARX     one-step validation RMSE: %.6g (%.4f%% of range)\n",
              narx.validation_rmse,
              100.0 * narx.validation_rmse / narx.output_range);
  std::printf("NARMA-L2 one-step validation RMSE: %.6g (%.4f%% of range)\n",
              narma.validation_rmse,
              100.0 * narma.validation_rmse / narma.output_range);
  std::printf("models written to %s\n", out.c_str());
  return 0;
}

int cmd_train(std::uint64_t seed, const std::string& out) {
  const ControllerBundle bundle = train_bundle(seed);
  save_bundle(bundle, out);
  std::printf("NARX validation RMSE:     %.6g\n", bundle.narx.validation_rmse);
  std::printf("NARMA-L2 validation RMSE: %.6g\n", bundle.narma.validation_rmse);
  std::printf("MRC training loss:        %.6g\n", bundle.mrc.training_loss);
  std::printf("bundle written to %s\n", out.c_str());
  return 0;
}

int cmd_run(const Scenario& sc, const std::string& out,
            const std::string& models) {
  const ControllerBundle bundle =
      models.empty() ? train_bundle(sc.seed) : load_bundle(models);
  const RunRecord rec = run_scenario(sc, bundle);

  std::filesystem::create_directories(out);
  emit_csv(rec, out + "/run.csv");
  emit_plot(rec, out + "/run.svg");

  if (rec.fault) {
    std::fprintf(stderr, "controller fault at step %ld: %s\n", rec.fault_index,
                 rec.fault_message.c_str());
    throw ControllerFault(rec.fault_message);
  }
  std::printf("controller: %s\n", to_string(sc.controller).c_str());
  if (rec.has_step) {
    std::printf("rise time:     %.3f s\n", rec.step.rise_time);
    std::printf("overshoot:     %.3f %%\n", rec.step.overshoot_pct);
    std::printf("settling time: %.3f s\n", rec.step.settling_time);
    std::printf("steady state:  %.4f\n", rec.step.steady_state);
  } else if (rec.has_track) {
    std::printf("tracked peak value: %.4f\n", rec.track.peak_value);
  } else if (!rec.metrics_error.empty()) {
    std::printf("metrics undefined: %s\n", rec.metrics_error.c_str());
  }
  std::printf("outputs written to %s/run.csv and %s/run.svg\n", out.c_str(),
              out.c_str());
  return 0;
}

int cmd_reproduce(const std::string& seed_list, const std::string& out) {
  const std::string report = reproduce_tables(parse_seed_list(seed_list));
  std::filesystem::create_directories(out);
  std::ofstream os(out + "/report.txt");
  os << report;
  std::cout << report;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Steam-flow neural process-control study harness"};
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  std::string out = ".";
  std::string config_path, models_dir;
  bool wide = false;

  auto* identify = app.add_subcommand(
      "identify", "Identify NARX and NARMA-L2 plant models from excitation data");
  identify->add_option("--seed", seed, "excitation/training seed");
  identify->add_option("--out", out, "output directory");
  identify->add_flag("--wide", wide,
                     "use the wide controller-grade excitation profile");

  auto* train = app.add_subcommand(
      "train", "Train all controllers for one seed and persist the bundle");
  train->add_option("--seed", seed, "training seed");
  train->add_option("--out", out, "output directory");

  std::string controller = "model_reference", reference = "step";
  bool noise = false;
  auto* run = app.add_subcommand("run", "Run a single closed-loop scenario");
  run->add_option("--controller", controller,
                  "narma_l2 | model_reference | nn_predictive");
  run->add_option("--reference", reference, "step | sine");
  run->add_flag("--noise", noise, "enable sensor noise");
  run->add_option("--seed", seed, "training seed");
  run->add_option("--config", config_path, "scenario config file (key=value)");
  run->add_option("--out", out, "output directory");
  run->add_option("--models", models_dir, "load a saved bundle instead of training");

  std::string seed_list = "1,2,3,4,5";
  auto* reproduce = app.add_subcommand(
      "reproduce", "Reproduce the published Tables 2-5 across training seeds");
  reproduce->add_option("--seeds", seed_list, "comma-separated seed list (>= 3)");
  reproduce->add_option("--out", out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (identify->parsed()) return cmd_identify(seed, out, wide);
    if (train->parsed()) return cmd_train(seed, out);
    if (run->parsed()) {
      Scenario sc;
      if (!config_path.empty()) sc = load_scenario_config(config_path);
      if (run->count("--controller") || config_path.empty())
        sc.controller = controller_from_string(controller);
      if (run->count("--reference") || config_path.empty()) {
        if (reference == "step") {
          sc.reference.kind = ReferenceKind::step;
        } else if (reference == "sine") {
          sc.reference.kind = ReferenceKind::sine;
          sc.reference.amplitude = 4.0;
          sc.duration = 100.0;
        } else {
          throw ValidationError("reference must be step or sine");
        }
      }
      if (run->count("--noise")) sc.noise.enabled = noise;
      if (run->count("--seed")) sc.seed = seed;
      return cmd_run(sc, out, models_dir);
    }
    if (reproduce->parsed()) return cmd_reproduce(seed_list, out);
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return 1;
  } catch (const TrainingError& e) {
    std::fprintf(stderr, "training failure: %s\n", e.what());
    return 2;
  } catch (const ControllerFault& e) {
    std::fprintf(stderr, "controller fault: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
