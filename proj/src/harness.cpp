#include "steamflow/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "steamflow/plant.hpp"

namespace steamflow {

std::string to_string(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::narma_l2: return "narma_l2";
    case ControllerKind::model_reference: return "model_reference";
    case ControllerKind::nn_predictive: return "nn_predictive";
  }
  return "unknown";
}

ControllerKind controller_from_string(const std::string& name) {
  if (name == "narma_l2") return ControllerKind::narma_l2;
  if (name == "model_reference") return ControllerKind::model_reference;
  if (name == "nn_predictive") return ControllerKind::nn_predictive;
  throw ValidationError("unknown controller '" + name +
                        "' (want narma_l2 | model_reference | nn_predictive)");
}

HarnessOptions HarnessOptions::defaults() {
  HarnessOptions o;
  // Controller-grade identification spans the closed-loop actuator envelope
  // rather than Table 2's [1, 2] V identification window.
  o.excitation.u_min = -200.0;
  o.excitation.u_max = 200.0;
  o.narx_opts.hidden = 10;       // extra capacity for the surrogate's DC map
  o.narma_opts.g_target = 18.0;  // incremental-law integral gain (normalized)
  return o;
}

ControllerBundle train_bundle(std::uint64_t seed, const HarnessOptions& opts) {
  ExcitationConfig exc = opts.excitation;
  exc.seed = seed;
  DiscretePlant plant = make_paper_plant(exc.sample_time);
  const Dataset data = collect_dataset(exc, plant);

  TrainConfig idc = opts.identify_cfg;
  idc.seed = seed;

  ControllerBundle bundle;
  bundle.u_lo = opts.u_lo;
  bundle.u_hi = opts.u_hi;
  TrainConfig narx_cfg = idc;
  narx_cfg.epochs = opts.narx_epochs;
  bundle.narx = identify_narx(data, narx_cfg, opts.narx_opts);
  bundle.narma = identify_narma_l2(data, idc, opts.narma_opts);

  const ReferenceModel rm =
      ReferenceModel::create(opts.ref_zeta, opts.ref_omega_n, exc.sample_time);
  MrcTrainOptions mrc_opts = opts.mrc_opts;
  mrc_opts.u_lo = opts.u_lo;
  mrc_opts.u_hi = opts.u_hi;
  bundle.mrc = train_mrc(bundle.narx, rm, idc, mrc_opts);

  bundle.nmpc_opts = opts.nmpc_opts;
  bundle.nmpc_opts.u_lo = opts.u_lo;
  bundle.nmpc_opts.u_hi = opts.u_hi;
  return bundle;
}

RunRecord run_scenario(const Scenario& sc, const ControllerBundle& bundle) {
  if (!(sc.sample_time > 0.0))
    throw ValidationError("Scenario: sample_time must be positive");
  if (!(sc.duration >= 10.0 * sc.sample_time))
    throw ValidationError("Scenario: duration must be >= 10 * sample_time");

  DiscretePlant plant = make_paper_plant(sc.sample_time);
  NoiseGenerator noise(sc.noise, sc.sample_time);

  NarmaL2Controller narma(bundle.narma, bundle.u_lo, bundle.u_hi);
  MrcController mrc = bundle.mrc;
  mrc.reset();
  NmpcController nmpc(bundle.narx, bundle.nmpc_opts);

  const long n = std::lround(sc.duration / sc.sample_time);
  RunRecord rec;
  rec.t.reserve(n);

  for (long k = 0; k < n; ++k) {
    const double tk = static_cast<double>(k) * sc.sample_time;
    const double r = sample_reference(sc.reference, tk);
    const double nk = noise.next();
    const double y_meas = plant.output() + nk;

    double u = 0.0;
    std::uint8_t warn = 0;
    try {
      switch (sc.controller) {
        case ControllerKind::narma_l2:
          u = narma.control(
              sample_reference(sc.reference,
                               static_cast<double>(k + 1) * sc.sample_time),
              y_meas);
          break;
        case ControllerKind::model_reference:
          u = mrc.control(r, y_meas);
          break;
        case ControllerKind::nn_predictive:
          u = nmpc.control({r}, y_meas);
          warn = nmpc.last_warning() ? 1 : 0;
          break;
      }
    } catch (const ControllerFault& e) {
      rec.fault = true;
      rec.fault_index = k;
      rec.fault_message = e.what();
      break;
    }

    const double y_new = plant.step(u);
    rec.t.push_back(tk);
    rec.r.push_back(r);
    rec.y_true.push_back(y_new);
    rec.y_measured.push_back(y_new + nk);
    rec.u.push_back(u);
    rec.warnings.push_back(warn);
  }

  if (!rec.fault && !rec.t.empty()) {
    try {
      if (sc.reference.kind == ReferenceKind::step) {
        if (sc.reference.amplitude != 0.0) {
          rec.step = step_metrics(rec.t, rec.y_measured, sc.reference.amplitude);
          rec.has_step = true;
        }
      } else {
        rec.track = track_metrics(rec.y_measured);
        rec.has_track = true;
      }
    } catch (const ValidationError& e) {
      rec.metrics_error = e.what();
    }
  }
  return rec;
}

// ---------------------------------------------------------------------------
// reproduce_tables

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt_cell(double v) {
  char buf[32];
  if (std::isnan(v))
    std::snprintf(buf, sizeof(buf), "%9s", "failed");
  else
    std::snprintf(buf, sizeof(buf), "%9.3f", v);
  return buf;
}

struct CellSet {
  std::vector<double> values;  // NaN marks a failed seed
  std::vector<double> valid() const {
    std::vector<double> out;
    for (double v : values)
      if (!std::isnan(v)) out.push_back(v);
    return out;
  }
};

void emit_block(std::ostream& os, const std::string& title,
                const std::vector<std::uint64_t>& seeds,
                const std::vector<std::string>& row_names,
                const std::vector<CellSet>& rows,
                const std::vector<double>& published) {
  os << "--- " << title << " ---\n";
  os << "  " << std::string(34, ' ');
  for (std::uint64_t s : seeds) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "   s=%-4llu",
                  static_cast<unsigned long long>(s));
    os << buf;
  }
  os << "    median published\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "  %-34s", row_names[i].c_str());
    os << name;
    for (double v : rows[i].values) os << fmt_cell(v);
    os << fmt_cell(median(rows[i].valid()));
    os << fmt_cell(published[i]) << '\n';
  }
  os << '\n';
}

}  // namespace

std::string reproduce_tables(const std::vector<std::uint64_t>& seeds,
                             const HarnessOptions& opts) {
  if (seeds.size() < 3)
    throw ValidationError("reproduce_tables: need at least 3 seeds");

  const char* names[3] = {"NARMA-L2", "Model Reference", "NN Predictive"};
  const ControllerKind kinds[3] = {ControllerKind::narma_l2,
                                   ControllerKind::model_reference,
                                   ControllerKind::nn_predictive};
  // Published values, Tables 2-5: {rise, overshoot, settling, steady state}
  // per controller, then sine peaks.
  const double paper_step[3][4] = {{2.4, 6.0, 11.0, 1.0},
                                   {2.45, 1.02, 9.0, 1.0},
                                   {2.45, 13.33, 14.3, 1.0}};
  const double paper_step_noise[3][4] = {{2.6, 8.33, 19.0, 1.0},
                                         {2.75, 3.33, 18.0, 1.0},
                                         {2.75, 15.0, 25.0, 1.0}};
  const double paper_peak[3] = {3.0, 3.8, 2.6};
  const double paper_peak_noise[3] = {2.8, 3.7, 2.3};

  // blocks: 0 step, 1 step+noise (4 metric rows per controller);
  //         2 sine, 3 sine+noise (1 peak row per controller).
  std::vector<CellSet> step_rows(12), noise_rows(12);
  std::vector<CellSet> sine_rows(3), sine_noise_rows(3);

  for (std::uint64_t seed : seeds) {
    bool bundle_ok = true;
    ControllerBundle bundle;
    try {
      bundle = train_bundle(seed, opts);
    } catch (const std::exception&) {
      bundle_ok = false;
    }

    for (int c = 0; c < 3; ++c) {
      StepMetrics sm[2];
      double peak[2];
      bool ok_step[2] = {false, false}, ok_peak[2] = {false, false};
      if (bundle_ok) {
        for (int noisy = 0; noisy < 2; ++noisy) {
          Scenario sc;
          sc.controller = kinds[c];
          sc.seed = seed;
          sc.noise.enabled = noisy != 0;
          sc.noise.seed = seed * 7919 + 101;

          sc.reference.kind = ReferenceKind::step;
          sc.reference.amplitude = 1.0;
          sc.duration = 30.0;
          try {
            const RunRecord rec = run_scenario(sc, bundle);
            if (rec.has_step) {
              sm[noisy] = rec.step;
              ok_step[noisy] = true;
            }
          } catch (const std::exception&) {
          }

          sc.reference.kind = ReferenceKind::sine;
          sc.reference.amplitude = 4.0;
          sc.reference.frequency = 0.2;
          sc.duration = 100.0;
          try {
            const RunRecord rec = run_scenario(sc, bundle);
            if (rec.has_track) {
              peak[noisy] = rec.track.peak_value;
              ok_peak[noisy] = true;
            }
          } catch (const std::exception&) {
          }
        }
      }
      const double nan = std::numeric_limits<double>::quiet_NaN();
      for (int noisy = 0; noisy < 2; ++noisy) {
        auto& rows = noisy ? noise_rows : step_rows;
        const double vals[4] = {sm[noisy].rise_time, sm[noisy].overshoot_pct,
                                sm[noisy].settling_time,
                                sm[noisy].steady_state};
        for (int m = 0; m < 4; ++m)
          rows[c * 4 + m].values.push_back(ok_step[noisy] ? vals[m] : nan);
        (noisy ? sine_noise_rows : sine_rows)[c].values.push_back(
            ok_peak[noisy] ? peak[noisy] : nan);
      }
    }
  }

  std::vector<std::string> step_names, peak_names;
  std::vector<double> pub_step, pub_noise, pub_peak(paper_peak, paper_peak + 3),
      pub_peak_noise(paper_peak_noise, paper_peak_noise + 3);
  const char* metric_names[4] = {"rise time [s]", "overshoot [%]",
                                 "settling time [s]", "steady state"};
  for (int c = 0; c < 3; ++c) {
    for (int m = 0; m < 4; ++m) {
      step_names.push_back(std::string(names[c]) + ": " + metric_names[m]);
      pub_step.push_back(paper_step[c][m]);
      pub_noise.push_back(paper_step_noise[c][m]);
    }
    peak_names.push_back(std::string(names[c]) + ": peak value");
  }

  std::ostringstream os;
  os << "Reproduction of the published performance tables\n";
  os << "seeds:";
  for (std::uint64_t s : seeds) os << ' ' << s;
  os << "\n\n";
  emit_block(os, "Step response, no sensor noise (published Table 2)", seeds,
             step_names, step_rows, pub_step);
  emit_block(os, "Step response with sensor noise (published Table 3)", seeds,
             step_names, noise_rows, pub_noise);
  emit_block(os, "Sine tracking, no sensor noise (published Table 4)", seeds,
             peak_names, sine_rows, pub_peak);
  emit_block(os, "Sine tracking with sensor noise (published Table 5)", seeds,
             peak_names, sine_noise_rows, pub_peak_noise);
  os << "Published sine peaks depend on an unpublished sine frequency; the\n"
        "harness default is 0.2 rad/s with reference amplitude 4.\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// CSV / plot / config / persistence

void emit_csv(const RunRecord& record, std::ostream& os) {
  os << "t,r,y_true,y_measured,u\n";
  char buf[192];
  for (std::size_t k = 0; k < record.t.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "%.12g,%.12g,%.12g,%.12g,%.12g\n",
                  record.t[k], record.r[k], record.y_true[k],
                  record.y_measured[k], record.u[k]);
    os << buf;
  }
}

void emit_csv(const RunRecord& record, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ValidationError("emit_csv: cannot write " + path);
  emit_csv(record, os);
}

RunRecord load_run_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "t,r,y_true,y_measured,u")
    throw ValidationError("run CSV: missing or malformed header");
  RunRecord rec;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    double t, r, yt, ym, u;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf", &t, &r, &yt, &ym,
                    &u) != 5)
      throw ValidationError("run CSV: malformed row: " + line);
    rec.t.push_back(t);
    rec.r.push_back(r);
    rec.y_true.push_back(yt);
    rec.y_measured.push_back(ym);
    rec.u.push_back(u);
    rec.warnings.push_back(0);
  }
  return rec;
}

namespace {

struct PlotScale {
  double lo, hi, px0, px1;
  double operator()(double v) const {
    return px0 + (v - lo) / (hi - lo) * (px1 - px0);
  }
};

void emit_polyline(std::ostream& os, const std::vector<double>& x,
                   const std::vector<double>& y, const PlotScale& sx,
                   const PlotScale& sy, const char* style) {
  os << "  <polyline fill=\"none\" " << style << " points=\"";
  char buf[64];
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", sx(x[i]), sy(y[i]));
    os << buf;
  }
  os << "\"/>\n";
}

}  // namespace

void emit_plot(const RunRecord& record, std::ostream& os) {
  const double W = 800, H = 480, ML = 70, MR = 30, MT = 40, MB = 50;
  double tlo = 0, thi = 1, ylo = 0, yhi = 1;
  if (!record.t.empty()) {
    tlo = record.t.front();
    thi = record.t.back();
    ylo = yhi = record.r[0];
    for (std::size_t i = 0; i < record.t.size(); ++i) {
      ylo = std::min({ylo, record.r[i], record.y_true[i]});
      yhi = std::max({yhi, record.r[i], record.y_true[i]});
    }
  }
  if (thi <= tlo) thi = tlo + 1.0;
  if (yhi <= ylo) {
    ylo -= 1.0;
    yhi += 1.0;
  }
  const double pad = 0.05 * (yhi - ylo);
  ylo -= pad;
  yhi += pad;

  const PlotScale sx{tlo, thi, ML, W - MR};
  const PlotScale sy{ylo, yhi, H - MB, MT};  // y axis points up

  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
     << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  os << "  <rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";

  char buf[256];
  for (int i = 0; i <= 5; ++i) {  // axis ticks and grid
    const double tv = tlo + (thi - tlo) * i / 5.0;
    const double yv = ylo + (yhi - ylo) * i / 5.0;
    std::snprintf(buf, sizeof(buf),
                  "  <line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" "
                  "stroke=\"#dddddd\"/>\n",
                  sx(tv), sy(ylo), sx(tv), sy(yhi));
    os << buf;
    std::snprintf(buf, sizeof(buf),
                  "  <line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" "
                  "stroke=\"#dddddd\"/>\n",
                  sx(tlo), sy(yv), sx(thi), sy(yv));
    os << buf;
    std::snprintf(buf, sizeof(buf),
                  "  <text x=\"%.2f\" y=\"%.2f\" font-size=\"12\" "
                  "text-anchor=\"middle\">%.3g</text>\n",
                  sx(tv), H - MB + 18.0, tv);
    os << buf;
    std::snprintf(buf, sizeof(buf),
                  "  <text x=\"%.2f\" y=\"%.2f\" font-size=\"12\" "
                  "text-anchor=\"end\">%.3g</text>\n",
                  ML - 8.0, sy(yv) + 4.0, yv);
    os << buf;
  }
  std::snprintf(buf, sizeof(buf),
                "  <rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" "
                "fill=\"none\" stroke=\"black\"/>\n",
                ML, MT, W - ML - MR, H - MT - MB);
  os << buf;
  os << "  <text x=\"" << (ML + (W - ML - MR) / 2) << "\" y=\"" << (H - 12)
     << "\" font-size=\"14\" text-anchor=\"middle\">time [s]</text>\n";
  os << "  <text x=\"18\" y=\"" << (MT + (H - MT - MB) / 2)
     << "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
     << (MT + (H - MT - MB) / 2) << ")\">flow output</text>\n";

  if (!record.t.empty()) {
    emit_polyline(os, record.t, record.r, sx, sy,
                  "stroke=\"#d62728\" stroke-width=\"1.5\" "
                  "stroke-dasharray=\"6 3\"");
    emit_polyline(os, record.t, record.y_true, sx, sy,
                  "stroke=\"#1f77b4\" stroke-width=\"1.5\"");
  }
  os << "  <line x1=\"" << (W - 220) << "\" y1=\"20\" x2=\"" << (W - 190)
     << "\" y2=\"20\" stroke=\"#d62728\" stroke-width=\"1.5\" "
        "stroke-dasharray=\"6 3\"/>\n";
  os << "  <text x=\"" << (W - 184)
     << "\" y=\"24\" font-size=\"13\">reference r</text>\n";
  os << "  <line x1=\"" << (W - 110) << "\" y1=\"20\" x2=\"" << (W - 80)
     << "\" y2=\"20\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>\n";
  os << "  <text x=\"" << (W - 74)
     << "\" y=\"24\" font-size=\"13\">output y</text>\n";
  os << "</svg>\n";
}

void emit_plot(const RunRecord& record, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ValidationError("emit_plot: cannot write " + path);
  emit_plot(record, os);
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  double v;
  try {
    v = std::stod(value, &pos);
  } catch (const std::exception&) {
    throw ValidationError("config: bad numeric value for " + key + ": " + value);
  }
  if (pos != value.size())
    throw ValidationError("config: bad numeric value for " + key + ": " + value);
  return v;
}

bool parse_flag(const std::string& key, const std::string& value) {
  if (value == "on" || value == "true" || value == "1") return true;
  if (value == "off" || value == "false" || value == "0") return false;
  throw ValidationError("config: bad flag value for " + key + ": " + value);
}

}  // namespace

Scenario parse_scenario_config(std::istream& is) {
  Scenario sc;
  bool duration_set = false;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config line " + std::to_string(lineno) +
                            ": expected key=value, got: " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "controller") {
      sc.controller = controller_from_string(value);
    } else if (key == "reference") {
      if (value == "step")
        sc.reference.kind = ReferenceKind::step;
      else if (value == "sine")
        sc.reference.kind = ReferenceKind::sine;
      else
        throw ValidationError("config: reference must be step or sine, got " +
                              value);
    } else if (key == "amplitude") {
      sc.reference.amplitude = parse_double(key, value);
    } else if (key == "start_time") {
      sc.reference.start_time = parse_double(key, value);
    } else if (key == "frequency") {
      sc.reference.frequency = parse_double(key, value);
    } else if (key == "phase") {
      sc.reference.phase = parse_double(key, value);
    } else if (key == "noise") {
      sc.noise.enabled = parse_flag(key, value);
    } else if (key == "noise_amplitude") {
      sc.noise.amplitude = parse_double(key, value);
    } else if (key == "noise_correlation_time") {
      sc.noise.correlation_time = parse_double(key, value);
    } else if (key == "noise_seed") {
      sc.noise.seed = static_cast<std::uint64_t>(parse_double(key, value));
    } else if (key == "duration") {
      sc.duration = parse_double(key, value);
      duration_set = true;
    } else if (key == "sample_time") {
      sc.sample_time = parse_double(key, value);
    } else if (key == "seed") {
      sc.seed = static_cast<std::uint64_t>(parse_double(key, value));
    } else {
      throw ValidationError("config: unknown key '" + key + "'");
    }
  }
  if (sc.reference.kind == ReferenceKind::sine) {
    if (!duration_set) sc.duration = 100.0;
    if (sc.reference.amplitude == 1.0) sc.reference.amplitude = 4.0;
  }
  return sc;
}

Scenario load_scenario_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open config file " + path);
  return parse_scenario_config(is);
}

namespace {

std::map<std::string, std::vector<double>> scaler_extras(const Scaler& u,
                                                         const Scaler& y) {
  return {{"norm_u", {u.center, u.scale}}, {"norm_y", {y.center, y.scale}}};
}

void read_scalers(const std::map<std::string, std::vector<double>>& extras,
                  Scaler& u, Scaler& y, const std::string& file) {
  const auto iu = extras.find("norm_u");
  const auto iy = extras.find("norm_y");
  if (iu == extras.end() || iy == extras.end() || iu->second.size() != 2 ||
      iy->second.size() != 2)
    throw ValidationError(file + ": missing normalization sections");
  u.center = iu->second[0];
  u.scale = iu->second[1];
  y.center = iy->second[0];
  y.scale = iy->second[1];
}

}  // namespace

void save_bundle(const ControllerBundle& bundle, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const auto path = [&](const char* f) { return dir + "/" + f; };

  {
    std::ofstream os(path("narx.txt"));
    auto extras = scaler_extras(bundle.narx.u_scaler, bundle.narx.y_scaler);
    extras["delays"] = {double(bundle.narx.input_delays),
                        double(bundle.narx.output_delays)};
    extras["validation_rmse"] = {bundle.narx.validation_rmse};
    extras["output_range"] = {bundle.narx.output_range};
    save_mlp(os, bundle.narx.net, extras);
  }
  {
    std::ofstream os(path("narma_f.txt"));
    auto extras = scaler_extras(bundle.narma.u_scaler, bundle.narma.y_scaler);
    extras["delays"] = {double(bundle.narma.input_delays),
                        double(bundle.narma.output_delays)};
    extras["validation_rmse"] = {bundle.narma.validation_rmse};
    extras["output_range"] = {bundle.narma.output_range};
    if (bundle.narma.f_skip.size() > 0)
      extras["f_skip"] = std::vector<double>(
          bundle.narma.f_skip.data(),
          bundle.narma.f_skip.data() + bundle.narma.f_skip.size());
    save_mlp(os, bundle.narma.f_net, extras);
  }
  {
    std::ofstream os(path("narma_g.txt"));
    save_mlp(os, bundle.narma.g_net);
  }
  {
    std::ofstream os(path("mrc.txt"));
    auto extras = scaler_extras(bundle.mrc.u_scaler, bundle.mrc.y_scaler);
    extras["ref_model"] = {bundle.mrc.ref_model.zeta,
                           bundle.mrc.ref_model.omega_n,
                           bundle.mrc.ref_model.sample_time};
    extras["u_limits"] = {bundle.mrc.u_lo, bundle.mrc.u_hi};
    extras["training_loss"] = {bundle.mrc.training_loss};
    save_mlp(os, bundle.mrc.controller_net, extras);
  }
  {
    std::ofstream os(path("bundle_config.txt"));
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "u_lo=%.17g\nu_hi=%.17g\nnmpc_N1=%d\nnmpc_N2=%d\n"
                  "nmpc_Nu=%d\nnmpc_rho=%.17g\nnmpc_traj_pole=%.17g\n"
                  "nmpc_max_iters=%d\n",
                  bundle.u_lo, bundle.u_hi, bundle.nmpc_opts.horizon_N1,
                  bundle.nmpc_opts.horizon_N2,
                  bundle.nmpc_opts.control_horizon_Nu, bundle.nmpc_opts.rho,
                  bundle.nmpc_opts.traj_pole, bundle.nmpc_opts.max_iters);
    os << buf;
  }
}

ControllerBundle load_bundle(const std::string& dir) {
  const auto open = [&](const char* f) {
    std::ifstream is(dir + "/" + f);
    if (!is) throw ValidationError("load_bundle: cannot open " + dir + "/" + f);
    return is;
  };
  ControllerBundle bundle;
  {
    auto is = open("narx.txt");
    std::map<std::string, std::vector<double>> extras;
    bundle.narx.net = load_mlp(is, &extras);
    read_scalers(extras, bundle.narx.u_scaler, bundle.narx.y_scaler, "narx.txt");
    if (auto it = extras.find("delays"); it != extras.end() && it->second.size() == 2) {
      bundle.narx.input_delays = int(it->second[0]);
      bundle.narx.output_delays = int(it->second[1]);
    }
    if (auto it = extras.find("validation_rmse"); it != extras.end())
      bundle.narx.validation_rmse = it->second.at(0);
    if (auto it = extras.find("output_range"); it != extras.end())
      bundle.narx.output_range = it->second.at(0);
  }
  {
    auto is = open("narma_f.txt");
    std::map<std::string, std::vector<double>> extras;
    bundle.narma.f_net = load_mlp(is, &extras);
    read_scalers(extras, bundle.narma.u_scaler, bundle.narma.y_scaler,
                 "narma_f.txt");
    if (auto it = extras.find("delays"); it != extras.end() && it->second.size() == 2) {
      bundle.narma.input_delays = int(it->second[0]);
      bundle.narma.output_delays = int(it->second[1]);
    }
    if (auto it = extras.find("validation_rmse"); it != extras.end())
      bundle.narma.validation_rmse = it->second.at(0);
    if (auto it = extras.find("output_range"); it != extras.end())
      bundle.narma.output_range = it->second.at(0);
    if (auto it = extras.find("f_skip"); it != extras.end())
      bundle.narma.f_skip = Eigen::Map<const Eigen::VectorXd>(
          it->second.data(), static_cast<long>(it->second.size()));
  }
  {
    auto is = open("narma_g.txt");
    bundle.narma.g_net = load_mlp(is);
  }
  {
    auto is = open("mrc.txt");
    std::map<std::string, std::vector<double>> extras;
    bundle.mrc.controller_net = load_mlp(is, &extras);
    read_scalers(extras, bundle.mrc.u_scaler, bundle.mrc.y_scaler, "mrc.txt");
    const auto rm = extras.find("ref_model");
    if (rm == extras.end() || rm->second.size() != 3)
      throw ValidationError("mrc.txt: missing ref_model section");
    bundle.mrc.ref_model =
        ReferenceModel::create(rm->second[0], rm->second[1], rm->second[2]);
    if (auto it = extras.find("u_limits"); it != extras.end() && it->second.size() == 2) {
      bundle.mrc.u_lo = it->second[0];
      bundle.mrc.u_hi = it->second[1];
    }
    if (auto it = extras.find("training_loss"); it != extras.end())
      bundle.mrc.training_loss = it->second.at(0);
  }
  {
    std::ifstream is(dir + "/bundle_config.txt");
    if (!is)
      throw ValidationError("load_bundle: cannot open " + dir +
                            "/bundle_config.txt");
    std::string line;
    while (std::getline(is, line)) {
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ValidationError("bundle_config.txt: malformed line: " + line);
      const std::string key = trim(line.substr(0, eq));
      const double v = parse_double(key, trim(line.substr(eq + 1)));
      if (key == "u_lo") bundle.u_lo = v;
      else if (key == "u_hi") bundle.u_hi = v;
      else if (key == "nmpc_N1") bundle.nmpc_opts.horizon_N1 = int(v);
      else if (key == "nmpc_N2") bundle.nmpc_opts.horizon_N2 = int(v);
      else if (key == "nmpc_Nu") bundle.nmpc_opts.control_horizon_Nu = int(v);
      else if (key == "nmpc_rho") bundle.nmpc_opts.rho = v;
      else if (key == "nmpc_traj_pole") bundle.nmpc_opts.traj_pole = v;
      else if (key == "nmpc_max_iters") bundle.nmpc_opts.max_iters = int(v);
      else throw ValidationError("bundle_config.txt: unknown key '" + key + "'");
    }
    bundle.nmpc_opts.u_lo = bundle.u_lo;
    bundle.nmpc_opts.u_hi = bundle.u_hi;
  }
  return bundle;
}

}  // namespace steamflow
