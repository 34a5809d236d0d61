// modalkin: file-based driver for calibration, simulation, contact detection,
// contact localization and ISA sweeps. Every command reads and writes plain
// files so runs can be chained and diffed.

#include "modalkin/calibration.hpp"
#include "modalkin/centrode.hpp"
#include "modalkin/estimation.hpp"
#include "modalkin/io.hpp"
#include "modalkin/kernels.hpp"
#include "modalkin/simulation.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace modalkin;

namespace {

enum Exit { kOk = 0, kError = 1, kRankFailure = 2, kNotConverged = 3 };

// JSON config for CLI11. Top-level scalars belong to the active subcommand
// unless they name a global option; an object keyed by a subcommand name
// applies to that subcommand only.
class JsonConfig : public CLI::Config {
 public:
  JsonConfig(std::string section, std::set<std::string> globals)
      : section_(std::move(section)), globals_(std::move(globals)) {}

  std::string to_config(const CLI::App*, bool, bool, std::string) const override {
    return "{}\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    nlohmann::json j;
    try {
      input >> j;
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConversionError(std::string("config: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config: top level must be a JSON object");
    std::vector<CLI::ConfigItem> items;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it.value().is_object()) {
        for (auto inner = it.value().begin(); inner != it.value().end(); ++inner) {
          items.push_back(item({it.key()}, inner.key(), inner.value()));
        }
      } else {
        const bool global = section_.empty() || globals_.count(it.key()) > 0;
        items.push_back(item(global ? std::vector<std::string>{}
                                    : std::vector<std::string>{section_},
                             it.key(), it.value()));
      }
    }
    return items;
  }

 private:
  static CLI::ConfigItem item(std::vector<std::string> parents, const std::string& name,
                              const nlohmann::json& value) {
    CLI::ConfigItem c;
    c.parents = std::move(parents);
    c.name = name;
    auto scalar = [&](const nlohmann::json& v) -> std::string {
      if (v.is_string()) return v.get<std::string>();
      if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
      if (v.is_number()) return v.dump();  // shortest round-trip form
      throw CLI::ConversionError("config: unsupported value for '" + name + "'");
    };
    if (value.is_array()) {
      for (const auto& v : value) c.inputs.push_back(scalar(v));
    } else {
      c.inputs.push_back(scalar(value));
    }
    return c;
  }

  std::string section_;
  std::set<std::string> globals_;
};

struct Common {
  std::string out_dir = ".";
  std::string model;
  std::uint64_t seed = 0;
  int jobs = 1;

  Exec exec() const { return jobs > 1 ? Exec::Parallel : Exec::Serial; }
  std::string out(const std::string& name) const { return (fs::path(out_dir) / name).string(); }
  std::string model_path() const { return model.empty() ? out("model.json") : model; }
};

struct CalibrateArgs {
  std::string input;
  int v = 3, w = 3, stations = 0;
  double unit_scale = kDefaultUnitScale;
};

struct SimulateArgs {
  std::string ramp = "5:20:0.05";
  std::string contact;
  std::string blend = "onset_preserving";
  double noise_pos = 0.0, noise_ang = 0.0;
};

struct DetectArgs {
  std::string stream;
  double xi = 0.0;  // 0: derive from a contact-free run
  int window = 3;
  double noise_pos = 0.0, noise_ang = 0.0;
};

struct EstimateArgs {
  std::string stream, detection;
  double s0 = 0.0;  // 0: half the backbone length
  double s_min = 0.0, s_max = 0.0;
  int max_iter = 100;
  std::string gradient = "fd";
  std::string blend = "onset_preserving";
  bool speed_weighting = false;
  double xi = 0.0;
  int window = 3;
};

struct SweepArgs {
  std::string ramp = "5:20:0.05";
  std::string locations = "0:400:50";
  std::string blend = "onset_preserving";
};

ModalModel load_model(const std::string& path) {
  return read_json_file(path).get<ModalModel>();
}

std::string csv_text(const auto& write, const auto& value) {
  std::ostringstream out;
  write(out, value);
  return out.str();
}

void prepare(const Common& c) {
  if (c.jobs < 1) throw std::invalid_argument("--jobs must be >= 1");
  set_threads(c.jobs);
  fs::create_directories(c.out_dir);
}

ContactSpec parse_contact(const std::string& text, DistalBlend blend) {
  const auto at = text.find('@');
  double s = 0.0, q = 0.0;
  if (at == std::string::npos || !csv::parse(text.substr(0, at), s) ||
      !csv::parse(text.substr(at + 1), q)) {
    throw std::invalid_argument("--contact '" + text + "': expected s_c@q_c");
  }
  return {s, q, blend};
}

std::vector<PoseSample> load_stream(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return read_pose_stream(in);
  } catch (const CsvError& e) {
    throw std::runtime_error(path + ":" + std::to_string(e.line()) + ": " + e.what());
  }
}

// Uniform ramp through the stream's pressures.
Ramp stream_ramp(const std::vector<PoseSample>& s) {
  const double step = (s.back().q - s.front().q) / static_cast<double>(s.size() - 1);
  const Ramp r(s.front().q, s.back().q, step);
  if (r.size() != s.size()) throw std::invalid_argument("stream pressures are not uniformly stepped");
  return r;
}

struct DetectionRun {
  Detection detection;
  CentrodeTrace sensed, model;
  double xi = 0.0;
};

DetectionRun run_detection(const ModalModel& m, const std::vector<PoseSample>& stream, double xi,
                           int window, const NoiseSpec& noise, std::uint64_t seed, Exec exec) {
  if (stream.size() < 3) {
    throw std::invalid_argument("stream too short: need at least 3 samples, got " +
                                std::to_string(stream.size()));
  }
  DetectionRun r;
  r.sensed = centrode_from_stream(stream);
  r.model = model_centrode_for_stream(m, stream, exec);
  r.xi = xi > 0.0 ? xi : default_threshold(m, stream_ramp(stream), noise, seed);
  r.detection = fcd_detect(r.sensed, r.model, r.xi, window);
  return r;
}

int cmd_calibrate(const Common& c, const CalibrateArgs& a) {
  std::vector<AnnotatedBackbone> backbones;
  try {
    backbones = load_calibration_csv(a.input);
  } catch (const CsvError& e) {
    std::cerr << "calibrate: " << a.input << ":" << e.line() << ": " << e.what() << "\n";
    return kError;
  }
  FitResult fit;
  try {
    fit = fit_modal(CalibrationDataset::from_backbones(std::move(backbones), a.stations), a.v, a.w,
                    a.unit_scale);
  } catch (const RankDeficientError& e) {
    std::cerr << "calibrate: " << e.what() << "\n";
    return kRankFailure;
  }
  write_text_file(c.out("model.json"), dump_json(fit.model));
  write_text_file(c.out("fit_report.json"), dump_json(fit.report));
  std::cout << "max backbone residual " << fit.report.max_backbone_err_mm() << " mm at "
            << fit.report.worst_pressure() << " Psi\n";
  if (fit.report.base_angle_flag) {
    std::cout << "warning: base tangent drifts by up to " << fit.report.max_base_angle_rad
              << " rad\n";
  }
  return kOk;
}

int cmd_simulate(const Common& c, const SimulateArgs& a) {
  const ModalModel m = load_model(c.model_path());
  const Ramp ramp = Ramp::parse(a.ramp);
  std::optional<ContactSpec> contact;
  if (!a.contact.empty()) {
    contact = parse_contact(a.contact, distal_blend_from_string(a.blend));
    if (!(contact->s_c > 0.0 && contact->s_c < m.length)) {
      throw std::out_of_range("--contact: s_c must lie in (0, " + csv::format(m.length) + ")");
    }
  }
  const auto stream = simulate_stream(m, ramp, contact, {a.noise_pos, a.noise_ang}, c.seed);
  write_text_file(c.out("stream.csv"), csv_text(write_pose_stream, stream));
  std::cout << stream.size() << " samples\n";
  return kOk;
}

nlohmann::json detection_json(const DetectionRun& r, const std::vector<PoseSample>& stream,
                              int window) {
  nlohmann::json j = r.detection;
  j["onset_index"] = r.detection.detected ? nlohmann::json(r.detection.onset_index)
                                          : nlohmann::json(nullptr);
  j["q_at_onset"] = r.detection.detected ? nlohmann::json(stream[r.detection.onset_index].q)
                                         : nlohmann::json(nullptr);
  j["xi"] = r.xi;
  j["window"] = window;
  j["samples"] = stream.size();
  return j;
}

int cmd_detect(const Common& c, const DetectArgs& a) {
  const ModalModel m = load_model(c.model_path());
  const auto stream = load_stream(a.stream.empty() ? c.out("stream.csv") : a.stream);
  DetectionRun r;
  try {
    r = run_detection(m, stream, a.xi, a.window, {a.noise_pos, a.noise_ang}, c.seed, c.exec());
  } catch (const std::invalid_argument& e) {
    std::cerr << "detect: " << e.what() << "\n";
    return kError;
  }
  write_text_file(c.out("centrode_sensed.csv"), csv_text(write_centrode, r.sensed));
  write_text_file(c.out("centrode_model.csv"), csv_text(write_centrode, r.model));
  write_text_file(c.out("detection.json"), dump_json(detection_json(r, stream, a.window)));
  if (r.detection.detected) {
    std::cout << "contact detected at t=" << r.detection.onset_t
              << " q=" << stream[r.detection.onset_index].q << "\n";
  } else {
    std::cout << "no contact detected\n";
  }
  return kOk;
}

int cmd_estimate(const Common& c, const EstimateArgs& a) {
  const ModalModel m = load_model(c.model_path());
  const auto stream = load_stream(a.stream.empty() ? c.out("stream.csv") : a.stream);

  std::size_t onset = 0;
  const std::string det_path = a.detection.empty() ? c.out("detection.json") : a.detection;
  if (fs::exists(det_path)) {
    const nlohmann::json d = read_json_file(det_path);
    if (!d.value("detected", false)) throw std::invalid_argument("no contact in " + det_path);
    onset = d.at("onset_index").get<std::size_t>();
  } else {
    const DetectionRun r = run_detection(m, stream, a.xi, a.window, {}, c.seed, c.exec());
    if (!r.detection.detected) throw std::invalid_argument("no contact detected in the stream");
    onset = r.detection.onset_index;
  }
  if (onset + 3 > stream.size()) {
    throw std::invalid_argument("fewer than 3 samples after the contact onset");
  }

  // The contacted part of the stream, renumbered from t = 0.
  std::vector<PoseSample> tail(stream.begin() + static_cast<std::ptrdiff_t>(onset), stream.end());
  for (std::size_t k = 0; k < tail.size(); ++k) tail[k].t = static_cast<std::int64_t>(k);

  EstimationProblem p;
  p.model = m;
  p.ramp = stream_ramp(tail);
  p.sensed = centrode_from_stream(tail);
  p.s0 = a.s0 > 0.0 ? a.s0 : 0.5 * m.length;
  p.s_min = a.s_min;
  p.s_max = a.s_max;
  p.sensed_end_tip = tail.back().pose.position();
  p.speed_weighting = a.speed_weighting;
  p.blend = distal_blend_from_string(a.blend);

  EstimationOptions o;
  o.max_iter = a.max_iter;
  o.exec = c.exec();
  if (a.gradient == "analytic") {
    o.gradient = GradientMethod::Analytic;
  } else if (a.gradient != "fd") {
    throw std::invalid_argument("--gradient must be fd or analytic");
  }

  const EstimationReport r = estimate_contact(p, o);
  nlohmann::json j = r;
  j["s0"] = p.s0;
  j["q_onset"] = p.ramp.start;
  j["onset_index"] = onset;
  j["blend"] = to_string(p.blend);
  write_text_file(c.out("estimate.json"), dump_json(j));

  std::ostringstream trace;
  trace << "iter,s_c,objective\n";
  for (const auto& it : r.trace) {
    trace << it.iter << ',' << csv::format(it.s_c) << ',' << csv::format(it.objective) << '\n';
  }
  write_text_file(c.out("estimate_trace.csv"), trace.str());

  std::cout << "s_c = " << csv::format(r.s_c) << " after " << r.iterations << " iterations"
            << (r.converged ? "" : " (not converged)") << "\n";
  return r.converged ? kOk : kNotConverged;
}

int cmd_sweep(const Common& c, const SweepArgs& a) {
  const ModalModel m = load_model(c.model_path());
  const Ramp ramp = Ramp::parse(a.ramp);
  const std::vector<double> locations = Ramp::parse(a.locations).values();
  const auto sweep = isa_sweep(m, ramp, locations, distal_blend_from_string(a.blend), c.exec());

  std::ostringstream summary, history;
  summary << "s_c,max_isa,argmax_t,argmax_q\n";
  history << "s_c,t,q,valid,isa\n";
  for (const auto& e : sweep) {
    summary << csv::format(e.s_c) << ',' << csv::format(e.isa.max) << ',' << e.isa.argmax << ','
            << csv::format(ramp.at(e.isa.argmax)) << '\n';
    for (std::size_t k = 0; k < e.isa.series.size(); ++k) {
      const double d = e.isa.series[k];
      const bool valid = !std::isnan(d);
      history << csv::format(e.s_c) << ',' << k << ',' << csv::format(ramp.at(k)) << ','
              << (valid ? 1 : 0) << ',' << csv::format(valid ? d : 0.0) << '\n';
    }
  }
  write_text_file(c.out("isa_sweep.csv"), summary.str());
  write_text_file(c.out("isa_history.csv"), history.str());
  return kOk;
}

std::string active_subcommand(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    for (const char* name : {"calibrate", "simulate", "detect", "estimate", "sweep"}) {
      if (arg == name) return arg;
    }
  }
  return {};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Modal kinematics, centrode contact detection and contact localization"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "JSON file with option values");
  app.allow_config_extras(false);

  Common common;
  app.add_option("--out-dir", common.out_dir, "Directory for output files")->capture_default_str();
  app.add_option("--model", common.model, "Model JSON (default: <out-dir>/model.json)");
  app.add_option("--seed", common.seed, "Noise seed")->capture_default_str();
  app.add_option("--jobs", common.jobs, "Worker threads")->capture_default_str();
  app.config_formatter(std::make_shared<JsonConfig>(
      active_subcommand(argc, argv), std::set<std::string>{"out-dir", "model", "seed", "jobs"}));

  CalibrateArgs cal;
  auto* calibrate = app.add_subcommand("calibrate", "Fit a modal model to annotated backbones");
  calibrate->add_option("--input", cal.input, "pressure_psi,point_index,x,z CSV")->required();
  calibrate->add_option("--v", cal.v, "Arc-length basis size")->capture_default_str();
  calibrate->add_option("--w", cal.w, "Pressure basis size")->capture_default_str();
  calibrate->add_option("--stations", cal.stations, "Common stations (0: fewest points)");
  calibrate->add_option("--unit-scale", cal.unit_scale, "mm per LU")->capture_default_str();

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Tip pose stream along a pressure ramp");
  simulate->add_option("--ramp", sim.ramp, "start:end:step (Psi)")->capture_default_str();
  simulate->add_option("--contact", sim.contact, "Contact s_c@q_c");
  simulate->add_option("--blend", sim.blend, "onset_preserving, rebased or literal")
      ->capture_default_str();
  simulate->add_option("--noise-pos", sim.noise_pos, "Position noise sigma (LU)");
  simulate->add_option("--noise-ang", sim.noise_ang, "Angle noise sigma (rad)");

  DetectArgs det;
  auto* detect = app.add_subcommand("detect", "Fixed-centrode contact detection");
  detect->add_option("--stream", det.stream, "Pose stream CSV (default: <out-dir>/stream.csv)");
  detect->add_option("--xi", det.xi, "Threshold (LU; default from a contact-free run)");
  detect->add_option("--window", det.window, "Consecutive samples above xi")->capture_default_str();
  detect->add_option("--noise-pos", det.noise_pos, "Noise assumed for the default threshold");
  detect->add_option("--noise-ang", det.noise_ang, "Noise assumed for the default threshold");

  EstimateArgs est;
  auto* estimate = app.add_subcommand("estimate", "Contact location from the sensed centrode");
  estimate->add_option("--stream", est.stream, "Pose stream CSV (default: <out-dir>/stream.csv)");
  estimate->add_option("--detection", est.detection,
                       "Detection JSON (default: <out-dir>/detection.json, else detect here)");
  estimate->add_option("--s0", est.s0, "Initial guess (LU; default L/2)");
  estimate->add_option("--s-min", est.s_min, "Lower bound (default 0.01 L)");
  estimate->add_option("--s-max", est.s_max, "Upper bound (default 0.99 L)");
  estimate->add_option("--max-iter", est.max_iter, "Iteration cap")->capture_default_str();
  estimate->add_option("--gradient", est.gradient, "fd or analytic")->capture_default_str();
  estimate->add_option("--blend", est.blend, "onset_preserving, rebased or literal")
      ->capture_default_str();
  estimate->add_flag("--speed-weighting", est.speed_weighting, "Down-weight fast centrode samples");
  estimate->add_option("--xi", est.xi, "Threshold when detecting here");
  estimate->add_option("--window", est.window, "Window when detecting here");

  SweepArgs sw;
  auto* sweep = app.add_subcommand("sweep", "ISA difference over contact locations");
  sweep->add_option("--ramp", sw.ramp, "start:end:step (Psi)")->capture_default_str();
  sweep->add_option("--locations", sw.locations, "start:end:step (LU)")->capture_default_str();
  sweep->add_option("--blend", sw.blend, "onset_preserving, rebased or literal")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    prepare(common);
    if (*calibrate) return cmd_calibrate(common, cal);
    if (*simulate) return cmd_simulate(common, sim);
    if (*detect) return cmd_detect(common, det);
    if (*estimate) return cmd_estimate(common, est);
    if (*sweep) return cmd_sweep(common, sw);
  } catch (const std::exception& e) {
    std::cerr << "modalkin: " << e.what() << "\n";
    return kError;
  }
  return kError;
}
