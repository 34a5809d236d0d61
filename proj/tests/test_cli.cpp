#include "modalkin/io.hpp"
#include "modalkin/modal_basis.hpp"

#include <doctest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string kCli = MODALKIN_CLI;
const fs::path kScratch = MODALKIN_SCRATCH;
const std::string kDataset = std::string(MODALKIN_DATA_DIR) + "/bellow_calibration.csv";

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = kScratch / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = "\"" + kCli + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(read(p)); }

std::size_t data_rows(const fs::path& csv) {
  const std::string text = read(csv);
  std::size_t lines = 0;
  for (char ch : text) lines += ch == '\n';
  return lines - 1;
}

// Calibrated model shared by the cases below.
const fs::path& model_dir() {
  static const fs::path dir = [] {
    const fs::path d = fresh_dir("model");
    REQUIRE(run("calibrate --input \"" + kDataset + "\" --out-dir \"" + d.string() + "\"") == 0);
    return d;
  }();
  return dir;
}

std::string model_arg() { return " --model \"" + (model_dir() / "model.json").string() + "\""; }
std::string out_arg(const fs::path& d) { return " --out-dir \"" + d.string() + "\""; }

}  // namespace

TEST_CASE("calibrate writes a model and a report") {
  const fs::path d = model_dir();
  const auto report = read_json(d / "fit_report.json");
  double worst = 0.0, worst_q = 0.0;
  for (const auto& p : report["per_pressure"]) {
    const double e = p["max_backbone_err_mm"].get<double>();
    if (e > worst) {
      worst = e;
      worst_q = p["q"].get<double>();
    }
  }
  CHECK(worst < 2.1);
  CHECK(worst_q == 21.0);
  const auto model = read_json(d / "model.json").get<modalkin::ModalModel>();
  CHECK(model.A.rows() == 3);
  CHECK(model.A.cols() == 3);
}

TEST_CASE("calibrate exit codes") {
  const fs::path d = fresh_dir("calibrate_errors");
  std::ofstream(d / "empty.csv").close();
  CHECK(run("calibrate --input \"" + (d / "empty.csv").string() + "\"" + out_arg(d)) == 1);
  CHECK(run("calibrate --input \"" + (d / "missing.csv").string() + "\"" + out_arg(d)) == 1);

  std::ofstream bad(d / "bad.csv");
  bad << "pressure_psi,point_index,x,z\n5,0,0,0\n5,1,oops,1\n";
  bad.close();
  CHECK(run("calibrate --input \"" + (d / "bad.csv").string() + "\"" + out_arg(d)) == 1);

  // 2 pressures x 3 stations = 6 samples for 9 coefficients
  std::ofstream under(d / "under.csv");
  under << "pressure_psi,point_index,x,z\n"
           "5,0,0,0\n5,1,10,0.1\n5,2,20,0.5\n"
           "10,0,0,0\n10,1,10,0.3\n10,2,20,1.2\n";
  under.close();
  CHECK(run("calibrate --input \"" + (d / "under.csv").string() + "\"" + out_arg(d)) == 2);
  CHECK_FALSE(fs::exists(d / "model.json"));
}

TEST_CASE("simulate sample counts") {
  const fs::path d = fresh_dir("simulate");
  REQUIRE(run("simulate --ramp 5:20:0.05" + model_arg() + out_arg(d)) == 0);
  CHECK(data_rows(d / "stream.csv") == 301);
  const std::string text = read(d / "stream.csv");
  CHECK(text.rfind("t,q,x,z,theta\n", 0) == 0);
  CHECK(text.find('\r') == std::string::npos);

  REQUIRE(run("simulate --ramp 8:8:0.05" + model_arg() + out_arg(d)) == 0);
  CHECK(data_rows(d / "stream.csv") == 1);

  CHECK(run("simulate --contact 0@5" + model_arg() + out_arg(d)) == 1);
  CHECK(run("simulate --contact 100000@5" + model_arg() + out_arg(d)) == 1);
  CHECK(run("simulate --contact 100" + model_arg() + out_arg(d)) == 1);
  CHECK(run("simulate --ramp 5:20:0" + model_arg() + out_arg(d)) == 1);
}

TEST_CASE("detect on free and contacted streams") {
  const fs::path free_dir = fresh_dir("detect_free");
  REQUIRE(run("simulate --ramp 5:20:0.05" + model_arg() + out_arg(free_dir)) == 0);
  REQUIRE(run("detect" + model_arg() + out_arg(free_dir)) == 0);
  const auto free_result = read_json(free_dir / "detection.json");
  CHECK(free_result["detected"] == false);
  CHECK(free_result["onset_t"].is_null());
  CHECK(data_rows(free_dir / "centrode_sensed.csv") == 301);
  CHECK(data_rows(free_dir / "centrode_model.csv") == 301);

  const fs::path hit = fresh_dir("detect_contact");
  REQUIRE(run("simulate --ramp 0:20:0.05 --contact 100@5" + model_arg() + out_arg(hit)) == 0);
  REQUIRE(run("detect" + model_arg() + out_arg(hit)) == 0);
  const auto result = read_json(hit / "detection.json");
  CHECK(result["detected"] == true);
  CHECK(result["q_at_onset"].get<double>() >= 5.0);
  CHECK(result["q_at_onset"].get<double>() <= 5.5);
}

TEST_CASE("detect rejects a two-sample stream") {
  const fs::path d = fresh_dir("detect_short");
  REQUIRE(run("simulate --ramp 5:5.05:0.05" + model_arg() + out_arg(d)) == 0);
  REQUIRE(data_rows(d / "stream.csv") == 2);
  CHECK(run("detect" + model_arg() + out_arg(d)) == 1);
}

TEST_CASE("estimate from both initial guesses") {
  const fs::path d = fresh_dir("estimate");
  REQUIRE(run("simulate --ramp 5:20:0.05 --contact 100@5" + model_arg() + out_arg(d)) == 0);
  REQUIRE(run("detect" + model_arg() + out_arg(d)) == 0);

  CHECK(run("estimate --s0 200" + model_arg() + out_arg(d)) == 0);
  auto r = read_json(d / "estimate.json");
  CHECK(r["converged"] == true);
  CHECK(std::abs(r["s_c_est"].get<double>() - 100.0) <= 0.5);
  CHECK(r["end_tip_error_LU"].get<double>() <= 0.1);
  CHECK(read(d / "estimate_trace.csv").rfind("iter,s_c,objective\n0,200,", 0) == 0);

  CHECK(run("estimate --s0 20" + model_arg() + out_arg(d)) == 0);
  r = read_json(d / "estimate.json");
  CHECK(std::abs(r["s_c_est"].get<double>() - 100.0) <= 0.5);
  CHECK(r["end_tip_error_LU"].get<double>() <= 0.89);

  CHECK(run("estimate --s0 200 --max-iter 1" + model_arg() + out_arg(d)) == 3);
  r = read_json(d / "estimate.json");
  CHECK(r["converged"] == false);
  CHECK(r["final_objective"].get<double>() < r["initial_objective"].get<double>());
}

TEST_CASE("estimate without a detected contact fails") {
  const fs::path d = fresh_dir("estimate_free");
  REQUIRE(run("simulate --ramp 5:20:0.25" + model_arg() + out_arg(d)) == 0);
  REQUIRE(run("detect" + model_arg() + out_arg(d)) == 0);
  CHECK(run("estimate" + model_arg() + out_arg(d)) == 1);
}

TEST_CASE("config file supplies options and rejects unknown keys") {
  const fs::path d = fresh_dir("config");
  std::ofstream(d / "run.json") << R"({"ramp": "5:6:0.25", "contact": "120@5", "seed": 4})";
  REQUIRE(run("simulate --config \"" + (d / "run.json").string() + "\"" + model_arg() +
              out_arg(d)) == 0);
  CHECK(data_rows(d / "stream.csv") == 5);

  // command-line flags take precedence over the file
  REQUIRE(run("simulate --ramp 5:6:0.5 --config \"" + (d / "run.json").string() + "\"" +
              model_arg() + out_arg(d)) == 0);
  CHECK(data_rows(d / "stream.csv") == 3);

  std::ofstream(d / "nested.json") << R"({"simulate": {"ramp": "5:5.5:0.25"}})";
  REQUIRE(run("simulate --config \"" + (d / "nested.json").string() + "\"" + model_arg() +
              out_arg(d)) == 0);
  CHECK(data_rows(d / "stream.csv") == 3);

  std::ofstream(d / "typo.json") << R"({"rmap": "5:6:0.25"})";
  CHECK(run("simulate --config \"" + (d / "typo.json").string() + "\"" + model_arg() +
            out_arg(d)) != 0);
}

TEST_CASE("sweep writes one summary row per location") {
  const fs::path d = fresh_dir("sweep");
  REQUIRE(run("sweep --ramp 5:20:0.25 --locations 0:400:100 --jobs 2" + model_arg() +
              out_arg(d)) == 0);
  CHECK(data_rows(d / "isa_sweep.csv") == 5);
  CHECK(data_rows(d / "isa_history.csv") == 5 * 61);
  CHECK(read(d / "isa_sweep.csv").rfind("s_c,max_isa,argmax_t,argmax_q\n0,0,", 0) == 0);
  CHECK(run("sweep --locations 0:1000:100" + model_arg() + out_arg(d)) == 1);
}

TEST_CASE("identical runs give byte-identical files") {
  auto pipeline = [](const std::string& name, int jobs) {
    const fs::path d = fresh_dir(name);
    const std::string common = model_arg() + out_arg(d) + " --jobs " + std::to_string(jobs);
    REQUIRE(run("simulate --ramp 5:20:0.1 --contact 150@5 --noise-pos 0.01 --seed 9" + common) ==
            0);
    REQUIRE(run("detect --seed 9 --noise-pos 0.01" + common) == 0);
    REQUIRE(run("estimate --s0 300" + common) == 0);
    REQUIRE(run("sweep --ramp 5:20:0.25 --locations 0:400:50" + common) == 0);
    return d;
  };
  const fs::path a = pipeline("determinism_a", 1);
  const fs::path b = pipeline("determinism_b", 1);
  const fs::path c = pipeline("determinism_c", 3);
  for (const char* f : {"stream.csv", "centrode_sensed.csv", "centrode_model.csv",
                        "detection.json", "estimate.json", "estimate_trace.csv", "isa_sweep.csv",
                        "isa_history.csv"}) {
    CAPTURE(f);
    CHECK(read(a / f) == read(b / f));
    CHECK(read(a / f) == read(c / f));
  }
}

TEST_CASE("simulate, detect and estimate close the loop") {
  const auto model = read_json(model_dir() / "model.json").get<modalkin::ModalModel>();
  const double L = model.length;
  for (double fraction : {0.1, 0.35, 0.62, 0.9}) {
    const double truth = fraction * L;
    CAPTURE(truth);
    const fs::path d = fresh_dir("closure");
    const std::string common = model_arg() + out_arg(d);
    REQUIRE(run("simulate --ramp 5:20:0.1 --contact " + modalkin::csv::format(truth) + "@5" +
                common) == 0);
    REQUIRE(run("detect" + common) == 0);
    REQUIRE(run("estimate" + common) == 0);
    CHECK(std::abs(read_json(d / "estimate.json")["s_c_est"].get<double>() - truth) <= 1.0);
  }
}
