#include <cmath>
#include <string>
#include <vector>

#include <catch2/catch_amalgamated.hpp>
#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "strawsim/csvio.hpp"
#include "strawsim/perception.hpp"

using nlohmann::json;

namespace {

std::string scenario(const char* name) {
  return std::string(STRAWSIM_SCENARIO_DIR) + "/" + name;
}

std::string golden(const char* name) {
  return std::string(STRAWSIM_GOLDEN_DIR) + "/" + name;
}

}  // namespace

TEST_CASE("kinematics-table prints the full servo range") {
  const auto res = proc::run_cli("kinematics-table");
  REQUIRE(res.exit_code == 0);
  const auto lines = proc::split_lines(res.out);
  REQUIRE(lines.size() > 10);
  CHECK(lines[0] == "phi_deg,theta_deg,r_mm,beta_deg");

  const auto first = proc::split_csv_row(lines[1]);
  REQUIRE(first.size() == 4);
  CHECK(first[0] == Catch::Approx(-40.0).margin(1e-6));
  CHECK(first[3] == Catch::Approx(60.0).margin(1e-6));

  const auto last = proc::split_csv_row(lines.back());
  CHECK(last[0] == Catch::Approx(28.3).margin(1e-6));
  CHECK(last[2] == Catch::Approx(40.0).margin(0.1));

  double prev_phi = -1e9;
  bool saw_zero = false;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto row = proc::split_csv_row(lines[i]);
    REQUIRE(row.size() == 4);
    CHECK(row[0] > prev_phi);
    prev_phi = row[0];
    if (std::abs(row[0]) < 1e-9) {
      saw_zero = true;
      CHECK(row[2] == Catch::Approx(0.0).margin(1e-6));
      CHECK(row[3] == Catch::Approx(0.0).margin(1e-6));
    }
  }
  CHECK(saw_zero);
}

TEST_CASE("config --dump emits the effective configuration") {
  const auto res = proc::run_cli("config --dump");
  REQUIRE(res.exit_code == 0);
  const json j = json::parse(res.out);
  CHECK(j["geometry"]["r1"].get<double>() == 10.0);
  CHECK(j["geometry"]["l_fin"].get<double>() == 60.0);
  CHECK(j["calibration"]["a"].get<double>() == 4000.0);
  CHECK(j["tick_ms"].get<int>() == 50);
  CHECK(j["pick"]["l_stem_mm"].get<double>() == 10.0);
}

TEST_CASE("config without --dump is a usage error") {
  CHECK(proc::run_cli("config").exit_code == 2);
}

TEST_CASE("usage errors exit with status 2") {
  CHECK(proc::run_cli("").exit_code == 2);
  CHECK(proc::run_cli("frobnicate").exit_code == 2);
  CHECK(proc::run_cli("simulate").exit_code == 2);
  CHECK(proc::run_cli("stem-test --n 0").exit_code == 2);
  CHECK(proc::run_cli("simulate --scenario a.json --bogus").exit_code == 2);
}

TEST_CASE("input errors exit with status 3") {
  CHECK(proc::run_cli("simulate --scenario /nonexistent/s.json").exit_code == 3);

  const std::string dir = proc::temp_dir("badscenario");
  const std::string bad = dir + "/bad.json";
  strawsim::write_text_file(bad, "{ this is not json");
  CHECK(proc::run_cli("simulate --scenario " + bad).exit_code == 3);

  const std::string noberries = dir + "/empty.json";
  strawsim::write_text_file(noberries, R"({"scene": {"berries": []}})");
  CHECK(proc::run_cli("simulate --scenario " + noberries).exit_code == 3);

  CHECK(proc::run_cli("calibrate --samples /nonexistent/cal.csv").exit_code == 3);
}

TEST_CASE("calibrate recovers the curve its samples came from") {
  const strawsim::CalibrationCurve truth = strawsim::default_calibration();
  std::string csv = "analog,distance_mm\n";
  for (double d = 8.0; d <= 70.0; d += 2.0) {
    csv += strawsim::fmt_fixed(truth.analog_at(d), 9) + "," + strawsim::fmt_fixed(d, 9) + "\n";
  }
  const std::string path = proc::temp_dir("calfit") + "/samples.csv";
  strawsim::write_text_file(path, csv);

  const auto res = proc::run_cli("calibrate --samples " + path);
  REQUIRE(res.exit_code == 0);
  const json j = json::parse(res.out);
  CHECK(j["rms_mm"].get<double>() <= 1e-6);
  CHECK(j["n_samples"].get<int>() == 32);
  CHECK(j["a"].get<double>() == Catch::Approx(4000.0).epsilon(1e-6));
  CHECK(j["b"].get<double>() == Catch::Approx(40.0).margin(1e-3));
  CHECK(j["c"].get<double>() == Catch::Approx(2.0).margin(1e-3));

  const std::string bad = proc::temp_dir("calbad") + "/samples.csv";
  strawsim::write_text_file(bad, "analog,distance_mm\n10,20,30\n");
  CHECK(proc::run_cli("calibrate --samples " + bad).exit_code == 3);
}

TEST_CASE("simulate runs the isolated scenario cleanly") {
  const std::string out = proc::temp_dir("simiso");
  const auto res =
      proc::run_cli("simulate --scenario " + scenario("isolated.json") + " --seed 1 --out " + out);
  REQUIRE(res.exit_code == 0);

  const json rep = json::parse(res.out);
  CHECK(rep["seed"].get<std::uint64_t>() == 1);
  CHECK(rep["n_berries"].get<int>() == 1);
  CHECK(rep["n_stored"].get<int>() == 1);
  CHECK(rep["success_rate"].get<double>() == 1.0);
  CHECK(rep["stem_mm"]["mean"].get<double>() == Catch::Approx(10.0).margin(1e-6));
  CHECK(rep["touch_violations"].get<int>() == 0);

  CHECK(json::parse(proc::slurp(out + "/report.json")) == rep);

  const auto summary = proc::split_lines(proc::slurp(out + "/summary.csv"));
  REQUIRE(summary.size() == 2);
  CHECK(summary[0].rfind("berry,attempted,stored,", 0) == 0);
  const auto row = proc::split_csv_fields(summary[1]);
  CHECK(row[1] == "1");
  CHECK(row[2] == "1");

  const auto trace = proc::split_lines(proc::slurp(out + "/trace.jsonl"));
  REQUIRE(!trace.empty());
  for (const auto& line : trace) CHECK_NOTHROW(json::parse(line));
  CHECK(json::parse(trace.front())["kind"] == "run_start");
  CHECK(json::parse(trace.back())["kind"] == "run_end");

  const auto centering = proc::split_lines(proc::slurp(out + "/centering_0.csv"));
  REQUIRE(centering.size() > 1);
  CHECK(centering[0] == "t_ms,error_x,error_y,cmd_x,cmd_y");
}

TEST_CASE("simulate honours a base config override from the environment") {
  const std::string cfg_path = proc::temp_dir("cfgover") + "/base.json";
  strawsim::write_text_file(cfg_path, R"({"pick": {"l_stem_mm": 8.0}})");

  const auto res = proc::run_cli("simulate --scenario " + scenario("isolated.json"),
                                 "STRAWSIM_CONFIG=" + cfg_path + " ");
  REQUIRE(res.exit_code == 0);
  const json rep = json::parse(res.out);
  CHECK(rep["stem_mm"]["mean"].get<double>() == Catch::Approx(8.0).margin(1e-6));

  // A malformed base config is an input error, not a crash.
  strawsim::write_text_file(cfg_path, "{ nope");
  CHECK(proc::run_cli("simulate --scenario " + scenario("isolated.json"),
                      "STRAWSIM_CONFIG=" + cfg_path + " ")
            .exit_code == 3);
}

TEST_CASE("simulate output is byte-identical across reruns") {
  const std::string a = proc::temp_dir("det_a");
  const std::string b = proc::temp_dir("det_b");
  const std::string cmd = "simulate --scenario " + scenario("three_berry.json") + " --seed 42";
  REQUIRE(proc::run_cli(cmd + " --out " + a).exit_code == 0);
  REQUIRE(proc::run_cli(cmd + " --out " + b).exit_code == 0);

  for (const char* f : {"trace.jsonl", "summary.csv", "report.json"}) {
    CHECK(proc::slurp(a + "/" + f) == proc::slurp(b + "/" + f));
  }
  CHECK(proc::slurp(a + "/centering_0.csv") == proc::slurp(b + "/centering_0.csv"));
}

TEST_CASE("bench experiment commands emit their CSV schemas") {
  const auto sweep = proc::run_cli("sweep-cut --offsets 0 --trials 3 --sigma 0 --seed 5");
  REQUIRE(sweep.exit_code == 0);
  const auto sl = proc::split_lines(sweep.out);
  REQUIRE(sl.size() == 2);
  CHECK(sl[0] == "offset_mm,success_rate,trials");
  const auto srow = proc::split_csv_fields(sl[1]);
  CHECK(srow[0] == "0.000");
  CHECK(std::stod(srow[1]) == 1.0);  // centred noiseless cuts always land
  CHECK(srow[2] == "3");

  const auto stem = proc::run_cli("stem-test --n 2 --sigma 0 --incline-max 0 --seed 5");
  REQUIRE(stem.exit_code == 0);
  const auto tl = proc::split_lines(stem.out);
  REQUIRE(tl.size() == 2);
  CHECK(tl[0] == "n_attempted,n_success,n_miss,n_body_cut,n_other,stem_mean_mm,stem_std_population_mm");
  const auto trow = proc::split_csv_fields(tl[1]);
  CHECK(trow[0] == "2");
  CHECK(trow[1] == "2");
  CHECK(std::stod(trow[5]) == Catch::Approx(10.0).margin(1e-3));

  const auto meas = proc::run_cli("measure-test --n 3 --sigma 0 --seed 5");
  REQUIRE(meas.exit_code == 0);
  const auto ml = proc::split_lines(meas.out);
  REQUIRE(ml.size() == 2);
  CHECK(ml[0] == "n_measured,mean_abs_err_mm,signed_err_mean_mm,signed_err_std_population_mm");
  const auto mrow = proc::split_csv_fields(ml[1]);
  CHECK(mrow[0] == "3");
  CHECK(std::stod(mrow[1]) <= 1e-3);
}

TEST_CASE("bundled scenario output matches the checked-in golden files") {
  const std::string out = proc::temp_dir("golden");
  REQUIRE(proc::run_cli("simulate --scenario " + scenario("isolated.json") + " --seed 1 --out " +
                        out)
              .exit_code == 0);
  CHECK(proc::slurp(out + "/summary.csv") == proc::slurp(golden("isolated_summary.csv")));
  CHECK(proc::slurp(out + "/report.json") == proc::slurp(golden("isolated_report.json")));

  const std::string out3 = proc::temp_dir("golden3");
  REQUIRE(proc::run_cli("simulate --scenario " + scenario("three_berry.json") + " --seed 42 --out " +
                        out3)
              .exit_code == 0);
  CHECK(proc::slurp(out3 + "/summary.csv") == proc::slurp(golden("three_berry_summary.csv")));
  CHECK(proc::slurp(out3 + "/report.json") == proc::slurp(golden("three_berry_report.json")));
}
