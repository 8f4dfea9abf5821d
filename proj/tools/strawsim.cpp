// Command-line front-end for the gripper simulator: scenario execution,
// bench experiments, kinematic tables, and calibration fitting.
#include <cstdio>
#include <exception>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "strawsim/config.hpp"
#include "strawsim/csvio.hpp"
#include "strawsim/experiments.hpp"
#include "strawsim/kinematics.hpp"
#include "strawsim/perception.hpp"
#include "strawsim/pick.hpp"
#include "strawsim/report.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitParse = 3;

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty()) {
    std::fputs(content.c_str(), stdout);
  } else {
    strawsim::write_text_file(out_path, content);
  }
}

int cmd_simulate(const std::string& scenario_path, std::uint64_t seed, bool seed_given,
                 const std::string& out_dir) {
  using namespace strawsim;
  const Scenario sc = load_scenario(scenario_path, base_config_from_env());
  const std::uint64_t run_seed = seed_given ? seed : sc.scene.seed;

  const PickTrace trace = run_pick_cycle(sc.scene, sc.config, run_seed);
  const RunReport report = build_report(trace);

  nlohmann::json jrep = report;
  jrep["seed"] = run_seed;

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    write_text_file((dir / "trace.jsonl").string(), trace_to_jsonl(trace));
    write_text_file((dir / "summary.csv").string(), summary_to_csv(trace));
    write_text_file((dir / "report.json").string(), jrep.dump(2) + "\n");
    for (std::size_t i = 0; i < trace.centering.size(); ++i) {
      if (trace.centering[i].empty()) continue;
      const std::string name = "centering_" + std::to_string(i) + ".csv";
      write_text_file((dir / name).string(), centering_to_csv(trace.centering[i]));
    }
  }
  std::fputs((jrep.dump(2) + "\n").c_str(), stdout);
  return kExitOk;
}

int cmd_sweep_cut(const std::string& offsets_arg, int trials, std::uint64_t seed, double sigma,
                  const std::string& out_path) {
  using namespace strawsim;
  SimConfig cfg = base_config_from_env();
  if (sigma >= 0.0) cfg.noise.sigma_mm = sigma;

  std::vector<double> offsets;
  std::stringstream ss(offsets_arg);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    std::size_t pos = 0;
    offsets.push_back(std::stod(tok, &pos));
    if (pos != tok.size()) throw CLI::ValidationError("--offsets", "malformed number: " + tok);
  }
  if (offsets.empty()) throw CLI::ValidationError("--offsets", "no offsets given");

  const auto rows = run_cut_sweep(cfg, offsets, trials, seed);
  std::string csv = "offset_mm,success_rate,trials\n";
  for (const auto& r : rows) {
    csv += fmt_fixed(r.offset_mm, 3);
    csv += ',';
    csv += fmt_fixed(r.success_rate);
    csv += ',';
    csv += std::to_string(r.trials);
    csv += '\n';
  }
  emit(out_path, csv);
  return kExitOk;
}

int cmd_stem_test(double l_stem, int n, double incline_max, std::uint64_t seed, double sigma,
                  const std::string& out_path) {
  using namespace strawsim;
  SimConfig cfg = base_config_from_env();
  if (sigma >= 0.0) cfg.noise.sigma_mm = sigma;

  const StemTestResult res = run_stem_test(cfg, l_stem, n, incline_max, seed);
  std::string csv =
      "n_attempted,n_success,n_miss,n_body_cut,n_other,stem_mean_mm,stem_std_population_mm\n";
  csv += std::to_string(res.n_attempted);
  csv += ',';
  csv += std::to_string(res.n_success);
  csv += ',';
  csv += std::to_string(res.n_miss);
  csv += ',';
  csv += std::to_string(res.n_body_cut);
  csv += ',';
  csv += std::to_string(res.n_other);
  csv += ',';
  csv += fmt_fixed(res.stem_mm.mean);
  csv += ',';
  csv += fmt_fixed(res.stem_mm.stddev);
  csv += '\n';
  emit(out_path, csv);
  return kExitOk;
}

int cmd_measure_test(int n, std::uint64_t seed, double sigma, const std::string& out_path) {
  using namespace strawsim;
  SimConfig cfg = base_config_from_env();
  if (sigma >= 0.0) cfg.noise.sigma_mm = sigma;

  const MeasureResult res = run_measure_test(cfg, n, seed);
  std::string csv =
      "n_measured,mean_abs_err_mm,signed_err_mean_mm,signed_err_std_population_mm\n";
  csv += std::to_string(res.n_measured);
  csv += ',';
  csv += fmt_fixed(res.mean_abs_err);
  csv += ',';
  csv += fmt_fixed(res.signed_err.mean);
  csv += ',';
  csv += fmt_fixed(res.signed_err.stddev);
  csv += '\n';
  emit(out_path, csv);
  return kExitOk;
}

int cmd_kinematics_table(double step_deg, const std::string& out_path) {
  using namespace strawsim;
  const SimConfig cfg = base_config_from_env();
  const auto rows = kinematics_table(cfg.geometry, deg2rad(step_deg));
  std::string csv = "phi_deg,theta_deg,r_mm,beta_deg\n";
  for (const auto& r : rows) {
    csv += fmt_fixed(rad2deg(r.phi));
    csv += ',';
    csv += fmt_fixed(rad2deg(r.theta));
    csv += ',';
    csv += fmt_fixed(r.r);
    csv += ',';
    csv += fmt_fixed(rad2deg(r.beta));
    csv += '\n';
  }
  emit(out_path, csv);
  return kExitOk;
}

int cmd_calibrate(const std::string& samples_path, const std::string& out_path) {
  using namespace strawsim;
  const auto samples = read_calibration_csv(samples_path);
  const CalibrationFit fit = fit_calibration(samples);
  nlohmann::json j = fit.curve;
  j["rms_mm"] = fit.rms;
  j["n_samples"] = samples.size();
  emit(out_path, j.dump(2) + "\n");
  return kExitOk;
}

int cmd_config_dump() {
  using namespace strawsim;
  const nlohmann::json j = base_config_from_env();
  std::fputs((j.dump(2) + "\n").c_str(), stdout);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cable-driven strawberry gripper simulator"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_arg;
  std::uint64_t seed = 1;
  bool seed_given = false;
  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "Random seed")->each([&](const std::string&) {
      seed_given = true;
    });
  };

  auto* sim = app.add_subcommand("simulate", "Run a picking scenario");
  sim->add_option("--scenario", scenario_path, "Scenario JSON path")->required();
  sim->add_option("--out", out_arg, "Output directory for trace/summary/report");
  add_seed(sim);

  std::string offsets_arg = "0,2,-2,4,-4,6,-6,8,-8";
  int trials = 200;
  double sigma = -1.0;  // negative: keep the configured value
  auto* sweep = app.add_subcommand("sweep-cut", "Success rate vs lateral cutting offset");
  sweep->add_option("--offsets", offsets_arg, "Comma-separated offsets in mm");
  sweep->add_option("--trials", trials, "Trials per offset")->check(CLI::PositiveNumber);
  sweep->add_option("--sigma", sigma, "Sensor noise sigma override in mm");
  sweep->add_option("--out", out_arg, "Output CSV path (default stdout)");
  add_seed(sweep);

  double l_stem = 10.0;
  int n_berries = 100;
  double incline_max = 20.0;
  auto* stem = app.add_subcommand("stem-test", "Stem length control statistics");
  stem->add_option("--l-stem", l_stem, "Preset stem length in mm");
  stem->add_option("--n", n_berries, "Number of berries")->check(CLI::PositiveNumber);
  stem->add_option("--incline-max", incline_max, "Maximum berry incline in degrees");
  stem->add_option("--sigma", sigma, "Sensor noise sigma override in mm");
  stem->add_option("--out", out_arg, "Output CSV path (default stdout)");
  add_seed(stem);

  auto* meas = app.add_subcommand("measure-test", "Shoulder diameter estimation error");
  meas->add_option("--n", n_berries, "Number of berries")->check(CLI::PositiveNumber);
  meas->add_option("--sigma", sigma, "Sensor noise sigma override in mm");
  meas->add_option("--out", out_arg, "Output CSV path (default stdout)");
  add_seed(meas);

  double step_deg = 1.0;
  auto* kin = app.add_subcommand("kinematics-table", "Forward kinematics over the servo range");
  kin->add_option("--step-deg", step_deg, "Sample step in degrees")->check(CLI::PositiveNumber);
  kin->add_option("--out", out_arg, "Output CSV path (default stdout)");

  std::string samples_path;
  auto* cal = app.add_subcommand("calibrate", "Fit the IR calibration curve to samples");
  cal->add_option("--samples", samples_path, "CSV of analog,distance_mm")->required();
  cal->add_option("--out", out_arg, "Output JSON path (default stdout)");

  bool dump = false;
  auto* conf = app.add_subcommand("config", "Configuration inspection");
  conf->add_flag("--dump", dump, "Print the effective configuration as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (sim->parsed()) return cmd_simulate(scenario_path, seed, seed_given, out_arg);
    if (sweep->parsed()) return cmd_sweep_cut(offsets_arg, trials, seed, sigma, out_arg);
    if (stem->parsed()) return cmd_stem_test(l_stem, n_berries, incline_max, seed, sigma, out_arg);
    if (meas->parsed()) return cmd_measure_test(n_berries, seed, sigma, out_arg);
    if (kin->parsed()) return cmd_kinematics_table(step_deg, out_arg);
    if (cal->parsed()) return cmd_calibrate(samples_path, out_arg);
    if (conf->parsed()) {
      if (!dump) {
        std::fputs("config: nothing to do (use --dump)\n", stderr);
        return kExitUsage;
      }
      return cmd_config_dump();
    }
  } catch (const CLI::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const strawsim::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitParse;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return kExitUsage;
}
