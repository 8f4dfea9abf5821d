#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "strawsim/config.hpp"
#include "strawsim/csvio.hpp"
#include "strawsim/pick.hpp"

namespace strawsim {

struct Stats {
  double mean{};
  double stddev{};  ///< population form (divide by n)
  int n{};
};

inline Stats compute_stats(const std::vector<double>& xs) {
  Stats s;
  s.n = static_cast<int>(xs.size());
  if (s.n == 0) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / s.n;
  double var = 0.0;
  for (double x : xs) var += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(var / s.n);
  return s;
}

/// Aggregates of one picking run.
struct RunReport {
  int n_berries{};
  int n_attempted{};
  int n_stored{};
  int n_miss{};
  int n_body_cut{};
  int n_failed_other{};
  double success_rate{};  ///< stored / attempted
  Stats stem_mm;          ///< over stored fruit
  Stats d_sec_err_mm;     ///< signed, over attempts that measured the target
  Stats approach_s, open_s, lift_s, center_s, z_adjust_s, cut_s, store_s;
  double continuous_per_berry_s{};  ///< cycle time, first approach excluded
  double full_per_berry_s{};        ///< wall time of the whole run per attempt
  double total_s{};
  int dispense_count{};
  double min_clearance_mm{std::numeric_limits<double>::infinity()};
  int touch_violations{};
};

inline RunReport build_report(const PickTrace& trace) {
  RunReport r;
  r.n_berries = static_cast<int>(trace.berries.size());
  std::vector<double> stems, dsec, t_app, t_open, t_lift, t_center, t_z, t_cut, t_store, cont;
  for (const auto& b : trace.berries) {
    if (!b.attempted) continue;
    ++r.n_attempted;
    if (b.stored) {
      ++r.n_stored;
      stems.push_back(b.stem_mm);
    } else if (b.fail_reason == "miss") {
      ++r.n_miss;
    } else if (b.fail_reason == "body_cut") {
      ++r.n_body_cut;
    } else {
      ++r.n_failed_other;
    }
    if (std::isfinite(b.d_sec_err_mm)) dsec.push_back(b.d_sec_err_mm);
    t_app.push_back(b.phases.approach_ms / 1000.0);
    t_open.push_back(b.phases.open_ms / 1000.0);
    t_lift.push_back(b.phases.lift_ms / 1000.0);
    t_center.push_back(b.phases.center_ms / 1000.0);
    t_z.push_back(b.phases.z_adjust_ms / 1000.0);
    t_cut.push_back(b.phases.cut_ms / 1000.0);
    t_store.push_back(b.phases.store_ms / 1000.0);
    cont.push_back(b.continuous_ms / 1000.0);
  }
  r.success_rate = r.n_attempted > 0 ? static_cast<double>(r.n_stored) / r.n_attempted : 0.0;
  r.stem_mm = compute_stats(stems);
  r.d_sec_err_mm = compute_stats(dsec);
  r.approach_s = compute_stats(t_app);
  r.open_s = compute_stats(t_open);
  r.lift_s = compute_stats(t_lift);
  r.center_s = compute_stats(t_center);
  r.z_adjust_s = compute_stats(t_z);
  r.cut_s = compute_stats(t_cut);
  r.store_s = compute_stats(t_store);
  r.continuous_per_berry_s = compute_stats(cont).mean;
  r.total_s = trace.total_ms / 1000.0;
  r.full_per_berry_s = r.n_attempted > 0 ? r.total_s / r.n_attempted : 0.0;
  r.dispense_count = trace.dispense_count;
  r.min_clearance_mm = trace.min_clearance_mm;
  r.touch_violations = trace.touch_violations;
  return r;
}

inline void to_json(nlohmann::json& j, const Stats& s) {
  j = nlohmann::json{{"mean", s.mean}, {"stddev_population", s.stddev}, {"n", s.n}};
}

inline void to_json(nlohmann::json& j, const RunReport& r) {
  j = nlohmann::json{{"n_berries", r.n_berries},
                     {"n_attempted", r.n_attempted},
                     {"n_stored", r.n_stored},
                     {"n_miss", r.n_miss},
                     {"n_body_cut", r.n_body_cut},
                     {"n_failed_other", r.n_failed_other},
                     {"success_rate", r.success_rate},
                     {"stem_mm", r.stem_mm},
                     {"d_sec_err_mm", r.d_sec_err_mm},
                     {"phase_s",
                      {{"approach", r.approach_s},
                       {"open", r.open_s},
                       {"lift", r.lift_s},
                       {"center", r.center_s},
                       {"z_adjust", r.z_adjust_s},
                       {"cut", r.cut_s},
                       {"store", r.store_s}}},
                     {"continuous_per_berry_s", r.continuous_per_berry_s},
                     {"full_per_berry_s", r.full_per_berry_s},
                     {"total_s", r.total_s},
                     {"dispense_count", r.dispense_count},
                     {"touch_violations", r.touch_violations}};
  if (std::isfinite(r.min_clearance_mm)) {
    j["min_clearance_mm"] = r.min_clearance_mm;
  } else {
    j["min_clearance_mm"] = nullptr;  // fingers never came near a fruit
  }
}

/// One JSON object per line, keys sorted by the serializer, so identical
/// runs produce byte-identical files.
inline std::string trace_to_jsonl(const PickTrace& trace) {
  std::string out;
  for (const auto& e : trace.events) {
    nlohmann::json j{{"t_ms", e.t_ms}, {"kind", e.kind}};
    if (e.berry >= 0) j["berry"] = e.berry;
    if (!e.detail.empty()) j["detail"] = e.detail;
    if (std::isfinite(e.value)) j["value"] = e.value;
    out += j.dump();
    out += '\n';
  }
  return out;
}

/// Per-berry summary table.
inline std::string summary_to_csv(const PickTrace& trace) {
  std::string out =
      "berry,attempted,stored,fail_reason,stem_mm,d_sec_err_mm,"
      "approach_ms,open_ms,lift_ms,center_ms,z_adjust_ms,cut_ms,store_ms,"
      "cycle_ms,continuous_ms\n";
  for (const auto& b : trace.berries) {
    out += std::to_string(b.berry_index);
    out += ',';
    out += b.attempted ? '1' : '0';
    out += ',';
    out += b.stored ? '1' : '0';
    out += ',';
    out += b.fail_reason;
    out += ',';
    out += std::isfinite(b.stem_mm) ? fmt_fixed(b.stem_mm) : "";
    out += ',';
    out += std::isfinite(b.d_sec_err_mm) ? fmt_fixed(b.d_sec_err_mm) : "";
    out += ',';
    out += std::to_string(b.phases.approach_ms);
    out += ',';
    out += std::to_string(b.phases.open_ms);
    out += ',';
    out += std::to_string(b.phases.lift_ms);
    out += ',';
    out += std::to_string(b.phases.center_ms);
    out += ',';
    out += std::to_string(b.phases.z_adjust_ms);
    out += ',';
    out += std::to_string(b.phases.cut_ms);
    out += ',';
    out += std::to_string(b.phases.store_ms);
    out += ',';
    out += std::to_string(b.cycle_ms);
    out += ',';
    out += std::to_string(b.continuous_ms);
    out += '\n';
  }
  return out;
}

inline std::string centering_to_csv(const std::vector<CenteringRow>& rows) {
  std::string out = "t_ms,error_x,error_y,cmd_x,cmd_y\n";
  for (const auto& r : rows) {
    out += std::to_string(r.t_ms);
    out += ',';
    out += fmt_fixed(r.error_x);
    out += ',';
    out += fmt_fixed(r.error_y);
    out += ',';
    out += fmt_fixed(r.cmd_x);
    out += ',';
    out += fmt_fixed(r.cmd_y);
    out += '\n';
  }
  return out;
}

}  // namespace strawsim
