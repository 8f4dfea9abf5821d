#pragma once

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "strawsim/control.hpp"
#include "strawsim/csvio.hpp"
#include "strawsim/kinematics.hpp"
#include "strawsim/perception.hpp"
#include "strawsim/scene.hpp"
#include "strawsim/vec.hpp"

namespace strawsim {

/// Fixed planar transform between the gripper frame and the arm frame:
/// estimator outputs rotate by -angle into the gripper frame and commands
/// rotate by +angle back out; the offset shifts the mount point.
struct PlanarTransform {
  double angle_deg{};
  double tx{};
  double ty{};
};

struct ControlConfig {
  PidGains gains{0.06, 0.0, 0.0, 2.0, 50.0};
  double threshold_mm{1.5};
  int dwell_frames{3};
  PlanarTransform transform;
};

struct NoiseConfig {
  double sigma_mm{0.5};
  double adc_max{4095.0};
};

struct PlantConfig {
  double tau_s{0.08};
  double max_speed_mm_s{80.0};
};

struct PickTuning {
  double l_stem_mm{10.0};        ///< stem length to leave on the fruit
  double target_x{};             ///< centring target in the gripper frame
  double target_y{};
  double open_margin_mm{5.0};    ///< fingertip radius beyond the fruit radius
  /// Opening floor while sensing. Wide enough that the sensor rays run
  /// shallower than the conical tip, so a lift from below always catches
  /// the fruit low on the cone where the section model holds.
  double scan_open_min_mm{28.0};
  double capture_r_mm{6.0};      ///< stem catch radius at the cutter
  double lift_speed_mm_s{20.0};
  double trim_drop_limit_mm{25.0};  ///< z travel allowed to walk the plane off the fruit
  double approach_margin_mm{14.0};  ///< sensor start depth below the fruit tip
  double approach_tol_mm{0.5};
  double approach_offset_x{4.0};  ///< detection error carried into approach
  double approach_offset_y{3.0};
  int retry_frames{100};          ///< consecutive unusable frames tolerated
  double approach_timeout_s{20.0};
  double center_timeout_s{10.0};
  double z_timeout_s{8.0};
  double lift_limit_mm{80.0};     ///< scan abort distance above the start
  bool scaled_legacy_section_height{false};
};

struct PhaseDurations {
  double detection_s{2.0};
  double first_travel_s{2.5};
  double final_travel_s{2.5};
  double open_s{0.5};
  double close_s{0.4};
  double cut_s{0.5};
  double store_s{0.9};
  double dispense_s{2.4};
};

struct ContainerConfig {
  int capacity{8};
};

struct SimConfig {
  GripperGeometry geometry{default_geometry()};
  CalibrationCurve calibration{default_calibration()};
  ShapeModel shape;
  double shoulder_frac{0.35};  ///< widest section position within the cap height
  ControlConfig control;
  NoiseConfig noise;
  PlantConfig plant;
  PickTuning pick;
  PhaseDurations phases;
  ContainerConfig container;
  int tick_ms{50};
};

inline void validate_config(const SimConfig& c) {
  validate_geometry(c.geometry);
  validate_calibration(c.calibration);
  validate_shape(c.shape);
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("config: ") + what);
  };
  require(c.tick_ms > 0, "tick_ms must be > 0");
  require(c.control.threshold_mm > 0.0, "threshold_mm must be > 0");
  require(c.control.dwell_frames >= 1, "dwell_frames must be >= 1");
  require(c.noise.sigma_mm >= 0.0, "sigma_mm must be >= 0");
  require(c.plant.tau_s > 0.0, "tau_s must be > 0");
  require(c.plant.max_speed_mm_s > 0.0, "max_speed must be > 0");
  require(c.pick.l_stem_mm >= 0.0, "l_stem must be >= 0");
  require(c.pick.capture_r_mm > 0.0, "capture radius must be > 0");
  require(c.container.capacity >= 7 && c.container.capacity <= 12,
          "container capacity must lie in [7, 12]");
  require(c.shoulder_frac > 0.0 && c.shoulder_frac < 1.0, "shoulder_frac must lie in (0, 1)");
}

inline void to_json(nlohmann::json& j, const PlanarTransform& t) {
  j = nlohmann::json{{"angle_deg", t.angle_deg}, {"tx", t.tx}, {"ty", t.ty}};
}
inline void from_json(const nlohmann::json& j, PlanarTransform& t) {
  t.angle_deg = j.value("angle_deg", 0.0);
  t.tx = j.value("tx", 0.0);
  t.ty = j.value("ty", 0.0);
}

inline void to_json(nlohmann::json& j, const PidGains& g) {
  j = nlohmann::json{{"kp", g.kp},
                     {"ki", g.ki},
                     {"kd", g.kd},
                     {"output_limit", g.output_limit},
                     {"integral_limit", g.integral_limit}};
}
inline void from_json(const nlohmann::json& j, PidGains& g) {
  j.at("kp").get_to(g.kp);
  j.at("ki").get_to(g.ki);
  j.at("kd").get_to(g.kd);
  j.at("output_limit").get_to(g.output_limit);
  j.at("integral_limit").get_to(g.integral_limit);
}

inline void to_json(nlohmann::json& j, const ShapeModel& s) {
  j = nlohmann::json{{"gamma_deg", s.gamma_deg}, {"k_hl", s.k_hl}, {"k_cal", s.k_cal}};
}
inline void from_json(const nlohmann::json& j, ShapeModel& s) {
  s.gamma_deg = j.value("gamma_deg", 52.72);
  s.k_hl = j.value("k_hl", 1.81);
  s.k_cal = j.value("k_cal", 1.11);
}

inline void to_json(nlohmann::json& j, const ControlConfig& c) {
  j = nlohmann::json{{"gains", c.gains},
                     {"threshold_mm", c.threshold_mm},
                     {"dwell_frames", c.dwell_frames},
                     {"transform", c.transform}};
}
inline void from_json(const nlohmann::json& j, ControlConfig& c) {
  if (j.contains("gains")) j.at("gains").get_to(c.gains);
  c.threshold_mm = j.value("threshold_mm", c.threshold_mm);
  c.dwell_frames = j.value("dwell_frames", c.dwell_frames);
  if (j.contains("transform")) j.at("transform").get_to(c.transform);
}

inline void to_json(nlohmann::json& j, const NoiseConfig& n) {
  j = nlohmann::json{{"sigma_mm", n.sigma_mm}, {"adc_max", n.adc_max}};
}
inline void from_json(const nlohmann::json& j, NoiseConfig& n) {
  n.sigma_mm = j.value("sigma_mm", n.sigma_mm);
  n.adc_max = j.value("adc_max", n.adc_max);
}

inline void to_json(nlohmann::json& j, const PlantConfig& p) {
  j = nlohmann::json{{"tau_s", p.tau_s}, {"max_speed_mm_s", p.max_speed_mm_s}};
}
inline void from_json(const nlohmann::json& j, PlantConfig& p) {
  p.tau_s = j.value("tau_s", p.tau_s);
  p.max_speed_mm_s = j.value("max_speed_mm_s", p.max_speed_mm_s);
}

inline void to_json(nlohmann::json& j, const PickTuning& p) {
  j = nlohmann::json{{"l_stem_mm", p.l_stem_mm},
                     {"target_x", p.target_x},
                     {"target_y", p.target_y},
                     {"open_margin_mm", p.open_margin_mm},
                     {"scan_open_min_mm", p.scan_open_min_mm},
                     {"capture_r_mm", p.capture_r_mm},
                     {"lift_speed_mm_s", p.lift_speed_mm_s},
                     {"trim_drop_limit_mm", p.trim_drop_limit_mm},
                     {"approach_margin_mm", p.approach_margin_mm},
                     {"approach_tol_mm", p.approach_tol_mm},
                     {"approach_offset_x", p.approach_offset_x},
                     {"approach_offset_y", p.approach_offset_y},
                     {"retry_frames", p.retry_frames},
                     {"approach_timeout_s", p.approach_timeout_s},
                     {"center_timeout_s", p.center_timeout_s},
                     {"z_timeout_s", p.z_timeout_s},
                     {"lift_limit_mm", p.lift_limit_mm},
                     {"scaled_legacy_section_height", p.scaled_legacy_section_height}};
}
inline void from_json(const nlohmann::json& j, PickTuning& p) {
  p.l_stem_mm = j.value("l_stem_mm", p.l_stem_mm);
  p.target_x = j.value("target_x", p.target_x);
  p.target_y = j.value("target_y", p.target_y);
  p.open_margin_mm = j.value("open_margin_mm", p.open_margin_mm);
  p.scan_open_min_mm = j.value("scan_open_min_mm", p.scan_open_min_mm);
  p.capture_r_mm = j.value("capture_r_mm", p.capture_r_mm);
  p.lift_speed_mm_s = j.value("lift_speed_mm_s", p.lift_speed_mm_s);
  p.trim_drop_limit_mm = j.value("trim_drop_limit_mm", p.trim_drop_limit_mm);
  p.approach_margin_mm = j.value("approach_margin_mm", p.approach_margin_mm);
  p.approach_tol_mm = j.value("approach_tol_mm", p.approach_tol_mm);
  p.approach_offset_x = j.value("approach_offset_x", p.approach_offset_x);
  p.approach_offset_y = j.value("approach_offset_y", p.approach_offset_y);
  p.retry_frames = j.value("retry_frames", p.retry_frames);
  p.approach_timeout_s = j.value("approach_timeout_s", p.approach_timeout_s);
  p.center_timeout_s = j.value("center_timeout_s", p.center_timeout_s);
  p.z_timeout_s = j.value("z_timeout_s", p.z_timeout_s);
  p.lift_limit_mm = j.value("lift_limit_mm", p.lift_limit_mm);
  p.scaled_legacy_section_height = j.value("scaled_legacy_section_height", p.scaled_legacy_section_height);
}

inline void to_json(nlohmann::json& j, const PhaseDurations& p) {
  j = nlohmann::json{{"detection_s", p.detection_s},
                     {"first_travel_s", p.first_travel_s},
                     {"final_travel_s", p.final_travel_s},
                     {"open_s", p.open_s},
                     {"close_s", p.close_s},
                     {"cut_s", p.cut_s},
                     {"store_s", p.store_s},
                     {"dispense_s", p.dispense_s}};
}
inline void from_json(const nlohmann::json& j, PhaseDurations& p) {
  p.detection_s = j.value("detection_s", p.detection_s);
  p.first_travel_s = j.value("first_travel_s", p.first_travel_s);
  p.final_travel_s = j.value("final_travel_s", p.final_travel_s);
  p.open_s = j.value("open_s", p.open_s);
  p.close_s = j.value("close_s", p.close_s);
  p.cut_s = j.value("cut_s", p.cut_s);
  p.store_s = j.value("store_s", p.store_s);
  p.dispense_s = j.value("dispense_s", p.dispense_s);
}

inline void to_json(nlohmann::json& j, const ContainerConfig& c) {
  j = nlohmann::json{{"capacity", c.capacity}};
}
inline void from_json(const nlohmann::json& j, ContainerConfig& c) {
  c.capacity = j.value("capacity", c.capacity);
}

inline void to_json(nlohmann::json& j, const SimConfig& c) {
  j = nlohmann::json{{"geometry", c.geometry},
                     {"calibration", c.calibration},
                     {"shape", c.shape},
                     {"shoulder_frac", c.shoulder_frac},
                     {"control", c.control},
                     {"noise", c.noise},
                     {"plant", c.plant},
                     {"pick", c.pick},
                     {"phases", c.phases},
                     {"container", c.container},
                     {"tick_ms", c.tick_ms}};
}
inline void from_json(const nlohmann::json& j, SimConfig& c) {
  if (j.contains("geometry")) j.at("geometry").get_to(c.geometry);
  if (j.contains("calibration")) j.at("calibration").get_to(c.calibration);
  if (j.contains("shape")) j.at("shape").get_to(c.shape);
  c.shoulder_frac = j.value("shoulder_frac", c.shoulder_frac);
  if (j.contains("control")) j.at("control").get_to(c.control);
  if (j.contains("noise")) j.at("noise").get_to(c.noise);
  if (j.contains("plant")) j.at("plant").get_to(c.plant);
  if (j.contains("pick")) j.at("pick").get_to(c.pick);
  if (j.contains("phases")) j.at("phases").get_to(c.phases);
  if (j.contains("container")) j.at("container").get_to(c.container);
  c.tick_ms = j.value("tick_ms", c.tick_ms);
}

/// A scenario bundles config overrides with a concrete scene.
struct Scenario {
  SimConfig config;
  Scene scene;
};

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

/// Loads a scenario file on top of a base configuration. The "config"
/// object is applied field-by-field over the base; "scene" is required.
inline Scenario load_scenario(const std::string& path, const SimConfig& base) {
  const nlohmann::json j = read_json_file(path);
  Scenario sc;
  sc.config = base;
  try {
    if (j.contains("config")) j.at("config").get_to(sc.config);
    j.at("scene").get_to(sc.scene);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  validate_config(sc.config);
  if (sc.scene.berries.empty()) throw ParseError(path + ": scene has no berries");
  return sc;
}

/// Base configuration: defaults, then the JSON file named by the
/// STRAWSIM_CONFIG environment variable when set.
inline SimConfig base_config_from_env() {
  SimConfig cfg;
  if (const char* env = std::getenv("STRAWSIM_CONFIG")) {
    if (env[0] != '\0') {
      const nlohmann::json j = read_json_file(env);
      try {
        j.get_to(cfg);
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string(env) + ": " + e.what());
      }
    }
  }
  return cfg;
}

}  // namespace strawsim
