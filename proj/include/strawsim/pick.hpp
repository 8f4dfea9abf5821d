#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "strawsim/config.hpp"
#include "strawsim/control.hpp"
#include "strawsim/cutting.hpp"
#include "strawsim/plant.hpp"
#include "strawsim/rng.hpp"
#include "strawsim/scene.hpp"
#include "strawsim/sensing.hpp"

namespace strawsim {

struct TraceEvent {
  std::int64_t t_ms{};
  std::string kind;
  int berry{-1};
  std::string detail;
  double value{std::numeric_limits<double>::quiet_NaN()};
};

struct PhaseTimes {
  std::int64_t approach_ms{};
  std::int64_t open_ms{};
  std::int64_t lift_ms{};
  std::int64_t center_ms{};
  std::int64_t z_adjust_ms{};
  std::int64_t cut_ms{};
  std::int64_t store_ms{};
};

struct BerryResult {
  int berry_index{};
  bool attempted{};
  bool stored{};
  std::string fail_reason;  ///< empty on success
  double stem_mm{std::numeric_limits<double>::quiet_NaN()};
  double d_sec_err_mm{std::numeric_limits<double>::quiet_NaN()};
  PhaseTimes phases;
  std::int64_t cycle_ms{};       ///< approach start to cycle end
  std::int64_t continuous_ms{};  ///< cycle_ms, minus the approach for the first fruit
};

struct PickTrace {
  std::vector<TraceEvent> events;
  std::vector<BerryResult> berries;
  std::vector<std::vector<CenteringRow>> centering;  ///< per attempted berry
  std::int64_t total_ms{};
  int stored_total{};
  int dispense_count{};
  double min_clearance_mm{std::numeric_limits<double>::infinity()};
  int touch_violations{};
};

namespace detail {

/// Finger azimuths: three sensor-carrying fingers plus three plain ones.
inline constexpr std::array<double, 6> kFingerAzimuth = {
    kPi / 2.0, kPi + kPi / 6.0, -kPi / 6.0,
    kPi / 6.0, kPi * 5.0 / 6.0, -kPi / 2.0};

}  // namespace detail

/// Runs the whole picking session on one scene: per ripe fruit
/// APPROACH -> OPEN -> LIFT_SCAN -> CENTER -> Z_ADJUST -> CUT -> STORE,
/// with DISPENSE when the container fills and once at the end. Everything
/// advances on one fixed-period clock and a single seeded noise stream, so
/// a (scene, config, seed) triple always produces the identical trace.
class PickSession {
 public:
  PickSession(const Scene& scene, const SimConfig& cfg, std::uint64_t seed)
      : scene_(scene), cfg_(cfg), rng_(seed) {
    validate_config(cfg);
    for (const auto& b : scene.berries) {
      bodies_.emplace_back(b, cfg.shape, cfg.shoulder_frac);
    }
    plant_.tau_s = cfg.plant.tau_s;
    plant_.max_speed = cfg.plant.max_speed_mm_s;
    yaw_ = deg2rad(cfg.control.transform.angle_deg);
    container_.capacity = cfg.container.capacity;

    ctx_.geom = &cfg_.geometry;
    ctx_.curve = &cfg_.calibration;
    ctx_.ambient = &scene_.ambient;
    ctx_.sigma_mm = cfg_.noise.sigma_mm;
    ctx_.adc_max = cfg_.noise.adc_max;
  }

  PickTrace run() {
    event("run_start", -1, "", static_cast<double>(scene_.berries.size()));

    // Camera detection pass, then travel to the first fruit. The arm starts
    // at the first approach target: the travel budget covers the move.
    advance(cfg_.phases.detection_s);
    event("detect", -1, "", cfg_.phases.detection_s);
    int first = -1;
    for (std::size_t i = 0; i < scene_.berries.size(); ++i) {
      if (scene_.berries[i].ripe) {
        first = static_cast<int>(i);
        break;
      }
    }
    if (first >= 0) {
      const Vec3 tgt = approach_target(first);
      plant_.arm_pos = tgt;
      plant_.setpoint = tgt;
    }
    advance(cfg_.phases.first_travel_s);
    event("travel", -1, "first", cfg_.phases.first_travel_s);

    for (std::size_t i = 0; i < scene_.berries.size(); ++i) {
      if (!scene_.berries[i].ripe) {
        event("skip_unripe", static_cast<int>(i), "", 0.0);
        BerryResult res;
        res.berry_index = static_cast<int>(i);
        trace_.berries.push_back(res);
        trace_.centering.emplace_back();
        continue;
      }
      pick_one(static_cast<int>(i), static_cast<int>(i) == first);
      if (container_.full()) run_dispense("container_full");
    }

    advance(cfg_.phases.final_travel_s);
    event("travel", -1, "final", cfg_.phases.final_travel_s);
    run_dispense("final");

    event("run_end", -1, "", static_cast<double>(trace_.stored_total));
    trace_.total_ms = plant_.clock_ms;
    return std::move(trace_);
  }

 private:
  // ---- low level ------------------------------------------------------

  double dt() const { return cfg_.tick_ms / 1000.0; }

  void event(const std::string& kind, int berry, const std::string& detail, double value) {
    trace_.events.push_back({plant_.clock_ms, kind, berry, detail, value});
  }

  void tick(const Vec3& cmd) {
    step_plant(plant_, cmd, dt());
    if (fingers_open_) update_clearance();
  }

  /// Idle ticks covering a fixed-duration mechanical action.
  void advance(double seconds) {
    const auto n = static_cast<std::int64_t>(std::llround(seconds * 1000.0 / cfg_.tick_ms));
    for (std::int64_t i = 0; i < n; ++i) tick({});
  }

  Vec2 gripper_xy() const {
    return plant_.arm_pos.xy() + Vec2{cfg_.control.transform.tx, cfg_.control.transform.ty};
  }

  Vec3 gripper_origin() const {
    const Vec2 xy = gripper_xy();
    return {xy.x, xy.y, plant_.arm_pos.z};
  }

  SensorFrame sense_now(TrueSection* truth = nullptr) {
    return sense(ctx_, gripper_origin(), yaw_, theta_, bodies_, plant_.clock_ms, rng_, truth);
  }

  /// Fingertip-to-fruit clearance at the current pose, sampled every 0.5 mm
  /// of height along the fingers against the body section circles.
  void update_clearance() {
    const double sin_t = std::sin(theta_);
    const double cos_t = std::cos(theta_);
    if (sin_t < 1e-9) return;
    const Vec2 origin = gripper_xy();
    const double z0 = plant_.arm_pos.z;
    const double z1 = z0 + cfg_.geometry.l_fin * sin_t;
    for (const auto& body : bodies_) {
      double b_lo = 0.0;
      double b_hi = 0.0;
      body.body_z_range(&b_lo, &b_hi);
      const double lo = std::max(z0, b_lo);
      const double hi = std::min(z1, b_hi);
      for (double z = lo; z <= hi; z += 0.5) {
        const auto sec = body.section_at_z(z);
        if (!sec) continue;
        const double s = (z - z0) / sin_t;
        const double rf = cfg_.geometry.R_joint - s * cos_t;
        for (const double az : detail::kFingerAzimuth) {
          const double a = az + yaw_;
          const Vec2 fp = origin + Vec2{rf * std::cos(a), rf * std::sin(a)};
          const double clear = norm(fp - sec->center) - sec->radius;
          if (clear < trace_.min_clearance_mm) trace_.min_clearance_mm = clear;
          if (clear < 0.0 && !touch_flagged_) {
            ++trace_.touch_violations;
            touch_flagged_ = true;
            event("touch", current_berry_, "", clear);
          }
        }
      }
    }
  }

  // ---- phases ----------------------------------------------------------

  double open_radius_for(const BerryInstance& b) const {
    // The floor keeps the sensor rays shallower than the conical tip
    // (cot(theta) below the cone slope); without it a lift from below
    // first catches the bulge, where the section model does not apply.
    const double r_max = opening_for_servo(cfg_.geometry, cfg_.geometry.phi_max);
    const double r = std::max(b.d_max / 2.0 + cfg_.pick.open_margin_mm,
                              cfg_.pick.scan_open_min_mm);
    return std::min(r, r_max);
  }

  Vec3 approach_target(int idx) const {
    const BerryBody& body = bodies_[idx];
    const double r_open = open_radius_for(body.instance());
    const double theta_open = finger_angle(cfg_.geometry, servo_for_opening(cfg_.geometry, r_open));
    const Vec2 detected = body.instance().center.xy() +
                          Vec2{cfg_.pick.approach_offset_x, cfg_.pick.approach_offset_y};
    const Vec2 arm_xy = detected - Vec2{cfg_.control.transform.tx, cfg_.control.transform.ty};
    const double z = body.tip().z - cfg_.pick.approach_margin_mm -
                     cfg_.geometry.S * std::sin(theta_open);
    return {arm_xy.x, arm_xy.y, z};
  }

  void pick_one(int idx, bool is_first) {
    current_berry_ = idx;
    touch_flagged_ = false;
    const BerryBody& body = bodies_[idx];

    BerryResult res;
    res.berry_index = idx;
    res.attempted = true;
    std::vector<CenteringRow> center_rows;
    const std::int64_t t_cycle0 = plant_.clock_ms;

    const auto finish = [&](const char* reason) {
      res.fail_reason = reason ? reason : "";
      res.cycle_ms = plant_.clock_ms - t_cycle0;
      res.continuous_ms = res.cycle_ms - (is_first ? res.phases.approach_ms : 0);
      event("berry_end", idx, res.fail_reason.empty() ? "stored" : res.fail_reason,
            res.stem_mm);
      trace_.berries.push_back(res);
      trace_.centering.push_back(std::move(center_rows));
      current_berry_ = -1;
    };

    // APPROACH: move under the fruit with the fingers closed.
    event("phase", idx, "approach", 0.0);
    servo_phi_ = 0.0;
    theta_ = cfg_.geometry.theta0;
    fingers_open_ = false;
    std::int64_t t0 = plant_.clock_ms;
    {
      const Vec3 target = approach_target(idx);
      tick(target - plant_.setpoint);  // setpoint jumps, the arm chases
      const auto deadline = plant_.clock_ms +
          static_cast<std::int64_t>(cfg_.pick.approach_timeout_s * 1000.0);
      while (norm(plant_.arm_pos - target) > cfg_.pick.approach_tol_mm) {
        if (plant_.clock_ms >= deadline) {
          res.phases.approach_ms = plant_.clock_ms - t0;
          finish("unreachable");
          return;
        }
        tick({});
      }
      res.phases.approach_ms = plant_.clock_ms - t0;
    }

    // OPEN: spread the fingers to the fruit size plus margin.
    event("phase", idx, "open", 0.0);
    t0 = plant_.clock_ms;
    const double r_open = open_radius_for(body.instance());
    servo_phi_ = servo_for_opening(cfg_.geometry, r_open);
    theta_ = finger_angle(cfg_.geometry, servo_phi_);
    fingers_open_ = true;
    advance(cfg_.phases.open_s);
    event("open", idx, "", r_open);
    res.phases.open_ms = plant_.clock_ms - t0;

    // LIFT_SCAN: rise until all three sensors report an echo.
    event("phase", idx, "lift_scan", 0.0);
    t0 = plant_.clock_ms;
    {
      const double z_start = plant_.arm_pos.z;
      bool complete = false;
      while (plant_.arm_pos.z - z_start < cfg_.pick.lift_limit_mm) {
        tick({0.0, 0.0, cfg_.pick.lift_speed_mm_s * dt()});
        if (sense_now().complete()) {
          complete = true;
          break;
        }
      }
      // Halt: cancel the ramp still buffered in the setpoint, otherwise the
      // sensing plane keeps creeping upward through the next phase.
      plant_.setpoint.z = plant_.arm_pos.z;
      res.phases.lift_ms = plant_.clock_ms - t0;
      if (!complete) {
        finish("no_complete_frame");
        return;
      }
      event("scan_lock", idx, "", plant_.arm_pos.z - z_start);
    }

    // CENTER: planar PID until the section centre dwells on the target.
    event("phase", idx, "center", 0.0);
    t0 = plant_.clock_ms;
    {
      FrameSource src{this};
      const TargetPose tgt{cfg_.pick.target_x, cfg_.pick.target_y, cfg_.pick.l_stem_mm};
      const CenteringResult cres =
          centering_loop(src, cfg_.control.gains, tgt, cfg_.control.threshold_mm,
                         cfg_.pick.center_timeout_s, cfg_.control.dwell_frames, cfg_.tick_ms);
      center_rows = cres.trace;
      res.phases.center_ms = plant_.clock_ms - t0;
      if (src.lost) {
        finish("no_complete_frame");
        return;
      }
      if (!cres.settled) {
        finish("center_timeout");
        return;
      }
      event("settled", idx, "", cres.settle_ms / 1000.0);
    }

    // Z_ADJUST: centering drags the sensing plane along the fruit wall, so
    // walk the plane off the bottom and catch the fruit again from below.
    // The fresh frame then sits just above the tip, on the cone, where the
    // section-to-height conversion holds for every fruit size.
    event("phase", idx, "z_adjust", 0.0);
    t0 = plant_.clock_ms;
    {
      const double step = cfg_.pick.lift_speed_mm_s * dt();
      double dropped = 0.0;
      while (dropped < cfg_.pick.trim_drop_limit_mm && sense_now().complete()) {
        tick({0.0, 0.0, -step});
        dropped += step;
      }
      plant_.setpoint.z = plant_.arm_pos.z;

      const double rise = 0.25 * step;
      const double z_rise0 = plant_.arm_pos.z;
      bool caught = false;
      while (plant_.arm_pos.z - z_rise0 < cfg_.pick.lift_limit_mm) {
        tick({0.0, 0.0, rise});
        if (sense_now().complete()) {
          caught = true;
          break;
        }
      }
      // Cancel the buffered ramp before backing off, or the drained lag
      // rides on top of the backoff and pushes the plane past the calyx.
      plant_.setpoint.z = plant_.arm_pos.z;
      if (!caught) {
        res.phases.z_adjust_ms = plant_.clock_ms - t0;
        finish("no_complete_frame");
        return;
      }
      tick({0.0, 0.0, rise});  // back the plane off the very tip
      tick({0.0, 0.0, rise});

      std::optional<SensorFrame> frame;
      TrueSection truth;
      double z_meas = plant_.arm_pos.z;
      for (int k = 0; k < cfg_.pick.retry_frames; ++k) {
        tick({});
        SensorFrame f = sense_now(&truth);
        if (f.complete()) {
          frame = f;
          z_meas = plant_.arm_pos.z;
          break;
        }
      }
      if (!frame) {
        res.phases.z_adjust_ms = plant_.clock_ms - t0;
        finish("no_complete_frame");
        return;
      }

      std::optional<SectionEstimate> est;
      try {
        est = estimate_section(detected_points(sensor_ring_radius(cfg_.geometry, frame->theta),
                                               project_distances(*frame)));
      } catch (const EstimationError&) {
        res.phases.z_adjust_ms = plant_.clock_ms - t0;
        finish("estimation_degenerate");
        return;
      }
      if (truth.berry_index == idx) res.d_sec_err_mm = est->d_sec - 2.0 * truth.radius;

      const double l_sg = section_height(cfg_.geometry, frame->theta, frame->mdp[0],
                                         cfg_.pick.scaled_legacy_section_height);
      const TargetPose tgt{cfg_.pick.target_x, cfg_.pick.target_y, cfg_.pick.l_stem_mm};
      const StemOffset off = stem_offset(body.instance().d_max, *est, l_sg, tgt, cfg_.shape,
                                         cfg_.geometry);
      if (off.section_above_calyx) event("section_above_calyx", idx, "", est->d_sec);
      event("z_offset", idx, "", off.offset_z);

      // Anchor on the pose the frame was taken at, not on the setpoint.
      plant_.setpoint.z = z_meas + off.offset_z;
      const auto deadline = plant_.clock_ms +
          static_cast<std::int64_t>(cfg_.pick.z_timeout_s * 1000.0);
      while (norm(plant_.setpoint - plant_.arm_pos) > 0.0) {
        if (plant_.clock_ms >= deadline) {
          res.phases.z_adjust_ms = plant_.clock_ms - t0;
          finish("z_timeout");
          return;
        }
        tick({});
      }
      res.phases.z_adjust_ms = plant_.clock_ms - t0;
    }

    // CUT: close the fingers under the fruit, then drive the blade.
    event("phase", idx, "cut", 0.0);
    t0 = plant_.clock_ms;
    CutResult cut;
    {
      servo_phi_ = 0.0;
      theta_ = cfg_.geometry.theta0;
      fingers_open_ = false;
      advance(cfg_.phases.close_s);
      cut_in_progress_ = true;
      servo_phi_ = -cfg_.geometry.phi_cut_max;
      advance(cfg_.phases.cut_s);
      cut = cut_attempt(gripper_origin(), yaw_, cfg_.geometry, cfg_.pick.capture_r_mm, body);
      cut_in_progress_ = false;
      servo_phi_ = 0.0;
      res.phases.cut_ms = plant_.clock_ms - t0;
      event("cut", idx, to_string(cut.outcome),
            cut.outcome == CutOutcome::kSuccess ? cut.stem_mm : norm(cut.stem_xy));
      if (cut.outcome != CutOutcome::kSuccess) {
        finish(to_string(cut.outcome));
        return;
      }
      res.stem_mm = cut.stem_mm;
    }

    // STORE: the severed fruit drops onto the chute into the container.
    event("phase", idx, "store", 0.0);
    t0 = plant_.clock_ms;
    advance(cfg_.phases.store_s);
    container_.stored.push_back({idx, cut.stem_mm, plant_.clock_ms});
    ++trace_.stored_total;
    res.stored = true;
    res.phases.store_ms = plant_.clock_ms - t0;
    event("stored", idx, "", static_cast<double>(container_.stored.size()));
    finish(nullptr);
  }

  void run_dispense(const char* why) {
    const int held = static_cast<int>(container_.stored.size());
    if (held > 0) advance(cfg_.phases.dispense_s);
    event("dispense_open", -1, why, static_cast<double>(held));
    const int n = dispense(container_, cut_in_progress_);
    event("dispense_close", -1, why, static_cast<double>(n));
    if (n > 0) ++trace_.dispense_count;
  }

  // Adapter between the centring loop and the session: sensing plus the
  // incomplete-frame retry budget on the sample side, transformed plant
  // commands on the apply side.
  struct FrameSource {
    PickSession* s{};
    int misses{};
    bool lost{};

    std::optional<SectionEstimate> sample() {
      SensorFrame f = s->sense_now();
      if (!f.complete()) {
        if (++misses > s->cfg_.pick.retry_frames) lost = true;
        return std::nullopt;
      }
      misses = 0;
      try {
        return estimate_section(detected_points(
            sensor_ring_radius(s->cfg_.geometry, f.theta), project_distances(f)));
      } catch (const EstimationError&) {
        if (++misses > s->cfg_.pick.retry_frames) lost = true;
        return std::nullopt;
      }
    }

    void apply(double cmd_x, double cmd_y) {
      const Vec2 u = rotated({cmd_x, cmd_y}, s->yaw_);
      s->tick({u.x, u.y, 0.0});
    }
  };

  const Scene& scene_;
  const SimConfig& cfg_;
  Rng rng_;
  std::vector<BerryBody> bodies_;
  PlantState plant_;
  SenseContext ctx_;
  Container container_;
  PickTrace trace_;
  double yaw_{};
  double servo_phi_{};
  double theta_{};
  bool fingers_open_{};
  bool cut_in_progress_{};
  bool touch_flagged_{};
  int current_berry_{-1};
};

inline PickTrace run_pick_cycle(const Scene& scene, const SimConfig& cfg, std::uint64_t seed) {
  PickSession session(scene, cfg, seed);
  return session.run();
}

}  // namespace strawsim
