#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "strawsim/config.hpp"
#include "strawsim/control.hpp"
#include "strawsim/pick.hpp"
#include "strawsim/report.hpp"
#include "strawsim/sensing.hpp"

namespace strawsim {

// ---------------------------------------------------------------------------
// Bench test: shoulder-diameter measurement.

struct MeasureResult {
  Stats signed_err;      ///< estimated - true shoulder diameter
  double mean_abs_err{};
  int n_measured{};      ///< berries that produced at least one complete frame
};

namespace detail {

/// Berry centre height that puts the sensing plane exactly through the
/// shoulder: sensor 1 enters the widest circle at its near side, so the
/// plane and the shoulder coincide when the first hit lands there.
inline double aligned_center_z(const GripperGeometry& g, double theta, const Vec2& c_xy,
                               double rho_max, double z_gripper) {
  const double l = sensor_ring_radius(g, theta);
  const double y_hit = c_xy.y + std::sqrt(rho_max * rho_max - c_xy.x * c_xy.x);
  const double travel = (l - y_hit) / std::sin(theta);
  const double z_s = z_gripper + g.S * std::sin(theta);
  return z_s - travel * std::cos(theta);
}

}  // namespace detail

/// Moves one synthetic berry vertically through the sensor plane, tracks the
/// largest estimated section diameter, and scores it against the true value.
/// The sweep grid contains the exact shoulder alignment, so the noiseless
/// error vanishes.
inline MeasureResult run_measure_test(const SimConfig& cfg, int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("run_measure_test: n must be >= 1");

  const Vec3 gripper{0.0, 0.0, 100.0};
  const double yaw = deg2rad(cfg.control.transform.angle_deg);
  Rng master(seed);

  AmbientProfile ambient;  // default indoor profile
  SenseContext ctx;
  ctx.geom = &cfg.geometry;
  ctx.curve = &cfg.calibration;
  ctx.ambient = &ambient;
  ctx.sigma_mm = cfg.noise.sigma_mm;
  ctx.adc_max = cfg.noise.adc_max;

  std::vector<double> errs;
  MeasureResult out;
  for (int i = 0; i < n; ++i) {
    Rng rng = master.child(i);
    BerryInstance inst;
    inst.d_max = rng.uniform(18.0, 35.0);
    inst.stem_diameter = rng.uniform(1.7, 2.5);
    inst.stem_length_available = 60.0;
    const Vec2 jitter{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};

    const double r_open = std::min(inst.d_max / 2.0 + cfg.pick.open_margin_mm,
                                   opening_for_servo(cfg.geometry, cfg.geometry.phi_max));
    const double theta = finger_angle(cfg.geometry, servo_for_opening(cfg.geometry, r_open));
    const double z0 = detail::aligned_center_z(cfg.geometry, theta, jitter, inst.d_max / 2.0,
                                               gripper.z);

    // Cover the whole body: from the calyx plane below the sensing plane up
    // to the tip above it, 1 mm steps, alignment at k = 0 kept exact.
    BerryProfile prof = BerryProfile::make(inst.d_max, cfg.shape, cfg.shoulder_frac);
    const int k_lo = -static_cast<int>(std::ceil(prof.u_top - prof.u_sh)) - 5;
    const int k_hi = static_cast<int>(std::ceil(prof.u_sh)) + 5;

    double best = -1.0;
    std::int64_t t_ms = 0;
    for (int k = k_lo; k <= k_hi; ++k) {
      inst.center = {jitter.x, jitter.y, z0 + static_cast<double>(k)};
      std::vector<BerryBody> bodies;
      bodies.emplace_back(inst, cfg.shape, cfg.shoulder_frac);
      t_ms += cfg.tick_ms;
      const SensorFrame f = sense(ctx, gripper, yaw, theta, bodies, t_ms, rng);
      if (!f.complete()) continue;
      try {
        const SectionEstimate est = estimate_section(detected_points(
            sensor_ring_radius(cfg.geometry, f.theta), project_distances(f)));
        best = std::max(best, est.d_sec);
      } catch (const EstimationError&) {
        continue;
      }
    }
    if (best < 0.0) continue;  // berry never produced a usable frame
    ++out.n_measured;
    errs.push_back(best - inst.d_max);
  }

  out.signed_err = compute_stats(errs);
  double abs_sum = 0.0;
  for (double e : errs) abs_sum += std::abs(e);
  out.mean_abs_err = errs.empty() ? 0.0 : abs_sum / errs.size();
  return out;
}

// ---------------------------------------------------------------------------
// Stem-length control test.

struct StemTestResult {
  Stats stem_mm;       ///< over successful picks
  int n_attempted{};
  int n_success{};
  int n_miss{};
  int n_body_cut{};
  int n_other{};
  std::vector<double> values;
};

/// Picks n isolated random berries with the preset stem length and collects
/// the achieved stem statistics over the successful cuts; a missed capture
/// leaves nothing to measure.
inline StemTestResult run_stem_test(const SimConfig& cfg, double l_stem, int n,
                                    double incline_max_deg, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("run_stem_test: n must be >= 1");

  SimConfig run_cfg = cfg;
  run_cfg.pick.l_stem_mm = l_stem;

  Rng master(seed);
  StemTestResult out;
  for (int i = 0; i < n; ++i) {
    Rng gen = master.child(i);
    BerryInstance b;
    b.center = {gen.uniform(-3.0, 3.0), gen.uniform(-3.0, 3.0), 150.0};
    b.d_max = gen.uniform(18.0, 35.0);
    b.stem_diameter = gen.uniform(1.7, 2.5);
    b.stem_length_available = 60.0;
    b.incline_deg = incline_max_deg > 0.0 ? gen.uniform(0.0, incline_max_deg) : 0.0;
    b.azimuth_deg = gen.uniform(0.0, 360.0);

    Scene scene;
    scene.berries.push_back(b);
    const PickTrace trace = run_pick_cycle(scene, run_cfg, seed + 1000003ull * (i + 1));

    const BerryResult& res = trace.berries.at(0);
    ++out.n_attempted;
    if (res.stored) {
      ++out.n_success;
      out.values.push_back(res.stem_mm);
    } else if (res.fail_reason == "miss") {
      ++out.n_miss;
    } else if (res.fail_reason == "body_cut") {
      ++out.n_body_cut;
    } else {
      ++out.n_other;
    }
  }
  out.stem_mm = compute_stats(out.values);
  return out;
}

// ---------------------------------------------------------------------------
// Cut-position sweep.

struct SweepRow {
  double offset_mm{};
  double success_rate{};
  int trials{};
};

/// Success rate of picking an isolated upright berry while the centring
/// target is displaced laterally by each offset. Each (offset, trial) pair
/// draws its own berry and noise stream from the master seed, so rows are
/// independent of evaluation order.
inline std::vector<SweepRow> run_cut_sweep(const SimConfig& cfg,
                                           const std::vector<double>& offsets, int trials,
                                           std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("run_cut_sweep: trials must be >= 1");

  std::vector<SweepRow> rows;
  Rng master(seed);
  for (std::size_t oi = 0; oi < offsets.size(); ++oi) {
    SimConfig run_cfg = cfg;
    run_cfg.pick.target_x = offsets[oi];
    run_cfg.pick.target_y = 0.0;

    int ok = 0;
    for (int t = 0; t < trials; ++t) {
      Rng gen = master.child(oi * 1000000ull + t);
      BerryInstance b;
      b.center = {gen.uniform(-3.0, 3.0), gen.uniform(-3.0, 3.0), 150.0};
      b.d_max = gen.uniform(18.0, 35.0);
      b.stem_diameter = gen.uniform(1.7, 2.5);
      b.stem_length_available = 60.0;

      Scene scene;
      scene.berries.push_back(b);
      const PickTrace trace =
          run_pick_cycle(scene, run_cfg, seed + 7919ull * (oi + 1) + 104729ull * (t + 1));
      if (trace.berries.at(0).stored) ++ok;
    }
    rows.push_back({offsets[oi], static_cast<double>(ok) / trials, trials});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Direct-plant centring (controller bench, no sensing chain).

/// Frame source that reports the berry centre directly from world state:
/// isolates the PID + plant behaviour from perception.
struct DirectPlantSource {
  PlantState* plant{};
  Vec2 berry_xy{};
  double yaw{};
  double dt{};

  std::optional<SectionEstimate> sample() {
    SectionEstimate est;
    est.q = rotated(berry_xy - plant->arm_pos.xy(), -yaw);
    est.d_sec = 30.0;
    return est;
  }

  void apply(double cmd_x, double cmd_y) {
    const Vec2 u = rotated({cmd_x, cmd_y}, yaw);
    step_plant(*plant, {u.x, u.y, 0.0}, dt);
  }
};

/// Settling test from a known initial error against the configured plant.
inline CenteringResult run_settle_test(const SimConfig& cfg, const Vec2& initial_error,
                                       double threshold_mm, double timeout_s) {
  PlantState plant;
  plant.tau_s = cfg.plant.tau_s;
  plant.max_speed = cfg.plant.max_speed_mm_s;

  DirectPlantSource src;
  src.plant = &plant;
  src.berry_xy = initial_error;  // arm starts at the origin
  src.yaw = deg2rad(cfg.control.transform.angle_deg);
  src.dt = cfg.tick_ms / 1000.0;

  const TargetPose tgt{0.0, 0.0, cfg.pick.l_stem_mm};
  return centering_loop(src, cfg.control.gains, tgt, threshold_mm, timeout_s,
                        cfg.control.dwell_frames, cfg.tick_ms);
}

}  // namespace strawsim
