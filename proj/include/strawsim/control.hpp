#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "strawsim/kinematics.hpp"
#include "strawsim/perception.hpp"
#include "strawsim/vec.hpp"

namespace strawsim {

struct PidGains {
  double kp{};
  double ki{};
  double kd{};
  double output_limit{};    ///< |command| ceiling per step, mm
  double integral_limit{};  ///< |integral| ceiling, mm*s
};

struct PidState {
  double integral{};
  double prev_error{};
  bool primed{};  ///< first call has no derivative history
};

/// One positional PID step. The integral accumulates before the output is
/// formed, both integral and output are clamped, and the derivative on the
/// first call is zero.
inline double pid_step(PidState& st, const PidGains& g, double error, double dt) {
  if (dt <= 0.0) throw std::invalid_argument("pid_step: dt must be > 0");
  st.integral = std::clamp(st.integral + error * dt, -g.integral_limit, g.integral_limit);
  const double deriv = st.primed ? (error - st.prev_error) / dt : 0.0;
  st.prev_error = error;
  st.primed = true;
  const double u = g.kp * error + g.ki * st.integral + g.kd * deriv;
  return std::clamp(u, -g.output_limit, g.output_limit);
}

/// Where the gripper should hold the fruit: the desired stem centre in the
/// gripper frame and the stem length to leave above the calyx.
struct TargetPose {
  double target_x{};
  double target_y{};
  double l_stem{};  ///< mm of stem to leave on the fruit
};

/// Centring errors fed to the planar PID pair. The estimated centre Q is
/// already a displacement from the gripper axis, so the error is the offset
/// summed with the configured target.
inline Vec2 position_errors(const SectionEstimate& est, const TargetPose& tgt) {
  return {est.q.x + tgt.target_x, est.q.y + tgt.target_y};
}

struct CenteringRow {
  std::int64_t t_ms{};
  double error_x{};
  double error_y{};
  double cmd_x{};
  double cmd_y{};
};

struct CenteringResult {
  bool settled{};
  std::int64_t settle_ms{-1};
  std::vector<CenteringRow> trace;
  int skipped_frames{};  ///< ticks without a usable estimate
};

/// First trace time at which both errors have stayed inside the threshold
/// for `dwell_frames` consecutive rows.
inline std::optional<std::int64_t> settle_time_from_trace(const std::vector<CenteringRow>& rows,
                                                          double threshold_mm, int dwell_frames) {
  int streak = 0;
  for (const auto& r : rows) {
    if (std::abs(r.error_x) < threshold_mm && std::abs(r.error_y) < threshold_mm) {
      if (++streak >= dwell_frames) return r.t_ms;
    } else {
      streak = 0;
    }
  }
  return std::nullopt;
}

/// Runs the planar centring loop against a frame source until the error has
/// dwelled inside the threshold or the timeout expires.
///
/// Source contract, once per tick:
///   std::optional<SectionEstimate> sample();  // sense at the current pose
///   void apply(double cmd_x, double cmd_y);   // command and advance the plant
/// apply() is called every tick, with zeros when no estimate was available.
template <typename Source>
CenteringResult centering_loop(Source& src, const PidGains& gains, const TargetPose& tgt,
                               double threshold_mm, double timeout_s, int dwell_frames,
                               int tick_ms) {
  if (threshold_mm <= 0.0) throw std::invalid_argument("centering_loop: threshold must be > 0");
  if (dwell_frames < 1) throw std::invalid_argument("centering_loop: dwell must be >= 1");
  if (tick_ms <= 0) throw std::invalid_argument("centering_loop: tick must be > 0");

  const double dt = tick_ms / 1000.0;
  const auto max_ticks = static_cast<std::int64_t>(std::ceil(timeout_s * 1000.0 / tick_ms));

  CenteringResult result;
  PidState sx, sy;
  int streak = 0;
  for (std::int64_t k = 1; k <= max_ticks; ++k) {
    const std::int64_t t = k * tick_ms;
    const std::optional<SectionEstimate> est = src.sample();
    if (!est) {
      ++result.skipped_frames;
      src.apply(0.0, 0.0);
      continue;
    }
    const Vec2 err = position_errors(*est, tgt);
    const double ux = pid_step(sx, gains, err.x, dt);
    const double uy = pid_step(sy, gains, err.y, dt);
    src.apply(ux, uy);
    result.trace.push_back({t, err.x, err.y, ux, uy});

    if (std::abs(err.x) < threshold_mm && std::abs(err.y) < threshold_mm) {
      if (++streak >= dwell_frames) {
        result.settled = true;
        result.settle_ms = t;
        break;
      }
    } else {
      streak = 0;
    }
  }
  return result;
}

/// Fruit shape ratios used to convert between the widest section and the
/// conical part of the fruit.
struct ShapeModel {
  double gamma_deg{52.72};  ///< full cone angle of the fruit tip
  double k_hl{1.81};        ///< max diameter / shoulder height
  double k_cal{1.11};       ///< max diameter / calyx-plane diameter
};

inline void validate_shape(const ShapeModel& s) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("shape: ") + what);
  };
  require(s.gamma_deg > 0.0 && s.gamma_deg < 180.0, "gamma_deg must lie in (0, 180)");
  require(s.k_hl > 0.0, "k_hl must be > 0");
  require(s.k_cal > 0.0, "k_cal must be > 0");
}

/// Height of the sensed section above the joint plane. The sensor sits
/// S*sin(theta) up; the echo travels mdp1 along the axis tilted theta from
/// vertical, descending mdp1*cos(theta).
///
/// `scaled_legacy_form` reproduces an earlier variant with the descent term
/// scaled by S; it is kept behind this flag for comparison only.
inline double section_height(const GripperGeometry& g, double theta, double mdp1,
                             bool scaled_legacy_form = false) {
  if (theta <= 0.0 || theta > kPi / 2.0 + 1e-12) {
    throw std::domain_error("section_height: theta outside (0, pi/2]");
  }
  const double descent = scaled_legacy_form ? g.S * mdp1 : mdp1;
  return g.S * std::sin(theta) - descent * std::cos(theta);
}

struct StemOffset {
  double offset_z{};  ///< vertical arm correction, positive up
  double s_hl{};      ///< shoulder height implied by d_max
  double d_cal{};     ///< calyx-plane diameter implied by d_max
  double l_sec{};     ///< sensed section to calyx plane along the axis
  bool section_above_calyx{};  ///< d_sec exceeded d_cal; l_sec clamped to 0
};

/// Vertical correction that places the cutting plane l_stem above the calyx.
/// The fruit is reduced to a cone of full angle gamma below the calyx plane,
/// so the sensed diameter locates the section along the axis.
inline StemOffset stem_offset(double d_max, const SectionEstimate& est, double l_sg,
                              const TargetPose& tgt, const ShapeModel& shape,
                              const GripperGeometry& g) {
  if (d_max <= 0.0) throw std::domain_error("stem_offset: d_max must be > 0");

  StemOffset out;
  out.s_hl = d_max / shape.k_hl;
  out.d_cal = d_max / shape.k_cal;
  const double gap = out.d_cal - est.d_sec;
  if (gap < 0.0) {
    out.section_above_calyx = true;
    out.l_sec = 0.0;
  } else {
    out.l_sec = 0.5 * std::tan(deg2rad(shape.gamma_deg) / 2.0) * gap;
  }
  out.offset_z = tgt.l_stem + out.s_hl + out.l_sec - (g.l_GR - l_sg);
  return out;
}

}  // namespace strawsim
