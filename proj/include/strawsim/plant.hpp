#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "strawsim/vec.hpp"

namespace strawsim {

/// Arm and servo state of the simulated hardware. Position commands
/// accumulate into a setpoint the arm chases with first-order lag under a
/// speed ceiling, which is how the real arm turns a stream of small
/// corrections into smooth motion.
struct PlantState {
  Vec3 arm_pos{};
  Vec3 setpoint{};
  double servo_phi{};
  double tau_s{0.08};        ///< lag time constant
  double max_speed{80.0};    ///< arm speed ceiling, mm/s
  std::int64_t clock_ms{};
};

/// Advances the arm one control period. `cmd` is a position increment added
/// to the persistent setpoint. Once the remaining gap falls below 1 nm the
/// arm snaps onto the setpoint so poses settle to exact values.
inline void step_plant(PlantState& p, const Vec3& cmd, double dt_s) {
  if (dt_s <= 0.0) throw std::invalid_argument("step_plant: dt must be > 0");
  p.setpoint += cmd;

  const Vec3 delta = p.setpoint - p.arm_pos;
  const double alpha = 1.0 - std::exp(-dt_s / p.tau_s);
  Vec3 step = delta * alpha;
  const double lim = p.max_speed * dt_s;
  const double len = norm(step);
  if (len > lim) step *= lim / len;
  p.arm_pos += step;

  if (norm(p.setpoint - p.arm_pos) < 1e-9) p.arm_pos = p.setpoint;
  p.clock_ms += static_cast<std::int64_t>(std::llround(dt_s * 1000.0));
}

}  // namespace strawsim
