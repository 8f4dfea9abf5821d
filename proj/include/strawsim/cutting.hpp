#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "strawsim/berry.hpp"
#include "strawsim/kinematics.hpp"
#include "strawsim/vec.hpp"

namespace strawsim {

enum class CutOutcome {
  kSuccess,  ///< stem severed with the fruit held over the fingers
  kMiss,     ///< blade closed on air or the stem escaped the capture zone
  kBodyCut,  ///< cutting plane passed through the fruit body
};

inline const char* to_string(CutOutcome o) {
  switch (o) {
    case CutOutcome::kSuccess: return "success";
    case CutOutcome::kMiss: return "miss";
    case CutOutcome::kBodyCut: return "body_cut";
  }
  return "unknown";
}

struct CutResult {
  CutOutcome outcome{CutOutcome::kMiss};
  double stem_mm{};       ///< stem left on the fruit, success only
  Vec2 stem_xy{};         ///< stem position in the gripper frame at the cut plane
  bool stem_present{};
};

/// Evaluates a blade closure. The cutting plane sits l_GR above the joint
/// plane; a cut through the body damages the fruit, otherwise the stem must
/// pass within capture_r of the gripper axis to be severed and held.
inline CutResult cut_attempt(const Vec3& gripper_origin, double yaw, const GripperGeometry& g,
                             double capture_r, const BerryBody& berry) {
  const double z_cut = gripper_origin.z + g.l_GR;

  CutResult res;
  double body_lo = 0.0;
  double body_hi = 0.0;
  berry.body_z_range(&body_lo, &body_hi);
  if (z_cut > body_lo && z_cut < body_hi) {
    res.outcome = CutOutcome::kBodyCut;
    return res;
  }
  if (z_cut <= body_lo) {
    res.outcome = CutOutcome::kMiss;  // blade below the fruit entirely
    return res;
  }

  const auto stem = berry.stem_at_z(z_cut);
  if (!stem) {
    res.outcome = CutOutcome::kMiss;  // plane above the stem end
    return res;
  }
  res.stem_present = true;
  res.stem_xy = rotated(*stem - gripper_origin.xy(), -yaw);
  if (norm(res.stem_xy) <= capture_r) {
    res.outcome = CutOutcome::kSuccess;
    res.stem_mm = berry.stem_length_to_z(z_cut);
  }
  return res;
}

struct StoredBerry {
  int berry_index{};
  double stem_mm{};
  std::int64_t t_ms{};
};

/// Onboard container with a trapdoor bottom.
struct Container {
  int capacity{8};
  std::vector<StoredBerry> stored;
  bool trapdoor_open{};

  bool full() const { return static_cast<int>(stored.size()) >= capacity; }
};

/// Opens the trapdoor, releases everything, closes again. Returns the number
/// of fruit released. Refused mid-cut: dropping fruit while the blade is
/// engaged would jam the mechanism.
inline int dispense(Container& c, bool cut_in_progress) {
  if (cut_in_progress) throw std::logic_error("dispense: refused while a cut is in progress");
  if (c.trapdoor_open) throw std::logic_error("dispense: trapdoor already open");
  const int n = static_cast<int>(c.stored.size());
  c.trapdoor_open = true;
  c.stored.clear();
  c.trapdoor_open = false;
  return n;
}

}  // namespace strawsim
