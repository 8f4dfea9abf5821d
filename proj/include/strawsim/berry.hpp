#pragma once

#include <algorithm>
#include <cmath>
#include <optional>

#include <nlohmann/json.hpp>

#include "strawsim/control.hpp"
#include "strawsim/vec.hpp"

namespace strawsim {

/// One fruit hanging in the scene. `center` is the centre of the widest
/// section; the axis tilts `incline_deg` from vertical toward `azimuth_deg`
/// and continues into the stem above the calyx.
struct BerryInstance {
  Vec3 center{};
  double d_max{};            ///< widest diameter
  double stem_diameter{};    ///< informational; the cutter severs any stem
  double stem_length_available{};  ///< stem above the calyx, along the stem
  double incline_deg{};
  double azimuth_deg{};
  bool ripe{true};
};

/// Axial radius profile of the fruit, parameterised by the distance u from
/// the tip along the axis. Piecewise: a conical tip whose slope matches the
/// section-to-calyx conversion used by the controller, then two elliptical
/// arcs through the widest section (the shoulder) closing at the calyx.
struct BerryProfile {
  double tan_half{};  ///< axial advance per unit radius in the conical part
  double rho_cal{};
  double rho_max{};
  double u_cal{};  ///< tip to calyx-diameter section
  double u_sh{};   ///< tip to widest section
  double u_top{};  ///< tip to calyx plane
  double a_lower{};  ///< semi-axis of the arc from u_cal up to the shoulder
  double a_upper{};  ///< semi-axis of the arc from the shoulder to the calyx

  static BerryProfile make(double d_max, const ShapeModel& shape, double shoulder_frac) {
    if (d_max <= 0.0) throw std::invalid_argument("BerryProfile: d_max must be > 0");
    if (shoulder_frac <= 0.0 || shoulder_frac >= 1.0) {
      throw std::invalid_argument("BerryProfile: shoulder_frac must lie in (0, 1)");
    }
    BerryProfile p;
    p.tan_half = std::tan(deg2rad(shape.gamma_deg) / 2.0);
    p.rho_max = d_max / 2.0;
    p.rho_cal = d_max / shape.k_cal / 2.0;
    const double s_hl = d_max / shape.k_hl;
    p.u_cal = p.tan_half * p.rho_cal;
    p.u_sh = p.u_cal + shoulder_frac * s_hl;
    p.u_top = p.u_cal + s_hl;
    const double ratio = p.rho_cal / p.rho_max;
    p.a_lower = (p.u_sh - p.u_cal) / std::sqrt(1.0 - ratio * ratio);
    p.a_upper = p.u_top - p.u_sh;
    return p;
  }

  /// Section radius at axial distance u from the tip; 0 outside the body.
  double radius_at(double u) const {
    if (u <= 0.0 || u >= u_top) return 0.0;
    if (u <= u_cal) return u / tan_half;
    if (u <= u_sh) {
      const double w = (u_sh - u) / a_lower;
      return rho_max * std::sqrt(std::max(0.0, 1.0 - w * w));
    }
    const double w = (u - u_sh) / a_upper;
    return rho_max * std::sqrt(std::max(0.0, 1.0 - w * w));
  }
};

/// Horizontal cut through the fruit: centre and radius of the circular
/// section, with the axial coordinate it was taken at.
struct SectionCircle {
  Vec2 center{};
  double radius{};
  double axial{};
};

/// A berry placed in the world, with its profile and axis direction cached.
class BerryBody {
 public:
  BerryBody(const BerryInstance& inst, const ShapeModel& shape, double shoulder_frac)
      : inst_(inst), prof_(BerryProfile::make(inst.d_max, shape, shoulder_frac)) {
    const double inc = deg2rad(inst.incline_deg);
    const double az = deg2rad(inst.azimuth_deg);
    axis_ = {std::sin(inc) * std::cos(az), std::sin(inc) * std::sin(az), std::cos(inc)};
    if (axis_.z <= 0.0) throw std::invalid_argument("BerryBody: incline must be < 90 deg");
  }

  const BerryInstance& instance() const { return inst_; }
  const BerryProfile& profile() const { return prof_; }
  const Vec3& axis() const { return axis_; }

  /// World position of the axis point at axial distance u from the tip.
  Vec3 axis_point(double u) const { return inst_.center + (u - prof_.u_sh) * axis_; }

  Vec3 tip() const { return axis_point(0.0); }
  Vec3 top() const { return axis_point(prof_.u_top); }

  /// World z extent of the body surface. A section circle at axial u spans
  /// z_axis(u) +- radius(u)*sin(incline), so the extent is found on a grid.
  void body_z_range(double* z_min, double* z_max) const {
    const double s_inc = std::hypot(axis_.x, axis_.y);
    double lo = tip().z;
    double hi = lo;
    const int n = 200;
    for (int i = 0; i <= n; ++i) {
      const double u = prof_.u_top * i / n;
      const double z = axis_point(u).z;
      const double spread = prof_.radius_at(u) * s_inc;
      lo = std::min(lo, z - spread);
      hi = std::max(hi, z + spread);
    }
    *z_min = lo;
    *z_max = hi;
  }

  /// Circular cross-section of the body at world height z, taken where the
  /// axis pierces the plane. Tilted berries are approximated by the circle
  /// of the axis-normal section at that point.
  std::optional<SectionCircle> section_at_z(double z) const {
    const double u = prof_.u_sh + (z - inst_.center.z) / axis_.z;
    if (u <= 0.0 || u >= prof_.u_top) return std::nullopt;
    const double r = prof_.radius_at(u);
    if (r <= 0.0) return std::nullopt;
    const Vec3 c = axis_point(u);
    return SectionCircle{{c.x, c.y}, r, u};
  }

  /// Stem centreline point at world height z, if the stem reaches it.
  /// The stem continues straight along the fruit axis above the calyx.
  std::optional<Vec2> stem_at_z(double z) const {
    const double s = (z - top().z) / axis_.z;  // arc length along the stem
    if (s < 0.0 || s > inst_.stem_length_available) return std::nullopt;
    const Vec3 p = top() + s * axis_;
    return Vec2{p.x, p.y};
  }

  /// Stem length left on the fruit when severed at world height z.
  double stem_length_to_z(double z) const { return (z - top().z) / axis_.z; }

 private:
  BerryInstance inst_;
  BerryProfile prof_;
  Vec3 axis_;
};

inline void to_json(nlohmann::json& j, const BerryInstance& b) {
  j = nlohmann::json{{"center", {b.center.x, b.center.y, b.center.z}},
                     {"d_max", b.d_max},
                     {"stem_diameter", b.stem_diameter},
                     {"stem_length_available", b.stem_length_available},
                     {"incline_deg", b.incline_deg},
                     {"azimuth_deg", b.azimuth_deg},
                     {"ripe", b.ripe}};
}

inline void from_json(const nlohmann::json& j, BerryInstance& b) {
  const auto& c = j.at("center");
  b.center = {c.at(0).get<double>(), c.at(1).get<double>(), c.at(2).get<double>()};
  j.at("d_max").get_to(b.d_max);
  j.at("stem_diameter").get_to(b.stem_diameter);
  j.at("stem_length_available").get_to(b.stem_length_available);
  b.incline_deg = j.value("incline_deg", 0.0);
  b.azimuth_deg = j.value("azimuth_deg", 0.0);
  b.ripe = j.value("ripe", true);
}

}  // namespace strawsim
