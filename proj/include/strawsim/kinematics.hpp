#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "strawsim/vec.hpp"

namespace strawsim {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

/// Link dimensions of the cable-driven gripper. All lengths in millimetres,
/// angles in radians. The servo angle phi is positive toward finger opening
/// and negative toward cutter engagement; phi = 0 is the rest pose with the
/// fingers closed and the cutter blade parked.
struct GripperGeometry {
  double r1;        ///< servo horn radius carrying the cable anchor
  double alpha;     ///< anchor phase angle at phi = 0
  double d1;        ///< cable exit offset from the servo axis, lateral
  double d2;        ///< cable exit offset from the servo axis, longitudinal
  double l_PM0;     ///< cable length anchor-to-exit at phi = 0
  double theta0;    ///< finger angle from vertical at rest
  double r2;        ///< finger pulley radius the cable winds on
  double R_joint;   ///< radius of the circle the finger joints sit on
  double l_fin;     ///< finger length, joint to tip
  double S;         ///< IR sensor seat distance from the finger joint
  double l_GR;      ///< cutting plane height above the joint plane
  double phi_max;   ///< servo travel limit, opening side
  double phi_cut_max;  ///< servo travel limit, cutter side (entered as |phi|)
  double beta_slope;   ///< blade angle gained per radian of servo travel
  double beta_max;     ///< blade angle at full engagement
};

/// Cable anchor point on the servo horn, in the servo frame.
inline Vec2 anchor_point(const GripperGeometry& g, double phi) {
  return {g.r1 * std::cos(phi - g.alpha), g.r1 * std::sin(phi - g.alpha)};
}

/// Straight cable length from the horn anchor to the fixed exit at (-d2, d1).
inline double cable_length(const GripperGeometry& g, double phi) {
  const Vec2 p = anchor_point(g, phi);
  return std::hypot(p.x + g.d2, p.y - g.d1);
}

/// Finger angle from vertical for a servo angle on the opening side.
/// Cable paid out beyond l_PM0 unwinds the finger pulley; the result is
/// clamped to the mechanical range [theta0, pi/2].
inline double finger_angle(const GripperGeometry& g, double phi) {
  if (phi < 0.0 || phi > g.phi_max) {
    throw std::out_of_range("finger_angle: phi outside [0, phi_max]");
  }
  const double theta = (cable_length(g, phi) - g.l_PM0) / g.r2 + g.theta0;
  return std::clamp(theta, g.theta0, kPi / 2.0);
}

/// Radial clearance between a fingertip and the gripper axis.
inline double opening_radius(const GripperGeometry& g, double theta) {
  if (theta < g.theta0 - 1e-12 || theta > kPi / 2.0 + 1e-12) {
    throw std::out_of_range("opening_radius: theta outside [theta0, pi/2]");
  }
  double r = g.R_joint - g.l_fin * std::cos(theta);
  if (r < 0.0) {
    // acos/cos round-trips can land a few ulp below zero at theta0.
    if (r > -1e-9) return 0.0;
    throw std::domain_error("opening_radius: fingers cross the axis");
  }
  return r;
}

inline double opening_for_servo(const GripperGeometry& g, double phi) {
  return opening_radius(g, finger_angle(g, phi));
}

/// Cutter blade angle for a servo angle on the cutting side (phi <= 0),
/// saturating at beta_max.
inline double cutter_angle(const GripperGeometry& g, double phi) {
  if (phi > 0.0) throw std::domain_error("cutter_angle: phi must be <= 0");
  return std::min(g.beta_slope * -phi, g.beta_max);
}

/// Servo angle producing the requested fingertip radius, by bisection on the
/// monotone forward map. Accepts r_target in [0, opening at phi_max].
inline double servo_for_opening(const GripperGeometry& g, double r_target) {
  const double r_max = opening_for_servo(g, g.phi_max);
  if (r_target < -1e-9 || r_target > r_max + 1e-9) {
    throw std::out_of_range("servo_for_opening: target radius outside [0, r_max]");
  }
  r_target = std::clamp(r_target, 0.0, r_max);

  double lo = 0.0;
  double hi = g.phi_max;
  if (opening_for_servo(g, lo) >= r_target) return lo;
  if (opening_for_servo(g, hi) <= r_target) return hi;
  for (int i = 0; i < 200 && (hi - lo) > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (opening_for_servo(g, mid) < r_target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Structural and kinematic sanity checks. Throws std::invalid_argument with
/// the violated condition in the message.
inline void validate_geometry(const GripperGeometry& g) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("geometry: ") + what);
  };
  require(g.r1 > 0.0, "r1 must be > 0");
  require(g.d1 > 0.0, "d1 must be > 0");
  require(g.d2 > 0.0, "d2 must be > 0");
  require(g.l_PM0 > 0.0, "l_PM0 must be > 0");
  require(g.r2 > 0.0, "r2 must be > 0");
  require(g.R_joint > 0.0, "R_joint must be > 0");
  require(g.l_fin > 0.0, "l_fin must be > 0");
  require(g.S > 0.0, "S must be > 0");
  require(g.l_GR > 0.0, "l_GR must be > 0");
  require(g.phi_max > 0.0, "phi_max must be > 0");
  require(g.phi_cut_max > 0.0, "phi_cut_max must be > 0");
  require(g.beta_slope > 0.0, "beta_slope must be > 0");
  require(g.beta_max > 0.0, "beta_max must be > 0");
  require(g.theta0 > 0.0 && g.theta0 < kPi / 2.0, "theta0 must lie in (0, pi/2)");
  require(g.l_fin * std::cos(g.theta0) <= g.R_joint + 1e-9,
          "fingertips must not cross the axis at rest");
  require(g.R_joint - g.S * std::cos(g.theta0) > 0.0,
          "sensor ring must stay outside the gripper axis");

  // The fingertip radius must grow strictly with servo angle over the whole
  // travel, otherwise servo_for_opening is ill-posed.
  const int n = 256;
  double prev = opening_for_servo(g, 0.0);
  for (int i = 1; i <= n; ++i) {
    const double r = opening_for_servo(g, g.phi_max * i / n);
    require(r > prev, "opening radius must increase monotonically with phi");
    prev = r;
  }
}

/// Desk-scale reference gripper. The cable constants are derived from the
/// primitive dimensions so that phi = 0 gives a closed gripper (r = 0) and
/// phi = phi_max gives r = 40 mm exactly.
inline GripperGeometry default_geometry() {
  GripperGeometry g{};
  g.r1 = 10.0;
  g.alpha = 1.68;
  g.d1 = 45.0;
  g.d2 = 45.0;
  g.R_joint = 50.0;
  g.l_fin = 60.0;
  g.S = 25.0;
  g.l_GR = 30.0;
  g.phi_max = deg2rad(28.3);
  g.phi_cut_max = deg2rad(40.0);
  g.beta_max = deg2rad(60.0);
  g.beta_slope = g.beta_max / g.phi_cut_max;

  g.theta0 = std::acos(g.R_joint / g.l_fin);
  g.l_PM0 = cable_length(g, 0.0);
  const double theta_end = std::acos((g.R_joint - 40.0) / g.l_fin);
  g.r2 = (cable_length(g, g.phi_max) - g.l_PM0) / (theta_end - g.theta0);
  return g;
}

inline void to_json(nlohmann::json& j, const GripperGeometry& g) {
  j = nlohmann::json{{"r1", g.r1},
                     {"alpha", g.alpha},
                     {"d1", g.d1},
                     {"d2", g.d2},
                     {"l_PM0", g.l_PM0},
                     {"theta0", g.theta0},
                     {"r2", g.r2},
                     {"R_joint", g.R_joint},
                     {"l_fin", g.l_fin},
                     {"S", g.S},
                     {"l_GR", g.l_GR},
                     {"phi_max", g.phi_max},
                     {"phi_cut_max", g.phi_cut_max},
                     {"beta_slope", g.beta_slope},
                     {"beta_max", g.beta_max}};
}

inline void from_json(const nlohmann::json& j, GripperGeometry& g) {
  j.at("r1").get_to(g.r1);
  j.at("alpha").get_to(g.alpha);
  j.at("d1").get_to(g.d1);
  j.at("d2").get_to(g.d2);
  j.at("l_PM0").get_to(g.l_PM0);
  j.at("theta0").get_to(g.theta0);
  j.at("r2").get_to(g.r2);
  j.at("R_joint").get_to(g.R_joint);
  j.at("l_fin").get_to(g.l_fin);
  j.at("S").get_to(g.S);
  j.at("l_GR").get_to(g.l_GR);
  j.at("phi_max").get_to(g.phi_max);
  j.at("phi_cut_max").get_to(g.phi_cut_max);
  j.at("beta_slope").get_to(g.beta_slope);
  j.at("beta_max").get_to(g.beta_max);
}

struct KinematicsRow {
  double phi;    ///< servo angle, radians
  double theta;  ///< finger angle; rest value on the cutter side
  double r;      ///< fingertip radius
  double beta;   ///< blade angle; 0 on the opening side
};

/// Samples the forward kinematics over the full servo travel
/// [-phi_cut_max, phi_max]. Both travel limits and phi = 0 appear exactly.
inline std::vector<KinematicsRow> kinematics_table(const GripperGeometry& g, double step) {
  if (step <= 0.0) throw std::invalid_argument("kinematics_table: step must be > 0");

  std::vector<double> phis;
  for (double p = 0.0; p < g.phi_cut_max; p += step) phis.push_back(-p);
  phis.push_back(-g.phi_cut_max);
  for (double p = step; p < g.phi_max; p += step) phis.push_back(p);
  phis.push_back(g.phi_max);
  std::sort(phis.begin(), phis.end());

  std::vector<KinematicsRow> rows;
  rows.reserve(phis.size());
  for (double phi : phis) {
    KinematicsRow row{};
    row.phi = phi;
    if (phi >= 0.0) {
      row.theta = finger_angle(g, phi);
      row.r = opening_radius(g, row.theta);
      row.beta = 0.0;
    } else {
      row.theta = g.theta0;
      row.r = opening_radius(g, g.theta0);
      row.beta = cutter_angle(g, phi);
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace strawsim
