#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "strawsim/berry.hpp"
#include "strawsim/perception.hpp"
#include "strawsim/plant.hpp"
#include "strawsim/rng.hpp"
#include "strawsim/scene.hpp"
#include "strawsim/vec.hpp"

namespace strawsim {

/// Everything sense() needs besides pose and scene.
struct SenseContext {
  const GripperGeometry* geom{};
  const CalibrationCurve* curve{};
  const AmbientProfile* ambient{};
  double sigma_mm{};  ///< distance noise before the analog conversion; 0 disables
  double adc_max{4095.0};
};

/// Ground truth of the sensed section, for error bookkeeping.
struct TrueSection {
  int berry_index{-1};
  double z{};       ///< world height of the sensing plane
  Vec2 center{};    ///< true section centre, world xy
  double radius{};  ///< true section radius
};

namespace detail {

// Signed distance-like gap between a ray point and the nearest body surface:
// negative once the point is inside any berry. Returns the berry index hit.
inline double surface_gap(const std::vector<BerryBody>& berries, const Vec3& p, int* index) {
  double best = std::numeric_limits<double>::infinity();
  *index = -1;
  for (std::size_t i = 0; i < berries.size(); ++i) {
    const BerryBody& b = berries[i];
    const Vec3 rel = p - b.instance().center;
    const double along = dot(rel, b.axis());
    const Vec3 radial = rel - along * b.axis();
    const double gap = norm(radial) - b.profile().radius_at(b.profile().u_sh + along);
    if (gap < best) {
      best = gap;
      *index = static_cast<int>(i);
    }
  }
  return best;
}

// First intersection of a ray with the berry surfaces: 0.25 mm march to
// bracket the crossing, then bisection. Returns the travel distance.
inline std::optional<double> march_ray(const std::vector<BerryBody>& berries, const Vec3& origin,
                                       const Vec3& dir, double t_max, int* berry_index) {
  const double kStep = 0.25;
  int idx = -1;
  double prev_t = 0.0;
  if (surface_gap(berries, origin, &idx) <= 0.0) {
    *berry_index = idx;
    return 0.0;
  }
  for (double t = kStep; t <= t_max + kStep; t += kStep) {
    const double tc = std::min(t, t_max);
    const double gap = surface_gap(berries, origin + tc * dir, &idx);
    if (gap <= 0.0) {
      double lo = prev_t;
      double hi = tc;
      for (int i = 0; i < 80 && (hi - lo) > 1e-12; ++i) {
        const double mid = 0.5 * (lo + hi);
        int dummy = -1;
        if (surface_gap(berries, origin + mid * dir, &dummy) <= 0.0) {
          hi = mid;
        } else {
          lo = mid;
        }
      }
      int hit_idx = -1;
      surface_gap(berries, origin + hi * dir, &hit_idx);
      *berry_index = hit_idx;
      return hi;
    }
    prev_t = tc;
    if (tc >= t_max) break;
  }
  return std::nullopt;
}

// Near intersection of a planar ray with a circle, as a distance along the
// ray; nullopt when the ray misses or the circle lies behind the origin.
inline std::optional<double> cast_circle(const Vec2& origin, const Vec2& dir, const Vec2& center,
                                         double radius) {
  const Vec2 w = center - origin;
  const double proj = dot(w, dir);
  const double d2 = dot(w, w) - proj * proj;
  const double r2 = radius * radius;
  if (d2 > r2) return std::nullopt;
  const double h = std::sqrt(r2 - d2);
  const double near = proj - h;
  if (near >= 0.0) return near;
  if (proj + h >= 0.0) return 0.0;  // origin inside the circle
  return std::nullopt;
}

}  // namespace detail

/// Simulates one synchronized reading of the three finger sensors.
///
/// Sensor i sits on the ring at radius sensor_ring_radius(theta), height
/// S*sin(theta) above the joint plane, and looks down its finger: direction
/// (-sin(theta) horizontally inward, -cos(theta) vertically). The first
/// surface hit of sensor 1 fixes the sensing plane; every sensor then reads
/// the section circles in that plane, which is the single-section premise
/// the estimator downstream relies on.
///
/// Each optical distance is disturbed in the distance domain, converted to
/// analog counts, summed with ambient light, clipped by the ADC, and pushed
/// back through the ambient filter and calibration curve, so saturation and
/// clipping behave like the real signal chain.
inline SensorFrame sense(const SenseContext& ctx, const Vec3& gripper_origin, double yaw,
                         double theta, const std::vector<BerryBody>& berries, std::int64_t t_ms,
                         Rng& rng, TrueSection* truth = nullptr) {
  const GripperGeometry& g = *ctx.geom;
  const CalibrationCurve& k = *ctx.curve;
  const double t_max = k.max_distance();

  SensorFrame frame;
  frame.theta = theta;
  frame.t_ms = t_ms;

  const double l = sensor_ring_radius(g, theta);
  const double sin_t = std::sin(theta);
  const double cos_t = std::cos(theta);

  std::array<Vec2, 3> s_xy;
  std::array<Vec2, 3> s_dir;
  for (int i = 0; i < 3; ++i) {
    const double az = kSensorAzimuth[i] + yaw;
    s_xy[i] = gripper_origin.xy() + Vec2{l * std::cos(az), l * std::sin(az)};
    s_dir[i] = {-std::cos(az), -std::sin(az)};
  }
  const double z_s = gripper_origin.z + g.S * sin_t;

  // Sensing plane from sensor 1's first surface hit.
  std::optional<double> plane_z;
  if (sin_t > 1e-12) {
    const Vec3 origin{s_xy[0].x, s_xy[0].y, z_s};
    const Vec3 dir{s_dir[0].x * sin_t, s_dir[0].y * sin_t, -cos_t};
    int hit_berry = -1;
    if (const auto t_hit = detail::march_ray(berries, origin, dir, t_max, &hit_berry)) {
      plane_z = z_s - *t_hit * cos_t;
      if (truth) {
        truth->berry_index = hit_berry;
        truth->z = *plane_z;
        if (const auto sec = berries[hit_berry].section_at_z(*plane_z)) {
          truth->center = sec->center;
          truth->radius = sec->radius;
        }
      }
    }
  }

  for (int i = 0; i < 3; ++i) {
    std::optional<double> d_true;
    if (plane_z) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& b : berries) {
        if (const auto sec = b.section_at_z(*plane_z)) {
          if (const auto h = detail::cast_circle(s_xy[i], s_dir[i], sec->center, sec->radius)) {
            best = std::min(best, *h);
          }
        }
      }
      if (best / sin_t <= t_max) d_true = best / sin_t;  // infinity stays a miss
    }

    double v_sig = 0.0;
    if (d_true) {
      double d = *d_true;
      if (ctx.sigma_mm > 0.0) d += ctx.sigma_mm * rng.gauss();
      v_sig = d <= k.c ? ctx.adc_max : k.analog_at(d);
    } else {
      v_sig = k.analog_at(k.max_distance());  // echo floor at the range end
    }

    const double amb = ctx.ambient->counts_at(t_ms);
    IrSample sample;
    sample.t_ms = t_ms;
    sample.raw_off = std::min(amb, ctx.adc_max);
    sample.raw_on = std::min(v_sig + amb, ctx.adc_max);

    const DistanceReading reading = analog_to_distance(k, filter_sample(sample));
    frame.mdp[i] = reading.mm;
    frame.valid[i] = d_true.has_value() && !reading.saturated;
  }
  return frame;
}

}  // namespace strawsim
