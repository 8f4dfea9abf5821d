#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "strawsim/kinematics.hpp"
#include "strawsim/vec.hpp"

namespace strawsim {

/// One IR measurement: emitter-on and emitter-off ADC counts.
struct IrSample {
  double raw_on{};
  double raw_off{};
  std::int64_t t_ms{};
};

/// Ambient rejection: the emitter-off reading carries sunlight and indoor
/// lighting only, so the difference isolates the reflected signal.
inline double filter_sample(const IrSample& s) {
  return std::max(s.raw_on - s.raw_off, 0.0);
}

/// Reciprocal distance model d(v) = a / (v - b) + c fitted to bench samples.
/// Valid analog window is [v_min, v_max]; the curve is strictly decreasing
/// there when a > 0 and b < v_min.
struct CalibrationCurve {
  double a{};
  double b{};
  double c{};
  double v_min{};
  double v_max{};

  double distance_at(double v) const { return a / (v - b) + c; }
  double analog_at(double d) const { return a / (d - c) + b; }
  double min_distance() const { return distance_at(v_max); }
  double max_distance() const { return distance_at(v_min); }
};

inline void validate_calibration(const CalibrationCurve& k) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("calibration: ") + what);
  };
  require(k.a > 0.0, "a must be > 0");
  require(k.v_min < k.v_max, "v_min must be < v_max");
  require(k.b < k.v_min, "b must lie below the analog window");
}

inline CalibrationCurve default_calibration() {
  return {4000.0, 40.0, 2.0, 90.0, 1040.0};
}

struct DistanceReading {
  double mm{};
  bool saturated{};  ///< analog value fell outside [v_min, v_max]
};

/// Converts a filtered analog value to distance, clamping out-of-window
/// values to the corresponding range end and flagging them.
inline DistanceReading analog_to_distance(const CalibrationCurve& k, double v) {
  if (v > k.v_max) return {k.min_distance(), true};
  if (v < k.v_min) return {k.max_distance(), true};
  return {k.distance_at(v), false};
}

struct CalibrationFit {
  CalibrationCurve curve;
  double rms{};  ///< residual distance error over the samples
};

namespace detail {

// For a fixed pole b the model is linear in (a, c) over x = 1/(v - b);
// returns the least-squares SSE together with the solved pair.
inline double calibration_sse(const std::vector<std::pair<double, double>>& s, double b,
                              double* a_out, double* c_out) {
  const double n = static_cast<double>(s.size());
  double sx = 0.0, sd = 0.0, sxx = 0.0, sxd = 0.0;
  for (const auto& [v, d] : s) {
    const double x = 1.0 / (v - b);
    sx += x;
    sd += d;
    sxx += x * x;
    sxd += x * d;
  }
  const double var = sxx - sx * sx / n;
  if (var <= 1e-300) return std::numeric_limits<double>::infinity();
  const double a = (sxd - sx * sd / n) / var;
  const double c = (sd - a * sx) / n;
  double sse = 0.0;
  for (const auto& [v, d] : s) {
    const double r = a / (v - b) + c - d;
    sse += r * r;
  }
  *a_out = a;
  *c_out = c;
  return sse;
}

}  // namespace detail

/// Fits the reciprocal calibration model to (analog, distance) samples by
/// profiling the pole b (coarse grid, then golden-section refinement) with
/// (a, c) solved in closed form. Needs at least four samples with distinct
/// analog values.
inline CalibrationFit fit_calibration(const std::vector<std::pair<double, double>>& samples) {
  if (samples.size() < 4) {
    throw std::invalid_argument("fit_calibration: need at least 4 samples");
  }
  double v_lo = samples[0].first;
  double v_hi = samples[0].first;
  for (const auto& [v, d] : samples) {
    v_lo = std::min(v_lo, v);
    v_hi = std::max(v_hi, v);
  }
  if (v_hi - v_lo < 1e-9) {
    throw std::invalid_argument("fit_calibration: analog values are all identical");
  }

  double a = 0.0, c = 0.0;
  const double b_hi = v_lo - 1e-6;
  const double b_lo = v_lo - 50.0 * (v_hi - v_lo) - 1000.0;

  // Coarse scan for the bracket.
  const int kGrid = 400;
  int best = 0;
  double best_sse = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= kGrid; ++i) {
    const double b = b_lo + (b_hi - b_lo) * i / kGrid;
    const double sse = detail::calibration_sse(samples, b, &a, &c);
    if (sse < best_sse) {
      best_sse = sse;
      best = i;
    }
  }
  double lo = b_lo + (b_hi - b_lo) * std::max(0, best - 1) / kGrid;
  double hi = b_lo + (b_hi - b_lo) * std::min(kGrid, best + 1) / kGrid;

  // Golden-section refinement inside the bracket.
  const double gr = 0.6180339887498949;
  double x1 = hi - gr * (hi - lo);
  double x2 = lo + gr * (hi - lo);
  double f1 = detail::calibration_sse(samples, x1, &a, &c);
  double f2 = detail::calibration_sse(samples, x2, &a, &c);
  for (int i = 0; i < 200 && (hi - lo) > 1e-12; ++i) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = detail::calibration_sse(samples, x1, &a, &c);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = detail::calibration_sse(samples, x2, &a, &c);
    }
  }
  const double b = 0.5 * (lo + hi);
  const double sse = detail::calibration_sse(samples, b, &a, &c);

  CalibrationFit fit;
  fit.curve = {a, b, c, v_lo, v_hi};
  fit.rms = std::sqrt(sse / static_cast<double>(samples.size()));
  validate_calibration(fit.curve);
  return fit;
}

inline void to_json(nlohmann::json& j, const CalibrationCurve& k) {
  j = nlohmann::json{
      {"a", k.a}, {"b", k.b}, {"c", k.c}, {"v_min", k.v_min}, {"v_max", k.v_max}};
}

inline void from_json(const nlohmann::json& j, CalibrationCurve& k) {
  j.at("a").get_to(k.a);
  j.at("b").get_to(k.b);
  j.at("c").get_to(k.c);
  j.at("v_min").get_to(k.v_min);
  j.at("v_max").get_to(k.v_max);
}

/// Sensor mounting azimuths around the gripper axis. Sensor 1 looks back
/// from +y; 2 and 3 complete the symmetric triple.
inline constexpr std::array<double, 3> kSensorAzimuth = {
    kPi / 2.0, kPi + kPi / 6.0, -kPi / 6.0};

/// Distances reported by the three finger-mounted sensors at one instant,
/// measured along the tilted sensor axes.
struct SensorFrame {
  std::array<double, 3> mdp{};
  double theta{};
  std::int64_t t_ms{};
  std::array<bool, 3> valid{};  ///< in-range echo per sensor

  bool complete() const { return valid[0] && valid[1] && valid[2]; }
};

/// Projects the axis-aligned distances onto the joint plane: the sensors
/// pitch with the fingers, so the horizontal reach is mdp * sin(theta).
inline std::array<double, 3> project_distances(const SensorFrame& f) {
  if (f.theta <= 0.0 || f.theta > kPi / 2.0 + 1e-12) {
    throw std::domain_error("project_distances: theta outside (0, pi/2]");
  }
  const double s = std::sin(f.theta);
  return {f.mdp[0] * s, f.mdp[1] * s, f.mdp[2] * s};
}

/// Horizontal radius of the sensor seats for a finger angle.
inline double sensor_ring_radius(const GripperGeometry& g, double theta) {
  if (theta < 0.0 || theta > kPi / 2.0 + 1e-12) {
    throw std::domain_error("sensor_ring_radius: theta outside [0, pi/2]");
  }
  const double l = g.R_joint - g.S * std::cos(theta);
  if (l <= 0.0) throw std::domain_error("sensor_ring_radius: ring collapsed behind the axis");
  return l;
}

/// Surface points seen by the sensors, in the gripper frame: each sensor
/// sits at radius l on its azimuth and looks inward, so the echo lies at
/// radius l - md along the same azimuth.
inline std::array<Vec2, 3> detected_points(double l, const std::array<double, 3>& md) {
  std::array<Vec2, 3> p{};
  for (int i = 0; i < 3; ++i) {
    const double r = l - md[i];
    p[i] = {r * std::cos(kSensorAzimuth[i]), r * std::sin(kSensorAzimuth[i])};
  }
  return p;
}

/// Thrown when the three detected points are too close to collinear for a
/// stable circle fit; `conditioning` carries the offending determinant.
class EstimationError : public std::runtime_error {
 public:
  EstimationError(const std::string& what, double conditioning)
      : std::runtime_error(what), conditioning_(conditioning) {}
  double conditioning() const { return conditioning_; }

 private:
  double conditioning_;
};

/// Minimum |determinant| of the circumcenter system accepted by
/// estimate_section, in mm^2.
inline constexpr double kSectionConditioningMin = 1e-6;

struct SectionEstimate {
  Vec2 q{};               ///< section centre in the gripper frame
  double d_sec{};         ///< section diameter
  std::array<Vec2, 3> points{};
};

/// Circle through three detected points: centre from the two chord
/// bisector equations, diameter from the circumradius.
inline SectionEstimate estimate_section(const std::array<Vec2, 3>& p) {
  const double a = 2.0 * (p[1].x - p[0].x);
  const double b = 2.0 * (p[1].y - p[0].y);
  const double c = dot(p[1], p[1]) - dot(p[0], p[0]);
  const double d = 2.0 * (p[2].x - p[1].x);
  const double e = 2.0 * (p[2].y - p[1].y);
  const double f = dot(p[2], p[2]) - dot(p[1], p[1]);

  const double det = b * d - e * a;
  if (std::abs(det) <= kSectionConditioningMin) {
    throw EstimationError("estimate_section: detected points are nearly collinear", det);
  }

  SectionEstimate est;
  est.q.x = (b * f - e * c) / det;
  est.q.y = (d * c - a * f) / det;
  est.d_sec = 2.0 * norm(p[0] - est.q);
  est.points = p;
  return est;
}

}  // namespace strawsim
