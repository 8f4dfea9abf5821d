#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "strawsim/berry.hpp"
#include "strawsim/kinematics.hpp"
#include "strawsim/rng.hpp"
#include "strawsim/vec.hpp"

namespace strawsim {

/// Slowly varying background illumination reaching the IR receivers,
/// in ADC counts. Clamped at zero: light does not go negative.
struct AmbientProfile {
  double mean{150.0};
  double amplitude{100.0};
  double period_s{10.0};

  double counts_at(std::int64_t t_ms) const {
    if (amplitude == 0.0) return std::max(0.0, mean);
    const double phase = 2.0 * kPi * (t_ms / 1000.0) / period_s;
    return std::max(0.0, mean + amplitude * std::sin(phase));
  }
};

struct Scene {
  std::vector<BerryInstance> berries;
  AmbientProfile ambient;
  std::uint64_t seed{1};
};

/// Sampling ranges for synthetic scenes.
struct SceneSpec {
  int n{3};
  Vec3 box_min{-150.0, -30.0, 140.0};
  Vec3 box_max{150.0, 30.0, 160.0};
  double d_max_min{18.0};
  double d_max_max{35.0};
  double incline_max_deg{0.0};
  double stem_length{60.0};
  double min_separation{5.0};  ///< centre-to-centre lower bound
  bool cluster{false};
  double cluster_spacing{30.0};
};

/// Draws a scene by rejection sampling: centres are uniform in the box (or
/// chained `cluster_spacing` apart in cluster mode) and re-drawn until all
/// pairs clear the surface separation. Throws std::runtime_error when the
/// box cannot host the requested count.
inline Scene generate_scene(const SceneSpec& spec, std::uint64_t seed) {
  if (spec.n < 1) throw std::invalid_argument("generate_scene: n must be >= 1");
  if (spec.min_separation < 5.0) {
    throw std::invalid_argument("generate_scene: separation below the 5 mm floor");
  }

  Scene scene;
  scene.seed = seed;
  Rng rng(seed);

  const int kMaxAttempts = 10000;
  for (int i = 0; i < spec.n; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      BerryInstance b;
      if (spec.cluster && i > 0) {
        const auto& prev = scene.berries.back();
        const double az = rng.uniform(0.0, 2.0 * kPi);
        b.center = prev.center + Vec3{spec.cluster_spacing * std::cos(az),
                                      spec.cluster_spacing * std::sin(az), 0.0};
      } else {
        b.center = {rng.uniform(spec.box_min.x, spec.box_max.x),
                    rng.uniform(spec.box_min.y, spec.box_max.y),
                    rng.uniform(spec.box_min.z, spec.box_max.z)};
      }
      b.d_max = rng.uniform(spec.d_max_min, spec.d_max_max);
      b.stem_diameter = rng.uniform(1.7, 2.5);
      b.stem_length_available = spec.stem_length;
      b.incline_deg = spec.incline_max_deg > 0.0 ? rng.uniform(0.0, spec.incline_max_deg) : 0.0;
      b.azimuth_deg = rng.uniform(0.0, 360.0);
      b.ripe = true;

      bool clear = true;
      for (const auto& other : scene.berries) {
        const double gap =
            norm(b.center - other.center) - 0.5 * (b.d_max + other.d_max);
        if (gap < spec.min_separation) {
          clear = false;
          break;
        }
      }
      if (clear) {
        scene.berries.push_back(b);
        placed = true;
      }
    }
    if (!placed) {
      throw std::runtime_error("generate_scene: could not place berries with the requested separation");
    }
  }
  return scene;
}

inline void to_json(nlohmann::json& j, const AmbientProfile& a) {
  j = nlohmann::json{{"mean", a.mean}, {"amplitude", a.amplitude}, {"period_s", a.period_s}};
}

inline void from_json(const nlohmann::json& j, AmbientProfile& a) {
  a.mean = j.value("mean", 150.0);
  a.amplitude = j.value("amplitude", 100.0);
  a.period_s = j.value("period_s", 10.0);
}

inline void to_json(nlohmann::json& j, const Scene& s) {
  j = nlohmann::json{{"berries", s.berries}, {"ambient", s.ambient}, {"seed", s.seed}};
}

inline void from_json(const nlohmann::json& j, Scene& s) {
  j.at("berries").get_to(s.berries);
  if (j.contains("ambient")) j.at("ambient").get_to(s.ambient);
  s.seed = j.value("seed", std::uint64_t{1});
}

}  // namespace strawsim
