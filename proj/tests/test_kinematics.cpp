#include <cmath>
#include <stdexcept>

#include <catch2/catch_amalgamated.hpp>
#include <nlohmann/json.hpp>

#include "strawsim/kinematics.hpp"

using namespace strawsim;

namespace {
const GripperGeometry kG = default_geometry();
}

TEST_CASE("derived cable constants match the hand computation") {
  CHECK(kG.theta0 == Catch::Approx(0.58568554345715085).margin(1e-15));
  CHECK(kG.l_PM0 == Catch::Approx(70.33171976400395).margin(1e-12));
  CHECK(kG.r2 == Catch::Approx(3.2045207355158345).margin(1e-12));
  CHECK(kG.beta_slope == Catch::Approx(1.5).margin(1e-15));
}

TEST_CASE("cable length and anchor at sampled servo angles") {
  const Vec2 a = anchor_point(kG, 0.3);
  CHECK(a.x == Catch::Approx(1.8964083129783447).margin(1e-12));
  CHECK(a.y == Catch::Approx(-9.8185353037235963).margin(1e-12));
  CHECK(cable_length(kG, 0.2) == Catch::Approx(71.609337534303123).margin(1e-12));
  CHECK(cable_length(kG, 0.4) == Catch::Approx(72.596542362078523).margin(1e-12));
}

TEST_CASE("finger angle and opening radius at sampled servo angles") {
  CHECK(finger_angle(kG, 0.0) == Catch::Approx(kG.theta0).margin(1e-15));
  CHECK(finger_angle(kG, 0.2) == Catch::Approx(0.98437785215070461).margin(1e-12));
  CHECK(finger_angle(kG, 0.4) == Catch::Approx(1.2924441463812799).margin(1e-12));
  CHECK(opening_for_servo(kG, 0.2) == Catch::Approx(16.797114448631824).margin(1e-9));
  CHECK(opening_for_servo(kG, 0.4) == Catch::Approx(33.513702313370743).margin(1e-9));
}

TEST_CASE("travel endpoints close fully and open to 40 mm") {
  CHECK(std::abs(opening_for_servo(kG, 0.0)) <= 1e-9);
  CHECK(opening_for_servo(kG, kG.phi_max) == Catch::Approx(40.0).margin(1e-9));
}

TEST_CASE("finger angle stays inside the mechanical range") {
  for (int i = 0; i <= 500; ++i) {
    const double phi = kG.phi_max * i / 500;
    const double t = finger_angle(kG, phi);
    CHECK(t >= kG.theta0);
    CHECK(t <= kPi / 2.0);
  }
}

TEST_CASE("opening radius grows strictly with servo angle") {
  double prev = opening_for_servo(kG, 0.0);
  for (int i = 1; i <= 256; ++i) {
    const double r = opening_for_servo(kG, kG.phi_max * i / 256);
    CHECK(r > prev);
    prev = r;
  }
}

TEST_CASE("inverse kinematics round-trips over the opening range") {
  for (int i = 0; i <= 80; ++i) {
    const double r = 40.0 * i / 80.0;
    const double phi = servo_for_opening(kG, r);
    CHECK(std::abs(opening_for_servo(kG, phi) - r) <= 1e-6);
  }
}

TEST_CASE("opening response stays near-linear in servo angle") {
  // Worst deviation from the straight 0..40 mm chord; about 3.2% of travel.
  double dev = 0.0;
  for (int i = 0; i <= 1000; ++i) {
    const double phi = kG.phi_max * i / 1000;
    const double chord = 40.0 * phi / kG.phi_max;
    dev = std::max(dev, std::abs(opening_for_servo(kG, phi) - chord));
  }
  CHECK(dev <= 0.05 * 40.0);
  CHECK(dev == Catch::Approx(1.290098).margin(0.01));
}

TEST_CASE("cutter angle is linear and saturates") {
  CHECK(cutter_angle(kG, 0.0) == 0.0);
  CHECK(cutter_angle(kG, -deg2rad(20.0)) == Catch::Approx(0.52359877559829882).margin(1e-12));
  CHECK(cutter_angle(kG, -kG.phi_cut_max) == Catch::Approx(kG.beta_max).margin(1e-12));
  CHECK(cutter_angle(kG, -deg2rad(50.0)) == Catch::Approx(kG.beta_max).margin(1e-12));
  CHECK_THROWS_AS(cutter_angle(kG, 0.1), std::domain_error);
}

TEST_CASE("servo angle range is enforced") {
  CHECK_THROWS_AS(finger_angle(kG, -0.01), std::out_of_range);
  CHECK_THROWS_AS(finger_angle(kG, kG.phi_max + 0.01), std::out_of_range);
  CHECK_THROWS_AS(opening_radius(kG, kG.theta0 - 0.01), std::out_of_range);
  CHECK_THROWS_AS(opening_radius(kG, kPi / 2.0 + 0.01), std::out_of_range);
  CHECK_THROWS_AS(servo_for_opening(kG, -0.5), std::out_of_range);
  CHECK_THROWS_AS(servo_for_opening(kG, 40.001), std::out_of_range);
}

TEST_CASE("geometry validation accepts the default and rejects broken sets") {
  CHECK_NOTHROW(validate_geometry(kG));

  GripperGeometry g = kG;
  g.r2 = 0.0;
  CHECK_THROWS_AS(validate_geometry(g), std::invalid_argument);

  g = kG;
  g.theta0 = 2.0;
  CHECK_THROWS_AS(validate_geometry(g), std::invalid_argument);

  g = kG;
  g.l_fin = 80.0;  // fingertips would cross the axis at rest
  CHECK_THROWS_AS(validate_geometry(g), std::invalid_argument);

  g = kG;
  g.r2 = -kG.r2;  // reversed winding makes the opening shrink with phi
  CHECK_THROWS_AS(validate_geometry(g), std::invalid_argument);
}

TEST_CASE("geometry survives a JSON round trip") {
  nlohmann::json j = kG;
  const auto g = j.get<GripperGeometry>();
  CHECK(g.r1 == kG.r1);
  CHECK(g.alpha == kG.alpha);
  CHECK(g.d1 == kG.d1);
  CHECK(g.d2 == kG.d2);
  CHECK(g.l_PM0 == kG.l_PM0);
  CHECK(g.theta0 == kG.theta0);
  CHECK(g.r2 == kG.r2);
  CHECK(g.R_joint == kG.R_joint);
  CHECK(g.l_fin == kG.l_fin);
  CHECK(g.S == kG.S);
  CHECK(g.l_GR == kG.l_GR);
  CHECK(g.phi_max == kG.phi_max);
  CHECK(g.phi_cut_max == kG.phi_cut_max);
  CHECK(g.beta_slope == kG.beta_slope);
  CHECK(g.beta_max == kG.beta_max);
}

TEST_CASE("kinematics table covers both travel sides with exact endpoints") {
  const auto rows = kinematics_table(kG, deg2rad(1.0));
  REQUIRE(!rows.empty());

  CHECK(rows.front().phi == Catch::Approx(-kG.phi_cut_max).margin(1e-15));
  CHECK(rows.front().beta == Catch::Approx(kG.beta_max).margin(1e-12));
  CHECK(rows.back().phi == Catch::Approx(kG.phi_max).margin(1e-15));
  CHECK(rows.back().r == Catch::Approx(40.0).margin(1e-9));

  bool has_zero = false;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0) CHECK(rows[i].phi > rows[i - 1].phi);
    if (rows[i].phi == 0.0) {
      has_zero = true;
      CHECK(std::abs(rows[i].r) <= 1e-9);
      CHECK(rows[i].beta == 0.0);
    }
    if (rows[i].phi < 0.0) {
      // Cutting side: fingers rest, the blade engages linearly.
      CHECK(rows[i].theta == Catch::Approx(kG.theta0).margin(1e-15));
      CHECK(rows[i].beta == Catch::Approx(-rows[i].phi * kG.beta_slope).margin(1e-12));
    } else {
      CHECK(rows[i].beta == 0.0);
    }
  }
  CHECK(has_zero);
}
