#pragma once

// Independent oracles and process helpers shared by the test suite. The
// oracles are deliberately written from scratch against the geometry, not by
// calling the library, so agreement is evidence rather than tautology.

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "strawsim/control.hpp"
#include "strawsim/vec.hpp"

namespace oracle {

/// Near intersection parameter of ray s + t*u (|u| = 1) with the circle
/// (c, rho), by the quadratic formula. nullopt when the ray misses or the
/// circle lies behind the origin.
inline std::optional<double> ray_circle_near(const strawsim::Vec2& s, const strawsim::Vec2& u,
                                             const strawsim::Vec2& c, double rho) {
  const strawsim::Vec2 m{s.x - c.x, s.y - c.y};
  const double b = m.x * u.x + m.y * u.y;
  const double q = m.x * m.x + m.y * m.y - rho * rho;
  const double disc = b * b - q;
  if (disc < 0.0) return std::nullopt;
  const double t = -b - std::sqrt(disc);
  if (t < 0.0) return std::nullopt;
  return t;
}

/// Circumcircle through three points via the translated two-row linear
/// system: move p0 to the origin, then 2*B.c = |B|^2 and 2*C.c = |C|^2.
struct Circle {
  strawsim::Vec2 center;
  double radius;
};

inline std::optional<Circle> circumcircle(const strawsim::Vec2& p0, const strawsim::Vec2& p1,
                                          const strawsim::Vec2& p2) {
  const double bx = p1.x - p0.x, by = p1.y - p0.y;
  const double cx = p2.x - p0.x, cy = p2.y - p0.y;
  const double det = 2.0 * (bx * cy - by * cx);
  if (std::abs(det) < 1e-12) return std::nullopt;
  const double b2 = bx * bx + by * by;
  const double c2 = cx * cx + cy * cy;
  const double ux = (cy * b2 - by * c2) / det;
  const double uy = (bx * c2 - cx * b2) / det;
  return Circle{{p0.x + ux, p0.y + uy}, std::hypot(ux, uy)};
}

/// Berry silhouette radius as a function of axial distance from the tip,
/// rebuilt from the shape ratios: cone to the calyx-diameter section, then
/// two elliptic arcs meeting at the widest section.
inline double profile_radius(double d_max, const strawsim::ShapeModel& shape,
                             double shoulder_frac, double u) {
  const double tan_half = std::tan(strawsim::deg2rad(shape.gamma_deg) / 2.0);
  const double rho_max = d_max / 2.0;
  const double rho_cal = d_max / shape.k_cal / 2.0;
  const double s_hl = d_max / shape.k_hl;
  const double u_cal = rho_cal * tan_half;
  const double u_sh = u_cal + shoulder_frac * s_hl;
  const double u_top = u_cal + s_hl;
  if (u <= 0.0 || u >= u_top) return 0.0;
  if (u <= u_cal) return u / tan_half;
  if (u <= u_sh) {
    const double a = (u_sh - u_cal) / std::sqrt(1.0 - (rho_cal / rho_max) * (rho_cal / rho_max));
    const double x = (u_sh - u) / a;
    return rho_max * std::sqrt(1.0 - x * x);
  }
  const double a = u_top - u_sh;
  const double x = (u - u_sh) / a;
  return rho_max * std::sqrt(1.0 - x * x);
}

}  // namespace oracle

namespace proc {

struct CliResult {
  int exit_code{};
  std::string out;
  std::string err;
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string temp_dir(const std::string& tag) {
  static int counter = 0;
  const auto base = std::filesystem::temp_directory_path() /
                    ("strawsim_test_" + tag + "_" + std::to_string(getpid()) + "_" +
                     std::to_string(counter++));
  std::filesystem::create_directories(base);
  return base.string();
}

/// Runs the built CLI with the given argument string. `env_prefix` may carry
/// VAR=value assignments placed before the binary.
inline CliResult run_cli(const std::string& args, const std::string& env_prefix = "") {
  static int counter = 0;
  const std::string scratch = temp_dir("cli");
  const std::string out_file = scratch + "/out_" + std::to_string(counter) + ".txt";
  const std::string err_file = scratch + "/err_" + std::to_string(counter) + ".txt";
  ++counter;

  std::string cmd;
  if (!env_prefix.empty()) cmd += env_prefix + " ";
  cmd += std::string(STRAWSIM_CLI_PATH) + " " + args + " >" + out_file + " 2>" + err_file;
  const int status = std::system(cmd.c_str());

  CliResult res;
  res.exit_code = (status >= 0 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
  res.out = slurp(out_file);
  res.err = slurp(err_file);
  std::remove(out_file.c_str());
  std::remove(err_file.c_str());
  return res;
}

inline std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) lines.push_back(line);
  return lines;
}

inline std::vector<double> split_csv_row(const std::string& line) {
  std::vector<double> vals;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) vals.push_back(tok.empty() ? 0.0 : std::stod(tok));
  return vals;
}

inline std::vector<std::string> split_csv_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) fields.push_back(tok);
  return fields;
}

}  // namespace proc
