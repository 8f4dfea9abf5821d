#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace strawsim {

/// Raised when an input file cannot be read or does not parse. The harness
/// maps this to its dedicated exit code.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fixed-point decimal formatting. snprintf with an unset locale keeps the
/// separator a '.' and the bytes reproducible across runs.
inline std::string fmt_fixed(double v, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

/// Reads a two-column CSV of IR calibration samples (analog, distance_mm).
/// A single header line is allowed and detected by a non-numeric first field.
inline std::vector<std::pair<double, double>> read_calibration_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open calibration file: " + path);

  std::vector<std::pair<double, double>> samples;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::istringstream ls(line);
    std::string f0, f1, extra;
    if (!std::getline(ls, f0, ',') || !std::getline(ls, f1, ',')) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected two comma-separated fields");
    }
    if (std::getline(ls, extra, ',')) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": too many fields");
    }

    std::size_t p0 = 0;
    std::size_t p1 = 0;
    double analog = 0.0;
    double dist = 0.0;
    try {
      analog = std::stod(f0, &p0);
      dist = std::stod(f1, &p1);
    } catch (const std::exception&) {
      if (lineno == 1) continue;  // header row
      throw ParseError(path + ":" + std::to_string(lineno) + ": non-numeric field");
    }
    if (p0 != f0.size() && f0.find_first_not_of(" \t", p0) != std::string::npos) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": trailing junk in field 1");
    }
    if (p1 != f1.size() && f1.find_first_not_of(" \t", p1) != std::string::npos) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": trailing junk in field 2");
    }
    samples.emplace_back(analog, dist);
  }
  return samples;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace strawsim
