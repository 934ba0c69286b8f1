#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace turnprint {

using Vec2 = std::array<double, 2>;
using Vec3 = std::array<double, 3>;

inline constexpr double kPi = 3.14159265358979323846;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-contract input data (traces, turns, feature files).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Invalid parameters: thresholds, cutoffs, lengths, priors, seeds.
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class Direction { Left, Right };

inline const char* to_string(Direction d) { return d == Direction::Left ? "left" : "right"; }

inline Direction direction_from_string(const std::string& s) {
  if (s == "left") return Direction::Left;
  if (s == "right") return Direction::Right;
  throw InputError("unknown turn direction '" + s + "'");
}

}  // namespace turnprint
