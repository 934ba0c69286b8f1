#pragma once

// Small builders shared by the unit suites.

#include <cmath>
#include <vector>

#include "turnprint/rng.hpp"
#include "turnprint/trace.hpp"

namespace fixtures {

using turnprint::Vec2;
using turnprint::Vec3;

inline turnprint::trace::AlignedTrace aligned(const std::vector<double>& yaw, double ts = 0.01,
                                              std::vector<Vec2> accel = {}) {
  turnprint::trace::AlignedTrace a;
  a.sample_period = ts;
  a.yaw = yaw;
  a.yaw_raw = yaw;
  a.accel = accel.empty() ? std::vector<Vec2>(yaw.size(), Vec2{0.0, 0.0}) : std::move(accel);
  for (std::size_t i = 0; i < yaw.size(); ++i) a.t.push_back(static_cast<double>(i) * ts);
  return a;
}

/// NED-aligned raw trace with the given yaw rate and horizontal accel.
inline turnprint::trace::RawTrace raw_aligned(const std::vector<double>& yaw, double ts = 0.01,
                                              const std::vector<Vec2>& accel = {}) {
  turnprint::trace::RawTrace r;
  r.sample_period = ts;
  r.already_aligned = true;
  for (std::size_t i = 0; i < yaw.size(); ++i) {
    turnprint::trace::ImuSample s;
    s.t = static_cast<double>(i) * ts;
    s.gyro = {0.0, 0.0, yaw[i]};
    const Vec2 a = accel.empty() ? Vec2{0.0, 0.0} : accel[i];
    s.accel = {a[0], a[1], -9.80665};
    r.samples.push_back(s);
  }
  return r;
}

inline std::vector<double> random_series(std::size_t n, std::uint64_t seed, double sd = 1.0) {
  turnprint::Rng rng(seed);
  std::vector<double> x(n);
  for (double& v : x) v = rng.normal(0.0, sd);
  return x;
}

/// Raised-cosine bump of the given peak between t0 and t1 (seconds) on an
/// otherwise zero series of n samples.
inline std::vector<double> bump(std::size_t n, double ts, double t0, double t1, double peak) {
  std::vector<double> y(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * ts;
    if (t > t0 && t < t1) y[i] = peak * 0.5 * (1.0 - std::cos(2.0 * turnprint::kPi * (t - t0) / (t1 - t0)));
  }
  return y;
}

}  // namespace fixtures
