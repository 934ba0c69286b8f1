#pragma once

// Steering-maneuver detection on the yaw rate and left/right turn extraction.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "turnprint/common.hpp"
#include "turnprint/trace.hpp"

namespace turnprint::turns {

inline constexpr double kDefaultDeltaBump = 0.15;  // rad/s
inline constexpr double kDefaultEpsilon = 0.02;    // rad/s
inline constexpr double kMinTurnDeg = 70.0;
inline constexpr double kMaxTurnDeg = 110.0;
inline constexpr std::size_t kDefaultLength = 100;

/// Inclusive sample range [start, end] of one steering maneuver.
struct SteeringEvent {
  std::size_t start = 0;
  std::size_t end = 0;
};

struct TurnSegment {
  Direction direction = Direction::Right;
  double theta_final = 0.0;   // rad, clockwise positive
  double sot_heading = 0.0;   // rad, vehicle heading at s_start, clockwise from north
  std::vector<double> yaw;      // smoothed, rad/s
  std::vector<double> yaw_raw;  // rad/s
  std::vector<Vec2> accel;      // (north, east) m/s^2
  std::vector<double> heading;  // theta[n], rad; heading[0] == 0
  double sample_period = 0.01;  // of the source trace
  double start_time = 0.0;
  double end_time = 0.0;
  std::size_t source_start = 0;
  std::size_t source_end = 0;
  bool interpolated = false;

  std::size_t length() const { return yaw.size(); }
};

/// theta[0] = 0, theta[n] = sum_{k=1..n} yaw[k] * T_s.
std::vector<double> heading_series(std::span<const double> yaw, double sample_period);

/// Maximal regions with |Y| > delta_bump, each widened outward until
/// |Y| <= epsilon. Widened regions that overlap are merged. Regions that run
/// into the trace edge before |Y| falls to epsilon are discarded.
std::vector<SteeringEvent> detect_steering_events(const trace::AlignedTrace& trace,
                                                  double delta_bump = kDefaultDeltaBump,
                                                  double epsilon = kDefaultEpsilon);

/// Heading at s_start, clockwise from north.
///
/// The velocity change w[n] = sum_{k=1..n} a[k] * T_s must stay along the
/// current heading up to the initial velocity, which gives
/// w[n] . r(psi0 + theta[n]) = v0 * sin(theta[n]) with r the right-hand
/// normal. psi0 is the least-squares solution (a 2x2 eigenproblem after v0
/// is eliminated), with the sign fixed so that v0 > 0. Exact on noise-free
/// turns whatever the braking or throttle inside the turn.
double estimate_sot_heading(std::span<const Vec2> accel, std::span<const double> heading, double sample_period);

/// Cuts one event out of the trace and fills in heading, theta_final,
/// direction and the SOT heading. Does not apply the angle filter.
TurnSegment cut_segment(const trace::AlignedTrace& trace, const SteeringEvent& event);

struct TurnFilterResult {
  std::vector<TurnSegment> turns;
  std::size_t dropped = 0;
};

/// Keeps events with min_deg <= |theta_final| <= max_deg.
TurnFilterResult classify_and_filter_turns(const trace::AlignedTrace& trace,
                                           std::span<const SteeringEvent> events,
                                           double min_deg = kMinTurnDeg, double max_deg = kMaxTurnDeg);

/// Linearly resamples every series of a turn onto `length` uniformly spaced
/// points spanning the original segment. Endpoints are preserved exactly.
TurnSegment interpolate_turn(const TurnSegment& turn, std::size_t length);

/// Resamples one series (exposed for testing).
std::vector<double> resample_linear(std::span<const double> x, std::size_t length);

struct ExtractOptions {
  trace::PreprocessOptions preprocess;
  double delta_bump = kDefaultDeltaBump;
  double epsilon = kDefaultEpsilon;
  std::size_t length = kDefaultLength;
  bool interpolate = true;
};

struct Extraction {
  std::vector<TurnSegment> turns;
  std::size_t events = 0;
  std::size_t dropped = 0;
};

/// Full path from a raw trace to (optionally interpolated) turns.
Extraction extract_turns(const trace::RawTrace& raw, const ExtractOptions& options = {});

/// JSON-lines turn records: direction, theta_final_deg, start_s, end_s, L,
/// sot_heading_deg, sample_period, yaw, yaw_raw, accel_ne, heading and an
/// optional label.
struct LabeledTurn {
  TurnSegment turn;
  std::optional<std::string> label;
};

void write_turns_jsonl(std::ostream& out, std::span<const LabeledTurn> turns);
std::vector<LabeledTurn> read_turns_jsonl(std::istream& in);

}  // namespace turnprint::turns
