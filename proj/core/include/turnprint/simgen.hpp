#pragma once

// Deterministic synthetic IMU trip generator.
//
// A DriverProfile holds the behavioural knobs that shape every turn the
// driver makes; a RouteScript lists the maneuvers of one trip. The generator
// produces a RawTrace plus exact ground-truth maneuver annotations. Output is
// NED-aligned by default; a SensorModel with a mounting rotation emits
// device-frame data with a synthetic magnetometer instead.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "turnprint/common.hpp"
#include "turnprint/trace.hpp"

namespace turnprint::simgen {

inline constexpr double kGravity = 9.80665;
/// Turns of this radius use the profile's peak yaw rate unchanged; the peak
/// scales with kReferenceRadius / radius otherwise.
inline constexpr double kReferenceRadius = 10.0;
inline constexpr double kMaxYawRate = 3.0;
inline constexpr double kMinSpeed = 0.5;

struct DriverProfile {
  double onset_frac = 0.3;         // share of the turn spent ramping into the peak
  double peak_yaw = 0.6;           // rad/s at the reference radius
  double yaw_jerk = 2.5;           // rad/s^2, cap on yaw-rate slope
  double pedal_gain = 0.8;         // m/s^2, brake/throttle amplitude inside turns
  double pedal_timing = 0.5;       // fraction of the turn where braking gives way to throttle
  double steering_jitter_sd = 0.03;  // rad/s, added to the measured yaw rate
  double accel_noise_sd = 0.05;      // m/s^2, added to every accelerometer axis
  double turn_variability = 0.08;    // relative per-turn spread of the shape knobs

  /// Throws ConfigError when a knob is out of range.
  void validate() const;

  nlohmann::json to_json() const;
  static DriverProfile from_json(const nlohmann::json& j);
};

enum class SegmentKind { Straight, LeftTurn, RightTurn, LaneChange, UTurn, Stop };

const char* to_string(SegmentKind kind);
SegmentKind segment_kind_from_string(const std::string& s);

struct Segment {
  SegmentKind kind = SegmentKind::Straight;
  double duration = 0.0;  // Straight, Stop
  double speed = 0.0;     // Straight
  double radius = 0.0;    // LeftTurn, RightTurn
  Direction side = Direction::Left;  // LaneChange: direction of the first swerve

  static Segment straight(double duration, double speed) { return {SegmentKind::Straight, duration, speed}; }
  static Segment left_turn(double radius) { return {SegmentKind::LeftTurn, 0.0, 0.0, radius}; }
  static Segment right_turn(double radius) { return {SegmentKind::RightTurn, 0.0, 0.0, radius}; }
  static Segment lane_change(Direction side = Direction::Left) {
    return {SegmentKind::LaneChange, 0.0, 0.0, 0.0, side};
  }
  static Segment u_turn() { return {SegmentKind::UTurn}; }
  static Segment stop(double duration) { return {SegmentKind::Stop, duration}; }
};

struct RouteScript {
  std::vector<Segment> segments;
  double initial_heading_deg = 0.0;
  /// Speed at t = 0; 0 means the speed of the first Straight segment.
  double initial_speed = 0.0;

  /// Throws ConfigError unless the route is nonempty with positive
  /// durations, speeds and radii.
  void validate() const;

  nlohmann::json to_json() const;
  static RouteScript from_json(const nlohmann::json& j);
};

/// Phone/vehicle sensor characteristics shared by every driver in a car.
struct SensorModel {
  double gyro_noise_sd = 0.0;   // rad/s on every gyro axis
  double accel_noise_sd = 0.0;  // m/s^2 on every accel axis
  /// Device mounting as roll/pitch/yaw degrees. When set, the trace is
  /// emitted in the device frame with magnetometer readings.
  std::optional<Vec3> mount_rpy_deg;
  Vec3 magnetic_field_ned{20.0, 0.0, 45.0};  // uT

  nlohmann::json to_json() const;
  static SensorModel from_json(const nlohmann::json& j);
};

/// Lane changes swerve with this amplitude and period, netting 0 degrees.
inline constexpr double kLaneChangeAmplitude = 0.25;
inline constexpr double kLaneChangePeriod = 4.0;
inline constexpr double kStopBrakeTime = 3.0;
inline constexpr double kStopLaunchTime = 4.0;

struct Annotation {
  SegmentKind kind = SegmentKind::Straight;
  std::size_t start_index = 0;  // first sample of the maneuver
  std::size_t end_index = 0;    // last sample, inclusive
  double start_time = 0.0;
  double end_time = 0.0;
  double heading_change_deg = 0.0;  // integral of the noise-free yaw rate

  bool is_turn() const { return kind == SegmentKind::LeftTurn || kind == SegmentKind::RightTurn; }
};

struct SimulatedTrip {
  trace::RawTrace trace;
  std::vector<Annotation> annotations;
  std::vector<double> true_yaw;  // noise-free yaw rate, rad/s
};

/// Yaw-rate shape of one turn sampled at `sample_period`: raised-cosine ramps
/// into and out of a plateau, integrating to `area` radians. Throws
/// InputError when the shape is infeasible.
struct TurnShape {
  double peak = 0.0;
  double rise = 0.0;
  double hold = 0.0;
  double fall = 0.0;
  double duration() const { return rise + hold + fall; }
  double rate(double t) const;  // >= 0
};
TurnShape turn_shape(double onset_frac, double peak, double jerk, double area);

SimulatedTrip generate_trip(const DriverProfile& profile, const RouteScript& route, double sample_period,
                            std::uint64_t seed, const SensorModel& sensor = {});

nlohmann::json annotations_to_json(const std::vector<Annotation>& annotations);

/// Documented knob ranges that driver panels are drawn from.
struct KnobRange {
  double lo;
  double hi;
};
struct PanelRanges {
  KnobRange onset_frac{0.1, 0.5};
  KnobRange peak_yaw{0.45, 0.85};
  KnobRange yaw_jerk{1.5, 4.0};
  KnobRange pedal_gain{0.3, 1.5};
  KnobRange pedal_timing{0.3, 0.7};
  KnobRange steering_jitter_sd{0.02, 0.03};
  KnobRange accel_noise_sd{0.02, 0.1};
  KnobRange turn_variability{0.05, 0.12};
};

/// n profiles whose knobs are a seeded Latin hypercube over the ranges, so
/// every knob takes n well-separated levels.
std::vector<DriverProfile> make_driver_panel(std::size_t n, std::uint64_t seed, const PanelRanges& ranges = {});

struct RouteStyle {
  std::size_t turns = 6;
  KnobRange left_radius{8.0, 14.0};
  KnobRange right_radius{8.0, 14.0};
  KnobRange speed{6.0, 10.0};
  KnobRange straight_duration{3.0, 6.0};
  double lane_change_prob = 0.2;
  double u_turn_prob = 0.1;
  double stop_prob = 0.1;
};

/// Random route: straights between maneuvers, `turns` left/right turns and
/// optional distractor maneuvers, each separated by at least 2 s of
/// straight driving.
RouteScript random_route(const RouteStyle& style, std::uint64_t seed);

}  // namespace turnprint::simgen
