#pragma once

// IMU trace ingestion and pre-processing: frame alignment, spike removal and
// low-pass smoothing.
//
// Frame convention: aligned data is expressed in North-East-Down. The Z gyro
// component is therefore the yaw rate, positive for clockwise rotation seen
// from above (a right turn), and the horizontal acceleration is the
// (north, east) pair.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <vector>

#include "turnprint/common.hpp"

namespace turnprint::trace {

struct ImuSample {
  double t = 0.0;  // seconds since trace start
  Vec3 gyro{};     // rad/s
  Vec3 accel{};    // m/s^2, specific force
  std::optional<Vec3> mag;  // uT
};

struct RawTrace {
  std::vector<ImuSample> samples;
  double sample_period = 0.01;
  bool already_aligned = false;

  /// Throws InputError unless the trace has >= 2 samples, finite values,
  /// non-negative strictly increasing timestamps and every gap within 50% of
  /// the sample period.
  void validate() const;
};

struct AlignedTrace {
  std::vector<double> t;
  std::vector<double> yaw;      // rad/s, smoothed once lowpass_smooth has run
  std::vector<double> yaw_raw;  // rad/s, never low-passed
  std::vector<Vec2> accel;      // (north, east) m/s^2
  double sample_period = 0.01;

  std::size_t size() const { return t.size(); }
};

/// Rotation from the device frame into North-East-Down.
struct FrameRotation {
  Vec3 north{1.0, 0.0, 0.0};
  Vec3 east{0.0, 1.0, 0.0};
  Vec3 down{0.0, 0.0, 1.0};

  Vec3 apply(const Vec3& v) const { return {dot(north, v), dot(east, v), dot(down, v)}; }
};

/// Per-sample device-to-NED rotations.
///
/// Down is the negated mean specific force over steady samples: gyro norm
/// below 0.1 rad/s and, after a first pass, accel within 0.3 m/s^2 of the
/// running estimate. A pass that keeps under 10% of the samples is skipped.
/// North is the magnetometer projected onto the horizontal plane and
/// east = down x north.
/// Returns identity rotations for already-aligned traces.
std::vector<FrameRotation> estimate_geo_rotations(const RawTrace& trace);

AlignedTrace align_to_geo_frame(const RawTrace& trace);

struct DespikeOptions {
  double z_thresh = 6.0;
  std::size_t window = 11;
  double min_scale = 0.01;
};

/// Replaces samples deviating from their rolling median by more than
/// z_thresh robust standard deviations with that median. Applies to yaw,
/// yaw_raw and both acceleration channels.
AlignedTrace despike(const AlignedTrace& trace, const DespikeOptions& options = {});
AlignedTrace despike(const AlignedTrace& trace, double z_thresh);

/// Width of the centred moving average used for a given cutoff.
std::size_t moving_average_width(double cutoff_hz, double sample_period);

/// Zero-phase cascade of three centred moving averages whose -3 dB point is
/// cutoff_hz. Smooths yaw and accel; yaw_raw is copied through.
AlignedTrace lowpass_smooth(const AlignedTrace& trace, double cutoff_hz);

/// Applies the cascade to one channel (exposed for testing and reuse).
std::vector<double> lowpass_channel(const std::vector<double>& x, std::size_t width);

struct PreprocessOptions {
  DespikeOptions despike;
  double cutoff_hz = 2.0;
};

/// align_to_geo_frame, then despike, then lowpass_smooth.
AlignedTrace preprocess(const RawTrace& trace, const PreprocessOptions& options = {});

// CSV: header `t,gx,gy,gz,ax,ay,az[,mx,my,mz]`, optional leading comment
// lines `# aligned=true|false` and `# sample_period=<s>`. Values are written
// with 9 significant digits.

/// Reads a trace. `aligned_override` wins over the sidecar comment. When no
/// sample period comment is present the median sample gap is used.
RawTrace read_trace_csv(std::istream& in, std::optional<bool> aligned_override = std::nullopt);
RawTrace read_trace_csv_file(const std::string& path, std::optional<bool> aligned_override = std::nullopt);
void write_trace_csv(std::ostream& out, const RawTrace& trace);
void write_trace_csv_file(const std::string& path, const RawTrace& trace);

}  // namespace turnprint::trace
