#include "turnprint/trace.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

namespace turnprint::trace {

namespace {

bool finite(const Vec3& v) { return std::isfinite(v[0]) && std::isfinite(v[1]) && std::isfinite(v[2]); }

// Mean specific force below this norm cannot define "up".
constexpr double kMinGravityNorm = 1.0;
constexpr double kQuietGyroRate = 0.1;  // rad/s
constexpr double kSteadyAccelDeviation = 0.3;  // m/s^2
constexpr int kGravityPasses = 3;
constexpr double kMinHorizontalMag = 1e-6;
// 1.4826 * MAD estimates the standard deviation of Gaussian data.
constexpr double kMadToSd = 1.4826;

double median_of(std::vector<double>& buf) {
  const std::size_t n = buf.size();
  const std::size_t mid = n / 2;
  std::nth_element(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(mid), buf.end());
  double m = buf[mid];
  if (n % 2 == 0) {
    const double lower = *std::max_element(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(mid));
    m = 0.5 * (m + lower);
  }
  return m;
}

std::vector<double> rolling_median(const std::vector<double>& x, std::size_t window) {
  const std::size_t n = x.size();
  const std::size_t half = window / 2;
  std::vector<double> out(n);
  std::vector<double> buf;
  buf.reserve(window);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n - 1, i + half);
    buf.assign(x.begin() + static_cast<std::ptrdiff_t>(lo), x.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
    out[i] = median_of(buf);
  }
  return out;
}

void despike_channel(std::vector<double>& x, const DespikeOptions& opt) {
  const std::vector<double> med = rolling_median(x, opt.window);
  std::vector<double> resid(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) resid[i] = std::abs(x[i] - med[i]);
  std::vector<double> tmp = resid;
  const double scale = std::max(kMadToSd * median_of(tmp), opt.min_scale);
  const double limit = opt.z_thresh * scale;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (resid[i] > limit) x[i] = med[i];
  }
}

std::vector<double> moving_average(const std::vector<double>& x, std::size_t width) {
  const std::size_t n = x.size();
  const std::size_t half = width / 2;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n - 1, i + half);
    double s = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) s += x[j];
    out[i] = s / static_cast<double>(hi - lo + 1);
  }
  return out;
}

}  // namespace

void RawTrace::validate() const {
  if (samples.size() < 2) throw InputError("trace needs at least 2 samples");
  if (!(sample_period > 0.0) || !std::isfinite(sample_period)) {
    throw InputError("trace sample period must be positive");
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const ImuSample& s = samples[i];
    if (!std::isfinite(s.t) || s.t < 0.0) throw InputError("invalid timestamp at sample " + std::to_string(i));
    if (!finite(s.gyro) || !finite(s.accel) || (s.mag && !finite(*s.mag))) {
      throw InputError("non-finite reading at sample " + std::to_string(i));
    }
    if (i > 0) {
      const double dt = s.t - samples[i - 1].t;
      if (!(dt > 0.0)) throw InputError("timestamps not strictly increasing at sample " + std::to_string(i));
      if (std::abs(dt - sample_period) > 0.5 * sample_period) {
        throw InputError("sample gap out of tolerance at sample " + std::to_string(i));
      }
    }
  }
}

std::vector<FrameRotation> estimate_geo_rotations(const RawTrace& trace) {
  trace.validate();
  const std::size_t n = trace.samples.size();
  if (trace.already_aligned) return std::vector<FrameRotation>(n);

  // Gravity is the mean specific force over samples where the vehicle
  // neither rotates nor changes speed. The first pass only filters on the
  // gyro; later passes also drop samples that stray from the running
  // estimate. Falls back to the previous estimate when too few samples pass.
  for (const ImuSample& s : trace.samples) {
    if (!s.mag) throw InputError("magnetometer readings are required to align an unaligned trace");
  }
  auto mean_of = [&](auto&& keep) {
    Vec3 m{};
    std::size_t count = 0;
    for (const ImuSample& s : trace.samples) {
      if (!keep(s)) continue;
      for (int k = 0; k < 3; ++k) m[k] += s.accel[k];
      ++count;
    }
    if (count * 10 < n) return std::optional<Vec3>{};
    for (double& c : m) c /= static_cast<double>(count);
    return std::optional<Vec3>{m};
  };
  Vec3 mean = *mean_of([](const ImuSample&) { return true; });
  if (auto quiet = mean_of([](const ImuSample& s) { return norm(s.gyro) < kQuietGyroRate; })) mean = *quiet;
  for (int pass = 0; pass < kGravityPasses; ++pass) {
    const Vec3 ref = mean;
    auto steady = mean_of([&](const ImuSample& s) {
      const Vec3 d{s.accel[0] - ref[0], s.accel[1] - ref[1], s.accel[2] - ref[2]};
      return norm(s.gyro) < kQuietGyroRate && norm(d) < kSteadyAccelDeviation;
    });
    if (!steady) break;
    mean = *steady;
  }
  const double g = norm(mean);
  if (g < kMinGravityNorm) throw InputError("degenerate gravity estimate: mean acceleration norm too small");
  // The accelerometer reads +g along "up", so down is the opposite direction.
  const Vec3 down{-mean[0] / g, -mean[1] / g, -mean[2] / g};

  std::vector<FrameRotation> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& m = *trace.samples[i].mag;
    const double along = dot(m, down);
    Vec3 h{m[0] - along * down[0], m[1] - along * down[1], m[2] - along * down[2]};
    const double hn = norm(h);
    if (hn < kMinHorizontalMag) throw InputError("magnetometer parallel to gravity at sample " + std::to_string(i));
    for (double& c : h) c /= hn;
    out[i].north = h;
    out[i].down = down;
    out[i].east = cross(down, h);
  }
  return out;
}

AlignedTrace align_to_geo_frame(const RawTrace& trace) {
  const std::vector<FrameRotation> rot = estimate_geo_rotations(trace);
  const std::size_t n = trace.samples.size();
  AlignedTrace out;
  out.sample_period = trace.sample_period;
  out.t.resize(n);
  out.yaw.resize(n);
  out.accel.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const ImuSample& s = trace.samples[i];
    out.t[i] = s.t;
    if (trace.already_aligned) {
      out.yaw[i] = s.gyro[2];
      out.accel[i] = {s.accel[0], s.accel[1]};
    } else {
      const Vec3 w = rot[i].apply(s.gyro);
      const Vec3 a = rot[i].apply(s.accel);
      out.yaw[i] = w[2];
      out.accel[i] = {a[0], a[1]};
    }
  }
  out.yaw_raw = out.yaw;
  return out;
}

AlignedTrace despike(const AlignedTrace& trace, const DespikeOptions& options) {
  if (!(options.z_thresh > 0.0)) throw ConfigError("despike threshold must be positive");
  if (options.window < 1) throw ConfigError("despike window must be at least 1");
  if (options.window > trace.size()) throw InputError("despike window longer than trace");
  AlignedTrace out = trace;
  despike_channel(out.yaw, options);
  despike_channel(out.yaw_raw, options);
  std::vector<double> north(trace.size()), east(trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i) {
    north[i] = trace.accel[i][0];
    east[i] = trace.accel[i][1];
  }
  despike_channel(north, options);
  despike_channel(east, options);
  for (std::size_t i = 0; i < trace.size(); ++i) out.accel[i] = {north[i], east[i]};
  return out;
}

AlignedTrace despike(const AlignedTrace& trace, double z_thresh) {
  DespikeOptions opt;
  opt.z_thresh = z_thresh;
  return despike(trace, opt);
}

std::size_t moving_average_width(double cutoff_hz, double sample_period) {
  const double fs = 1.0 / sample_period;
  if (!(cutoff_hz > 0.0) || !(cutoff_hz < 0.5 * fs)) {
    throw ConfigError("low-pass cutoff must lie in (0, Nyquist)");
  }
  // A width-M box filter has response sin(pi f M / fs) / (M sin(pi f / fs));
  // cubed, it falls to 1/sqrt(2) where pi f M / fs ~= 0.8262.
  constexpr double kHalfPowerArg = 0.8262;
  const double m = kHalfPowerArg * fs / (kPi * cutoff_hz);
  const long odd = 2 * std::lround((m - 1.0) / 2.0) + 1;
  return static_cast<std::size_t>(std::max(1L, odd));
}

std::vector<double> lowpass_channel(const std::vector<double>& x, std::size_t width) {
  if (width <= 1) return x;
  std::vector<double> y = moving_average(x, width);
  y = moving_average(y, width);
  return moving_average(y, width);
}

AlignedTrace lowpass_smooth(const AlignedTrace& trace, double cutoff_hz) {
  const std::size_t width = moving_average_width(cutoff_hz, trace.sample_period);
  AlignedTrace out = trace;
  out.yaw = lowpass_channel(trace.yaw, width);
  std::vector<double> north(trace.size()), east(trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i) {
    north[i] = trace.accel[i][0];
    east[i] = trace.accel[i][1];
  }
  north = lowpass_channel(north, width);
  east = lowpass_channel(east, width);
  for (std::size_t i = 0; i < trace.size(); ++i) out.accel[i] = {north[i], east[i]};
  return out;
}

AlignedTrace preprocess(const RawTrace& trace, const PreprocessOptions& options) {
  AlignedTrace aligned = align_to_geo_frame(trace);
  aligned = despike(aligned, options.despike);
  return lowpass_smooth(aligned, options.cutoff_hz);
}

}  // namespace turnprint::trace
