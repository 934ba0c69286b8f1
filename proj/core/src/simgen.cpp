#include "turnprint/simgen.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "turnprint/rng.hpp"

namespace turnprint::simgen {

namespace {

using Mat3 = std::array<Vec3, 3>;  // rows

Mat3 rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  return {{{1, 0, 0}, {0, c, -s}, {0, s, c}}};
}
Mat3 rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  return {{{c, 0, s}, {0, 1, 0}, {-s, 0, c}}};
}
Mat3 rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  return {{{c, -s, 0}, {s, c, 0}, {0, 0, 1}}};
}

Mat3 mul(const Mat3& a, const Mat3& b) {
  Mat3 r{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      for (int k = 0; k < 3; ++k) r[i][j] += a[i][k] * b[k][j];
    }
  }
  return r;
}

// r^T v
Vec3 mul_transposed(const Mat3& r, const Vec3& v) {
  return {r[0][0] * v[0] + r[1][0] * v[1] + r[2][0] * v[2], r[0][1] * v[0] + r[1][1] * v[1] + r[2][1] * v[2],
          r[0][2] * v[0] + r[1][2] * v[1] + r[2][2] * v[2]};
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

double perturbed(double value, double spread, Rng& rng) {
  return value * std::max(0.2, 1.0 + spread * rng.normal());
}

}  // namespace

// ---------------------------------------------------------------------------
// Profiles and routes

void DriverProfile::validate() const {
  require(onset_frac >= 0.0 && onset_frac <= 0.95, "onset_frac must lie in [0, 0.95]");
  require(peak_yaw > 0.15 && peak_yaw <= kMaxYawRate, "peak_yaw must lie in (0.15, 3] rad/s");
  require(yaw_jerk > 0.0, "yaw_jerk must be positive");
  require(pedal_gain >= 0.0, "pedal_gain must be non-negative");
  require(pedal_timing >= 0.0 && pedal_timing <= 1.0, "pedal_timing must lie in [0, 1]");
  require(steering_jitter_sd >= 0.0, "steering_jitter_sd must be non-negative");
  require(accel_noise_sd >= 0.0, "accel_noise_sd must be non-negative");
  require(turn_variability >= 0.0 && turn_variability <= 0.5, "turn_variability must lie in [0, 0.5]");
}

nlohmann::json DriverProfile::to_json() const {
  return {{"onset_frac", onset_frac},
          {"peak_yaw", peak_yaw},
          {"yaw_jerk", yaw_jerk},
          {"pedal_gain", pedal_gain},
          {"pedal_timing", pedal_timing},
          {"steering_jitter_sd", steering_jitter_sd},
          {"accel_noise_sd", accel_noise_sd},
          {"turn_variability", turn_variability}};
}

DriverProfile DriverProfile::from_json(const nlohmann::json& j) {
  DriverProfile p;
  try {
    p.onset_frac = j.value("onset_frac", p.onset_frac);
    p.peak_yaw = j.value("peak_yaw", p.peak_yaw);
    p.yaw_jerk = j.value("yaw_jerk", p.yaw_jerk);
    p.pedal_gain = j.value("pedal_gain", p.pedal_gain);
    p.pedal_timing = j.value("pedal_timing", p.pedal_timing);
    p.steering_jitter_sd = j.value("steering_jitter_sd", p.steering_jitter_sd);
    p.accel_noise_sd = j.value("accel_noise_sd", p.accel_noise_sd);
    p.turn_variability = j.value("turn_variability", p.turn_variability);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed driver profile: ") + e.what());
  }
  p.validate();
  return p;
}

const char* to_string(SegmentKind kind) {
  switch (kind) {
    case SegmentKind::Straight: return "straight";
    case SegmentKind::LeftTurn: return "left";
    case SegmentKind::RightTurn: return "right";
    case SegmentKind::LaneChange: return "lane_change";
    case SegmentKind::UTurn: return "u_turn";
    case SegmentKind::Stop: return "stop";
  }
  return "straight";
}

SegmentKind segment_kind_from_string(const std::string& s) {
  for (SegmentKind k : {SegmentKind::Straight, SegmentKind::LeftTurn, SegmentKind::RightTurn, SegmentKind::LaneChange,
                        SegmentKind::UTurn, SegmentKind::Stop}) {
    if (s == to_string(k)) return k;
  }
  throw InputError("unknown route segment type '" + s + "'");
}

void RouteScript::validate() const {
  require(!segments.empty(), "route has no segments");
  require(initial_speed >= 0.0, "initial_speed must be non-negative");
  for (const Segment& s : segments) {
    switch (s.kind) {
      case SegmentKind::Straight:
        require(s.duration > 0.0, "straight duration must be positive");
        require(s.speed > 0.0, "straight speed must be positive");
        break;
      case SegmentKind::Stop: require(s.duration > 0.0, "stop duration must be positive"); break;
      case SegmentKind::LeftTurn:
      case SegmentKind::RightTurn: require(s.radius > 0.0, "turn radius must be positive"); break;
      default: break;
    }
  }
}

nlohmann::json RouteScript::to_json() const {
  nlohmann::json segs = nlohmann::json::array();
  for (const Segment& s : segments) {
    nlohmann::json j{{"type", to_string(s.kind)}};
    switch (s.kind) {
      case SegmentKind::Straight:
        j["duration"] = s.duration;
        j["speed"] = s.speed;
        break;
      case SegmentKind::Stop: j["duration"] = s.duration; break;
      case SegmentKind::LeftTurn:
      case SegmentKind::RightTurn: j["radius"] = s.radius; break;
      case SegmentKind::LaneChange: j["side"] = turnprint::to_string(s.side); break;
      case SegmentKind::UTurn: break;
    }
    segs.push_back(std::move(j));
  }
  return {{"initial_heading_deg", initial_heading_deg}, {"initial_speed", initial_speed}, {"segments", segs}};
}

RouteScript RouteScript::from_json(const nlohmann::json& j) {
  RouteScript r;
  try {
    r.initial_heading_deg = j.value("initial_heading_deg", 0.0);
    r.initial_speed = j.value("initial_speed", 0.0);
    for (const nlohmann::json& sj : j.at("segments")) {
      Segment s;
      s.kind = segment_kind_from_string(sj.at("type").get<std::string>());
      switch (s.kind) {
        case SegmentKind::Straight:
          s.duration = sj.at("duration").get<double>();
          s.speed = sj.at("speed").get<double>();
          break;
        case SegmentKind::Stop: s.duration = sj.at("duration").get<double>(); break;
        case SegmentKind::LeftTurn:
        case SegmentKind::RightTurn: s.radius = sj.at("radius").get<double>(); break;
        case SegmentKind::LaneChange: s.side = direction_from_string(sj.value("side", std::string("left"))); break;
        case SegmentKind::UTurn: break;
      }
      r.segments.push_back(s);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed route: ") + e.what());
  }
  r.validate();
  return r;
}

nlohmann::json SensorModel::to_json() const {
  nlohmann::json j{{"gyro_noise_sd", gyro_noise_sd},
                   {"accel_noise_sd", accel_noise_sd},
                   {"magnetic_field_ned", magnetic_field_ned}};
  if (mount_rpy_deg) j["mount_rpy_deg"] = *mount_rpy_deg;
  return j;
}

SensorModel SensorModel::from_json(const nlohmann::json& j) {
  SensorModel s;
  try {
    s.gyro_noise_sd = j.value("gyro_noise_sd", 0.0);
    s.accel_noise_sd = j.value("accel_noise_sd", 0.0);
    if (j.contains("magnetic_field_ned")) s.magnetic_field_ned = j.at("magnetic_field_ned").get<Vec3>();
    if (j.contains("mount_rpy_deg")) s.mount_rpy_deg = j.at("mount_rpy_deg").get<Vec3>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed sensor model: ") + e.what());
  }
  require(s.gyro_noise_sd >= 0.0 && s.accel_noise_sd >= 0.0, "sensor noise must be non-negative");
  return s;
}

// ---------------------------------------------------------------------------
// Turn shape

double TurnShape::rate(double t) const {
  if (t <= 0.0 || t >= duration()) return 0.0;
  if (t < rise) return peak * 0.5 * (1.0 - std::cos(kPi * t / rise));
  if (t < rise + hold) return peak;
  return peak * 0.5 * (1.0 + std::cos(kPi * (t - rise - hold) / fall));
}

TurnShape turn_shape(double onset_frac, double peak, double jerk, double area) {
  if (!(peak > 0.0) || !(jerk > 0.0) || !(area > 0.0)) throw InputError("turn shape needs positive parameters");
  if (peak > kMaxYawRate) throw InputError("infeasible turn: yaw rate above 3 rad/s");
  // A raised-cosine ramp of length tau peaks in slope at peak * pi / (2 tau).
  // When the jerk cap leaves no room for a plateau the peak is lowered.
  for (int attempt = 0; attempt < 200; ++attempt) {
    TurnShape s;
    s.peak = peak;
    const double tau_min = peak * kPi / (2.0 * jerk);
    s.fall = tau_min;
    double total = (area / peak + s.fall / 2.0) / (1.0 - onset_frac / 2.0);
    s.rise = onset_frac * total;
    if (s.rise < tau_min) {
      s.rise = tau_min;
      total = area / peak + s.rise / 2.0 + s.fall / 2.0;
    }
    s.hold = total - s.rise - s.fall;
    if (s.hold >= 0.0) return s;
    peak *= 0.98;
  }
  throw InputError("infeasible turn shape");
}

// ---------------------------------------------------------------------------
// Trip generation

namespace {

struct Kinematics {
  std::vector<double> omega;  // true yaw rate
  std::vector<double> a_long;
  std::vector<double> speed;
  std::vector<double> heading;
  double v = 0.0;
  double psi = 0.0;
  double dt = 0.01;

  void push(double w, double a, double v_floor) {
    // Braking stops at the floor speed; the recorded acceleration follows suit.
    if (a < 0.0 && v + a * dt < v_floor) a = std::min(0.0, (v_floor - v) / dt);
    omega.push_back(w);
    a_long.push_back(a);
    speed.push_back(v);
    heading.push_back(psi);
    psi += w * dt;
    v = std::max(v + a * dt, 0.0);
  }
};

std::size_t sample_count(double duration, double dt) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(duration / dt - 1e-9)));
}

void emit_turn(Kinematics& k, const TurnShape& shape, double sign, double gain, double timing) {
  const double total = shape.duration();
  const std::size_t n = sample_count(total, k.dt) + 1;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * k.dt;
    const double u = std::min(t / total, 1.0);
    k.push(sign * shape.rate(t), gain * std::tanh((u - timing) / 0.12), kMinSpeed);
  }
}

}  // namespace

SimulatedTrip generate_trip(const DriverProfile& profile, const RouteScript& route, double sample_period,
                            std::uint64_t seed, const SensorModel& sensor) {
  profile.validate();
  route.validate();
  if (!(sample_period > 0.0 && sample_period <= 0.1)) throw ConfigError("sample period must lie in (0, 0.1] s");

  Rng shape_rng(derive_seed(seed, "maneuvers"));
  Rng noise_rng(derive_seed(seed, "noise"));

  Kinematics k;
  k.dt = sample_period;
  k.psi = deg_to_rad(route.initial_heading_deg);
  k.v = route.initial_speed;
  if (k.v == 0.0) {
    for (const Segment& s : route.segments) {
      if (s.kind == SegmentKind::Straight) {
        k.v = s.speed;
        break;
      }
    }
  }
  k.v = std::max(k.v, kMinSpeed);

  SimulatedTrip trip;
  const double var = profile.turn_variability;
  for (const Segment& seg : route.segments) {
    Annotation ann;
    ann.kind = seg.kind;
    ann.start_index = k.omega.size();
    switch (seg.kind) {
      case SegmentKind::Straight: {
        const std::size_t n = sample_count(seg.duration, k.dt);
        const double ramp = std::min(seg.duration, 2.0);
        const double dv = seg.speed - k.v;
        for (std::size_t i = 0; i < n; ++i) {
          const double t = static_cast<double>(i) * k.dt;
          const double a = t < ramp ? dv * kPi / (2.0 * ramp) * std::sin(kPi * t / ramp) : 0.0;
          k.push(0.0, a, 0.0);
        }
        break;
      }
      case SegmentKind::LeftTurn:
      case SegmentKind::RightTurn:
      case SegmentKind::UTurn: {
        const double onset = std::clamp(perturbed(profile.onset_frac, var, shape_rng), 0.0, 0.95);
        double peak = perturbed(profile.peak_yaw, var, shape_rng);
        const double jerk = perturbed(profile.yaw_jerk, var, shape_rng);
        const double gain = perturbed(profile.pedal_gain, var, shape_rng);
        const double timing = std::clamp(perturbed(profile.pedal_timing, var, shape_rng), 0.05, 0.95);
        double area = kPi / 2.0;
        if (seg.kind == SegmentKind::UTurn) {
          area = kPi;
        } else {
          // Yaw rate is speed over radius at the driver's preferred turning speed.
          peak *= kReferenceRadius / seg.radius;
        }
        const double sign = seg.kind == SegmentKind::LeftTurn ? -1.0 : 1.0;
        emit_turn(k, turn_shape(onset, peak, jerk, area), sign, gain, timing);
        break;
      }
      case SegmentKind::LaneChange: {
        const double sign = seg.side == Direction::Left ? -1.0 : 1.0;
        const std::size_t n = sample_count(kLaneChangePeriod, k.dt) + 1;
        for (std::size_t i = 0; i < n; ++i) {
          const double t = std::min(static_cast<double>(i) * k.dt, kLaneChangePeriod);
          k.push(sign * kLaneChangeAmplitude * std::sin(2.0 * kPi * t / kLaneChangePeriod), 0.0, kMinSpeed);
        }
        break;
      }
      case SegmentKind::Stop: {
        const double v0 = k.v;
        const std::size_t nb = sample_count(kStopBrakeTime, k.dt);
        for (std::size_t i = 0; i < nb; ++i) {
          const double t = static_cast<double>(i) * k.dt;
          k.push(0.0, -v0 * kPi / (2.0 * kStopBrakeTime) * std::sin(kPi * t / kStopBrakeTime), 0.0);
        }
        k.v = 0.0;
        for (std::size_t i = 0, n = sample_count(seg.duration, k.dt); i < n; ++i) k.push(0.0, 0.0, 0.0);
        const std::size_t nl = sample_count(kStopLaunchTime, k.dt);
        for (std::size_t i = 0; i < nl; ++i) {
          const double t = static_cast<double>(i) * k.dt;
          k.push(0.0, v0 * kPi / (2.0 * kStopLaunchTime) * std::sin(kPi * t / kStopLaunchTime), 0.0);
        }
        break;
      }
    }
    ann.end_index = k.omega.size() - 1;
    ann.start_time = static_cast<double>(ann.start_index) * k.dt;
    ann.end_time = static_cast<double>(ann.end_index) * k.dt;
    double dpsi = 0.0;
    for (std::size_t i = ann.start_index; i <= ann.end_index; ++i) dpsi += k.omega[i] * k.dt;
    ann.heading_change_deg = rad_to_deg(dpsi);
    trip.annotations.push_back(ann);
  }

  std::optional<Mat3> mount;
  if (sensor.mount_rpy_deg) {
    const Vec3& rpy = *sensor.mount_rpy_deg;
    mount = mul(rot_z(deg_to_rad(rpy[2])), mul(rot_y(deg_to_rad(rpy[1])), rot_x(deg_to_rad(rpy[0]))));
  }

  const std::size_t n = k.omega.size();
  trace::RawTrace& raw = trip.trace;
  raw.sample_period = sample_period;
  raw.already_aligned = !mount.has_value();
  raw.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = k.omega[i];
    const double psi = k.heading[i];
    const double a = k.a_long[i];
    const double lat = k.speed[i] * w;
    const Vec3 accel_ned{a * std::cos(psi) - lat * std::sin(psi), a * std::sin(psi) + lat * std::cos(psi), -kGravity};
    const Vec3 gyro_ned{0.0, 0.0, w + profile.steering_jitter_sd * noise_rng.normal()};

    trace::ImuSample& s = raw.samples[i];
    s.t = static_cast<double>(i) * sample_period;
    if (mount) {
      const Mat3 body_to_ned = mul(rot_z(psi), *mount);
      s.gyro = mul_transposed(body_to_ned, gyro_ned);
      s.accel = mul_transposed(body_to_ned, accel_ned);
      s.mag = mul_transposed(body_to_ned, sensor.magnetic_field_ned);
    } else {
      s.gyro = gyro_ned;
      s.accel = accel_ned;
    }
    for (double& g : s.gyro) g += sensor.gyro_noise_sd * noise_rng.normal();
    for (double& x : s.accel) {
      x += profile.accel_noise_sd * noise_rng.normal();
      x += sensor.accel_noise_sd * noise_rng.normal();
    }
  }
  trip.true_yaw = std::move(k.omega);
  return trip;
}

nlohmann::json annotations_to_json(const std::vector<Annotation>& annotations) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Annotation& a : annotations) {
    arr.push_back({{"kind", to_string(a.kind)},
                   {"start_index", a.start_index},
                   {"end_index", a.end_index},
                   {"start_s", a.start_time},
                   {"end_s", a.end_time},
                   {"heading_change_deg", a.heading_change_deg}});
  }
  return arr;
}

// ---------------------------------------------------------------------------
// Panels and random routes

std::vector<DriverProfile> make_driver_panel(std::size_t n, std::uint64_t seed, const PanelRanges& ranges) {
  if (n == 0) throw ConfigError("driver panel needs at least one driver");
  Rng rng(derive_seed(seed, "driver-panel"));
  const auto levels = [&](const KnobRange& r) {
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = r.lo + (static_cast<double>(perm[i]) + 0.5) / static_cast<double>(n) * (r.hi - r.lo);
    }
    return out;
  };
  const auto onset = levels(ranges.onset_frac);
  const auto peak = levels(ranges.peak_yaw);
  const auto jerk = levels(ranges.yaw_jerk);
  const auto gain = levels(ranges.pedal_gain);
  const auto timing = levels(ranges.pedal_timing);
  const auto jitter = levels(ranges.steering_jitter_sd);
  const auto noise = levels(ranges.accel_noise_sd);
  const auto variability = levels(ranges.turn_variability);
  std::vector<DriverProfile> panel(n);
  for (std::size_t i = 0; i < n; ++i) {
    panel[i] = {onset[i], peak[i], jerk[i], gain[i], timing[i], jitter[i], noise[i], variability[i]};
    panel[i].validate();
  }
  return panel;
}

RouteScript random_route(const RouteStyle& style, std::uint64_t seed) {
  require(style.turns > 0, "route style needs at least one turn");
  require(style.straight_duration.lo >= 2.0, "straights between maneuvers must last at least 2 s");
  Rng rng(derive_seed(seed, "route"));
  const auto draw = [&](const KnobRange& r) { return rng.uniform(r.lo, r.hi); };
  const auto straight = [&] { return Segment::straight(draw(style.straight_duration), draw(style.speed)); };

  RouteScript route;
  route.initial_heading_deg = rng.uniform(0.0, 360.0);
  route.segments.push_back(straight());
  for (std::size_t i = 0; i < style.turns; ++i) {
    if (rng.uniform() < style.lane_change_prob) {
      route.segments.push_back(Segment::lane_change(rng.uniform() < 0.5 ? Direction::Left : Direction::Right));
      route.segments.push_back(straight());
    }
    if (rng.uniform() < style.u_turn_prob) {
      route.segments.push_back(Segment::u_turn());
      route.segments.push_back(straight());
    }
    if (rng.uniform() < style.stop_prob) {
      route.segments.push_back(Segment::stop(rng.uniform(1.0, 3.0)));
      route.segments.push_back(straight());
    }
    if (rng.uniform() < 0.5) {
      route.segments.push_back(Segment::left_turn(draw(style.left_radius)));
    } else {
      route.segments.push_back(Segment::right_turn(draw(style.right_radius)));
    }
    route.segments.push_back(straight());
  }
  return route;
}

}  // namespace turnprint::simgen
