#include "turnprint/turns.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

namespace turnprint::turns {

std::vector<double> heading_series(std::span<const double> yaw, double sample_period) {
  if (yaw.empty()) throw InputError("heading_series needs a nonempty yaw series");
  std::vector<double> theta(yaw.size());
  theta[0] = 0.0;
  for (std::size_t n = 1; n < yaw.size(); ++n) theta[n] = theta[n - 1] + yaw[n] * sample_period;
  return theta;
}

std::vector<SteeringEvent> detect_steering_events(const trace::AlignedTrace& trace, double delta_bump,
                                                  double epsilon) {
  if (!(epsilon > 0.0) || !(epsilon < delta_bump)) {
    throw ConfigError("steering thresholds must satisfy 0 < epsilon < delta_bump");
  }
  const std::vector<double>& y = trace.yaw;
  const std::size_t n = y.size();
  std::vector<SteeringEvent> events;
  std::size_t i = 0;
  while (i < n) {
    if (std::abs(y[i]) <= delta_bump) {
      ++i;
      continue;
    }
    const std::size_t region_start = i;
    while (i < n && std::abs(y[i]) > delta_bump) ++i;
    const std::size_t region_end = i - 1;

    std::size_t s = region_start;
    while (s > 0 && std::abs(y[s]) > epsilon) --s;
    std::size_t e = region_end;
    while (e + 1 < n && std::abs(y[e]) > epsilon) ++e;
    if (std::abs(y[s]) > epsilon || std::abs(y[e]) > epsilon) continue;

    if (!events.empty() && s <= events.back().end) {
      events.back().end = std::max(events.back().end, e);
    } else {
      events.push_back({s, e});
    }
    // Resume after the widened end so the next region cannot start inside it.
    i = std::max(i, e + 1);
  }
  return events;
}

double estimate_sot_heading(std::span<const Vec2> accel, std::span<const double> heading, double sample_period) {
  // w . r(psi0 + th) = cos(psi0) * p + sin(psi0) * q with
  //   p = -wN sin th + wE cos th,  q = -wN cos th - wE sin th.
  const std::size_t n = heading.size();
  std::vector<double> p(n), q(n), s(n);
  double wn = 0.0;
  double we = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (k > 0) {
      wn += accel[k][0] * sample_period;
      we += accel[k][1] * sample_period;
    }
    const double ct = std::cos(heading[k]);
    const double st = std::sin(heading[k]);
    p[k] = -wn * st + we * ct;
    q[k] = -wn * ct - we * st;
    s[k] = st;
  }
  double ss = 0.0, ps = 0.0, qs = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    ss += s[k] * s[k];
    ps += p[k] * s[k];
    qs += q[k] * s[k];
  }
  if (ss == 0.0) return 0.0;
  // Project v0 out, then take the eigenvector of the smallest eigenvalue.
  double mpp = 0.0, mpq = 0.0, mqq = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double pr = p[k] - ps / ss * s[k];
    const double qr = q[k] - qs / ss * s[k];
    mpp += pr * pr;
    mpq += pr * qr;
    mqq += qr * qr;
  }
  const double major = 0.5 * std::atan2(2.0 * mpq, mpp - mqq);
  double c = -std::sin(major);
  double sn = std::cos(major);
  if (c * ps + sn * qs < 0.0) {
    c = -c;
    sn = -sn;
  }
  return std::atan2(sn, c);
}

TurnSegment cut_segment(const trace::AlignedTrace& trace, const SteeringEvent& event) {
  if (!(event.start < event.end) || event.end >= trace.size()) throw InputError("steering event out of range");
  const auto first = static_cast<std::ptrdiff_t>(event.start);
  const auto last = static_cast<std::ptrdiff_t>(event.end) + 1;
  TurnSegment seg;
  seg.yaw.assign(trace.yaw.begin() + first, trace.yaw.begin() + last);
  seg.yaw_raw.assign(trace.yaw_raw.begin() + first, trace.yaw_raw.begin() + last);
  seg.accel.assign(trace.accel.begin() + first, trace.accel.begin() + last);
  seg.sample_period = trace.sample_period;
  seg.heading = heading_series(seg.yaw, seg.sample_period);
  seg.theta_final = seg.heading.back();
  seg.direction = seg.theta_final < 0.0 ? Direction::Left : Direction::Right;
  seg.sot_heading = estimate_sot_heading(seg.accel, seg.heading, seg.sample_period);
  seg.start_time = trace.t[event.start];
  seg.end_time = trace.t[event.end];
  seg.source_start = event.start;
  seg.source_end = event.end;
  return seg;
}

TurnFilterResult classify_and_filter_turns(const trace::AlignedTrace& trace,
                                           std::span<const SteeringEvent> events, double min_deg,
                                           double max_deg) {
  TurnFilterResult result;
  for (const SteeringEvent& ev : events) {
    TurnSegment seg = cut_segment(trace, ev);
    const double deg = std::abs(rad_to_deg(seg.theta_final));
    if (deg >= min_deg && deg <= max_deg) {
      result.turns.push_back(std::move(seg));
    } else {
      ++result.dropped;
    }
  }
  return result;
}

std::vector<double> resample_linear(std::span<const double> x, std::size_t length) {
  const std::size_t n = x.size();
  if (n < 2) throw InputError("cannot resample a series shorter than 2");
  if (length < 2) throw ConfigError("resample length must be at least 2");
  std::vector<double> out(length);
  const double span_len = static_cast<double>(n - 1);
  for (std::size_t j = 0; j < length; ++j) {
    const double p = static_cast<double>(j) * span_len / static_cast<double>(length - 1);
    const auto idx = static_cast<std::size_t>(p);
    if (idx >= n - 1) {
      out[j] = x[n - 1];
      continue;
    }
    const double frac = p - static_cast<double>(idx);
    out[j] = frac == 0.0 ? x[idx] : x[idx] + frac * (x[idx + 1] - x[idx]);
  }
  return out;
}

TurnSegment interpolate_turn(const TurnSegment& turn, std::size_t length) {
  if (length < 20 || length % 5 != 0) throw ConfigError("interpolation length must be >= 20 and divisible by 5");
  if (turn.length() < 2) throw InputError("turn too short to interpolate");
  TurnSegment out = turn;
  out.yaw = resample_linear(turn.yaw, length);
  out.yaw_raw = resample_linear(turn.yaw_raw, length);
  out.heading = resample_linear(turn.heading, length);
  std::vector<double> north(turn.length()), east(turn.length());
  for (std::size_t i = 0; i < turn.length(); ++i) {
    north[i] = turn.accel[i][0];
    east[i] = turn.accel[i][1];
  }
  north = resample_linear(north, length);
  east = resample_linear(east, length);
  out.accel.resize(length);
  for (std::size_t i = 0; i < length; ++i) out.accel[i] = {north[i], east[i]};
  out.interpolated = true;
  return out;
}

Extraction extract_turns(const trace::RawTrace& raw, const ExtractOptions& options) {
  const trace::AlignedTrace aligned = trace::preprocess(raw, options.preprocess);
  const std::vector<SteeringEvent> events = detect_steering_events(aligned, options.delta_bump, options.epsilon);
  TurnFilterResult filtered = classify_and_filter_turns(aligned, events);
  Extraction out;
  out.events = events.size();
  out.dropped = filtered.dropped;
  out.turns.reserve(filtered.turns.size());
  for (TurnSegment& t : filtered.turns) {
    out.turns.push_back(options.interpolate ? interpolate_turn(t, options.length) : std::move(t));
  }
  return out;
}

void write_turns_jsonl(std::ostream& out, std::span<const LabeledTurn> turns) {
  for (const LabeledTurn& lt : turns) {
    const TurnSegment& t = lt.turn;
    nlohmann::json j;
    j["direction"] = to_string(t.direction);
    j["theta_final_deg"] = rad_to_deg(t.theta_final);
    j["start_s"] = t.start_time;
    j["end_s"] = t.end_time;
    j["L"] = t.length();
    j["interpolated"] = t.interpolated;
    j["sot_heading_deg"] = rad_to_deg(t.sot_heading);
    j["sample_period"] = t.sample_period;
    j["yaw"] = t.yaw;
    j["yaw_raw"] = t.yaw_raw;
    j["accel_ne"] = t.accel;
    j["heading"] = t.heading;
    if (lt.label) j["label"] = *lt.label;
    out << j.dump() << '\n';
  }
}

std::vector<LabeledTurn> read_turns_jsonl(std::istream& in) {
  std::vector<LabeledTurn> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      LabeledTurn lt;
      TurnSegment& t = lt.turn;
      t.direction = direction_from_string(j.at("direction").get<std::string>());
      t.theta_final = deg_to_rad(j.at("theta_final_deg").get<double>());
      t.start_time = j.at("start_s").get<double>();
      t.end_time = j.at("end_s").get<double>();
      t.interpolated = j.value("interpolated", true);
      t.sot_heading = deg_to_rad(j.value("sot_heading_deg", 0.0));
      t.sample_period = j.value("sample_period", 0.01);
      t.yaw = j.at("yaw").get<std::vector<double>>();
      t.yaw_raw = j.at("yaw_raw").get<std::vector<double>>();
      t.accel = j.at("accel_ne").get<std::vector<Vec2>>();
      t.heading = j.at("heading").get<std::vector<double>>();
      const std::size_t len = j.at("L").get<std::size_t>();
      if (t.yaw.size() != len || t.yaw_raw.size() != len || t.accel.size() != len || t.heading.size() != len) {
        throw InputError("series lengths disagree with L");
      }
      if (j.contains("label")) lt.label = j.at("label").get<std::string>();
      out.push_back(std::move(lt));
    } catch (const nlohmann::json::exception& e) {
      throw InputError("turn record on line " + std::to_string(line_no) + ": " + e.what());
    } catch (const InputError& e) {
      throw InputError("turn record on line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace turnprint::turns
