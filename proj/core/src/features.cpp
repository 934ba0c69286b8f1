#include "turnprint/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace turnprint::features {

std::vector<double> heading_accel(const turns::TurnSegment& turn) {
  if (turn.heading.size() != turn.length() || turn.accel.size() != turn.length()) {
    throw InputError("turn series lengths disagree");
  }
  std::vector<double> a(turn.length());
  for (std::size_t n = 0; n < a.size(); ++n) {
    const double psi = turn.sot_heading + turn.heading[n];
    a[n] = turn.accel[n][0] * std::cos(psi) + turn.accel[n][1] * std::sin(psi);
  }
  return a;
}

std::vector<double> a_eot(const turns::TurnSegment& turn) {
  std::vector<double> a = heading_accel(turn);
  for (std::size_t n = 0; n < a.size(); ++n) a[n] *= std::sin(turn.heading[n]);
  return a;
}

std::vector<double> deltas(std::span<const double> x) {
  if (x.size() < 2) throw InputError("deltas needs at least 2 values");
  std::vector<double> d(x.size() - 1);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) d[i] = x[i + 1] - x[i];
  return d;
}

TurnFeatureSeries feature_series(const turns::TurnSegment& turn) {
  TurnFeatureSeries s;
  s.a_eot = a_eot(turn);
  s.d_a_eot = deltas(s.a_eot);
  s.d_yaw_raw = deltas(turn.yaw_raw);
  return s;
}

double percentile(std::span<const double> x, double p) {
  if (x.empty()) throw InputError("percentile of an empty series");
  if (!(p >= 0.0 && p <= 100.0)) throw ConfigError("percentile level must lie in [0, 100]");
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  const double rank = p / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = rank - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double autocorr(std::span<const double> x, std::size_t lag) {
  if (lag < 1 || lag > kMaxLag) throw ConfigError("autocorrelation lag must lie in [1, 10]");
  const std::size_t n = x.size();
  if (lag >= n) throw InputError("autocorrelation lag must be shorter than the series");
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double den = 0.0;
  for (double v : x) den += (v - mean) * (v - mean);
  if (den < kDegenerateVariance) return 0.0;
  double num = 0.0;
  for (std::size_t t = 0; t + lag < n; ++t) num += (x[t] - mean) * (x[t + lag] - mean);
  return num / den;
}

namespace {

void append_block(std::vector<double>& out, std::span<const double> x) {
  for (double p : kPercentileLevels) out.push_back(percentile(x, p));
  for (std::size_t k = 1; k <= kMaxLag; ++k) out.push_back(autocorr(x, k));
}

}  // namespace

FeatureVector build_feature_vector(const turns::TurnSegment& turn) {
  const std::size_t len = turn.length();
  if (len % kStages != 0) throw InputError("turn length must be divisible by 5");
  const std::size_t stage_len = len / kStages;
  if (stage_len < kMaxLag + 2) throw InputError("turn stages too short for lag-10 autocorrelation");
  if (turn.yaw_raw.size() != len) throw InputError("turn series lengths disagree");

  const std::vector<double> f1 = a_eot(turn);
  FeatureVector fv;
  fv.direction = turn.direction;
  fv.values.reserve(kVectorSize);
  for (std::size_t s = 0; s < kStages; ++s) {
    append_block(fv.values, std::span<const double>(f1).subspan(s * stage_len, stage_len));
  }
  for (std::size_t s = 0; s < kStages; ++s) {
    const std::vector<double> d = deltas(std::span<const double>(f1).subspan(s * stage_len, stage_len));
    append_block(fv.values, d);
  }
  for (std::size_t s = 0; s < kStages; ++s) {
    const std::vector<double> d = deltas(std::span<const double>(turn.yaw_raw).subspan(s * stage_len, stage_len));
    append_block(fv.values, d);
  }
  return fv;
}

std::size_t feature_index(std::size_t feature, std::size_t stage, std::size_t statistic) {
  if (feature >= kFeatureKinds || stage >= kStages || statistic >= kBlockSize) {
    throw ConfigError("feature index out of range");
  }
  return (feature * kStages + stage) * kBlockSize + statistic;
}

std::string feature_name(std::size_t index) {
  if (index >= kVectorSize) throw ConfigError("feature index out of range");
  const std::size_t feature = index / (kStages * kBlockSize);
  const std::size_t stage = (index / kBlockSize) % kStages;
  const std::size_t stat = index % kBlockSize;
  std::string name = "f" + std::to_string(feature + 1) + "_s" + std::to_string(stage + 1) + "_";
  if (stat < kPercentileLevels.size()) {
    name += "p" + std::to_string(static_cast<int>(kPercentileLevels[stat]));
  } else {
    name += "ac" + std::to_string(stat - kPercentileLevels.size() + 1);
  }
  return name;
}

const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    v.reserve(kVectorSize);
    for (std::size_t i = 0; i < kVectorSize; ++i) v.push_back(feature_name(i));
    return v;
  }();
  return names;
}

void write_feature_csv(std::ostream& out, std::span<const FeatureVector> vectors) {
  const auto& names = feature_names();
  for (const std::string& n : names) out << n << ',';
  out << "direction,label\n";
  char buf[40];
  for (const FeatureVector& fv : vectors) {
    if (fv.values.size() != kVectorSize) throw InputError("feature vector must have 225 values");
    for (double v : fv.values) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << buf << ',';
    }
    out << to_string(fv.direction) << ',' << fv.label.value_or("") << '\n';
  }
}

std::vector<FeatureVector> read_feature_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("feature file is empty");
  {
    std::stringstream ss(line);
    std::string cell;
    std::size_t i = 0;
    const auto& names = feature_names();
    while (std::getline(ss, cell, ',')) {
      if (!cell.empty() && cell.back() == '\r') cell.pop_back();
      const std::string expected = i < kVectorSize ? names[i] : (i == kVectorSize ? "direction" : "label");
      if (i > kVectorSize + 1 || cell != expected) throw InputError("unexpected feature header column '" + cell + "'");
      ++i;
    }
    if (i != kVectorSize + 2) throw InputError("feature header has the wrong number of columns");
  }
  std::vector<FeatureVector> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = line.find(',', pos);
      cells.push_back(line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (cells.size() != kVectorSize + 2) {
      throw InputError("line " + std::to_string(line_no) + ": wrong number of feature columns");
    }
    FeatureVector fv;
    fv.values.resize(kVectorSize);
    for (std::size_t i = 0; i < kVectorSize; ++i) {
      const std::string& c = cells[i];
      auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), fv.values[i]);
      if (ec != std::errc() || ptr != c.data() + c.size()) {
        throw InputError("line " + std::to_string(line_no) + ": cannot parse '" + c + "'");
      }
    }
    fv.direction = direction_from_string(cells[kVectorSize]);
    if (!cells[kVectorSize + 1].empty()) fv.label = cells[kVectorSize + 1];
    out.push_back(std::move(fv));
  }
  return out;
}

}  // namespace turnprint::features
