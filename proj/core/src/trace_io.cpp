#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "turnprint/trace.hpp"

namespace turnprint::trace {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  return out;
}

double parse_double(const std::string& s, std::size_t line_no) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw InputError("line " + std::to_string(line_no) + ": cannot parse number '" + s + "'");
  }
  return v;
}

void put9(std::ostream& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  out << buf;
}

}  // namespace

RawTrace read_trace_csv(std::istream& in, std::optional<bool> aligned_override) {
  RawTrace trace;
  std::optional<bool> aligned_comment;
  std::optional<double> period_comment;
  bool header_seen = false;
  bool has_mag = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      const std::string body = trim(t.substr(1));
      const auto eq = body.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = trim(body.substr(0, eq));
      const std::string val = trim(body.substr(eq + 1));
      if (key == "aligned") {
        if (val != "true" && val != "false") throw InputError("aligned must be true or false");
        aligned_comment = val == "true";
      } else if (key == "sample_period") {
        period_comment = parse_double(val, line_no);
      }
      continue;
    }
    const std::vector<std::string> cells = split_commas(t);
    if (!header_seen) {
      static const std::vector<std::string> kBase{"t", "gx", "gy", "gz", "ax", "ay", "az"};
      static const std::vector<std::string> kMag{"mx", "my", "mz"};
      if (cells.size() != 7 && cells.size() != 10) throw InputError("unexpected trace header");
      for (std::size_t i = 0; i < 7; ++i) {
        if (cells[i] != kBase[i]) throw InputError("unexpected trace header column '" + cells[i] + "'");
      }
      if (cells.size() == 10) {
        for (std::size_t i = 0; i < 3; ++i) {
          if (cells[7 + i] != kMag[i]) throw InputError("unexpected trace header column '" + cells[7 + i] + "'");
        }
        has_mag = true;
      }
      header_seen = true;
      continue;
    }
    if (cells.size() != (has_mag ? 10u : 7u)) {
      throw InputError("line " + std::to_string(line_no) + ": wrong number of columns");
    }
    ImuSample s;
    s.t = parse_double(cells[0], line_no);
    for (int k = 0; k < 3; ++k) {
      s.gyro[k] = parse_double(cells[1 + k], line_no);
      s.accel[k] = parse_double(cells[4 + k], line_no);
    }
    if (has_mag) {
      Vec3 m{};
      for (int k = 0; k < 3; ++k) m[k] = parse_double(cells[7 + k], line_no);
      s.mag = m;
    }
    trace.samples.push_back(s);
  }
  if (!header_seen) throw InputError("trace file has no header");
  if (trace.samples.size() < 2) throw InputError("trace needs at least 2 samples");

  trace.already_aligned = aligned_override.value_or(aligned_comment.value_or(false));
  if (period_comment) {
    trace.sample_period = *period_comment;
  } else {
    std::vector<double> gaps;
    gaps.reserve(trace.samples.size() - 1);
    for (std::size_t i = 1; i < trace.samples.size(); ++i) gaps.push_back(trace.samples[i].t - trace.samples[i - 1].t);
    std::nth_element(gaps.begin(), gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2), gaps.end());
    trace.sample_period = gaps[gaps.size() / 2];
  }
  trace.validate();
  return trace;
}

RawTrace read_trace_csv_file(const std::string& path, std::optional<bool> aligned_override) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open trace file " + path);
  return read_trace_csv(in, aligned_override);
}

void write_trace_csv(std::ostream& out, const RawTrace& trace) {
  const bool has_mag = !trace.samples.empty() &&
                       std::all_of(trace.samples.begin(), trace.samples.end(),
                                   [](const ImuSample& s) { return s.mag.has_value(); });
  out << "# aligned=" << (trace.already_aligned ? "true" : "false") << '\n';
  out << "# sample_period=";
  put9(out, trace.sample_period);
  out << '\n';
  out << "t,gx,gy,gz,ax,ay,az";
  if (has_mag) out << ",mx,my,mz";
  out << '\n';
  for (const ImuSample& s : trace.samples) {
    put9(out, s.t);
    for (double v : s.gyro) {
      out << ',';
      put9(out, v);
    }
    for (double v : s.accel) {
      out << ',';
      put9(out, v);
    }
    if (has_mag) {
      for (double v : *s.mag) {
        out << ',';
        put9(out, v);
      }
    }
    out << '\n';
  }
}

void write_trace_csv_file(const std::string& path, const RawTrace& trace) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write trace file " + path);
  write_trace_csv(out, trace);
}

}  // namespace turnprint::trace
