#include "smc/traces.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "smc/errors.hpp"
#include "smc/rng.hpp"

namespace smc {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool parse_double(const std::string& s, double& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

double radians(double deg) { return deg * std::numbers::pi / 180.0; }

}  // namespace

GpsTrace load_trace_file(const std::filesystem::path& file, std::vector<std::string>* rejected) {
  std::ifstream in(file);
  if (!in) throw InputError("cannot open trace " + file.string());
  GpsTrace trace;
  trace.source = file.filename().string();
  std::string line;
  int line_no = 0;
  auto reject = [&](const std::string& why) {
    if (rejected) rejected->push_back(file.string() + ":" + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const std::string row = trim(line);
    if (row.empty() || row.front() == '#') continue;
    std::vector<std::string> cols;
    std::stringstream ss(row);
    for (std::string c; std::getline(ss, c, ',');) cols.push_back(trim(c));
    if (cols.size() != 3) {
      reject("expected 3 columns");
      continue;
    }
    GpsPoint p{};
    if (!parse_double(cols[0], p.timestamp) || !parse_double(cols[1], p.lat) || !parse_double(cols[2], p.lon)) {
      if (line_no == 1 && cols[0] == "timestamp") continue;
      reject("not a number");
      continue;
    }
    if (std::abs(p.lat) > 90.0) {
      reject("latitude out of range");
      continue;
    }
    if (std::abs(p.lon) > 180.0) {
      reject("longitude out of range");
      continue;
    }
    if (!trace.points.empty() && p.timestamp <= trace.points.back().timestamp) {
      reject("timestamp not increasing");
      continue;
    }
    trace.points.push_back(p);
  }
  if (trace.points.empty()) throw InputError("no valid rows in trace " + file.string());
  return trace;
}

std::vector<GpsTrace> assign_round_robin(const std::vector<GpsTrace>& traces, int parties) {
  if (traces.empty()) throw InputError("no traces to assign");
  if (parties < 1) throw UsageError("party count must be positive");
  std::vector<GpsTrace> out;
  for (int i = 0; i < parties; ++i) out.push_back(traces[static_cast<std::size_t>(i) % traces.size()]);
  return out;
}

std::vector<GpsTrace> load_trace_dir(const std::filesystem::path& dir, std::vector<std::string>* rejected) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw InputError("trace directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw InputError("no .csv traces in " + dir.string());
  std::vector<GpsTrace> loaded;
  for (const auto& f : files) loaded.push_back(load_trace_file(f, rejected));
  return loaded;
}

TraceLoadReport load_traces(const std::filesystem::path& dir, int parties) {
  TraceLoadReport report;
  report.traces = assign_round_robin(load_trace_dir(dir, &report.rejected), parties);
  return report;
}

double haversine_meters(const GpsPoint& a, const GpsPoint& b) {
  const double dlat = radians(b.lat - a.lat);
  const double dlon = radians(b.lon - a.lon);
  const double s = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(radians(a.lat)) * std::cos(radians(b.lat)) * std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2.0 * kEarthRadiusMeters * std::asin(std::min(1.0, std::sqrt(s)));
}

std::vector<double> distances(const GpsTrace& trace) {
  if (trace.points.size() < 2) throw InputError("need at least 2 points for distances");
  std::vector<double> out;
  out.reserve(trace.points.size() - 1);
  for (std::size_t i = 1; i < trace.points.size(); ++i) {
    out.push_back(haversine_meters(trace.points[i - 1], trace.points[i]));
  }
  return out;
}

std::uint64_t encode_centimeters(double meters) {
  if (!std::isfinite(meters) || meters < 0.0) throw InputError("distance must be finite and non-negative");
  const double scaled = std::round(meters * kFixedPointScale);  // half away from zero
  if (scaled >= 0x1.0p64) throw InputError("distance too large");
  return static_cast<std::uint64_t>(scaled);
}

FieldElement encode_distance(double meters, const PrimeModulus& modulus, int peers, std::size_t sessions) {
  if (peers < 1 || sessions < 1) throw UsageError("peers and sessions must be positive");
  if (!std::isfinite(meters) || meters < 0.0) throw InputError("distance must be finite and non-negative");
  const long double bound = static_cast<long double>(modulus.value()) /
                            (static_cast<long double>(kFixedPointScale) * peers * static_cast<long double>(sessions));
  if (static_cast<long double>(meters) >= bound) {
    throw InputError("distance " + std::to_string(meters) + " m exceeds the fixed-point bound");
  }
  return FieldElement(encode_centimeters(meters), modulus);
}

GpsTrace synthetic_trace(std::uint64_t seed, std::size_t points) {
  SeededRng rng(seed);
  GpsTrace trace;
  trace.source = "synthetic-" + std::to_string(seed);
  double t = 1.4e9 + static_cast<double>(rng.below(86400));
  double lat = 48.0 + rng.uniform01() * 6.0;
  double lon = 6.0 + rng.uniform01() * 8.0;
  for (std::size_t i = 0; i < points; ++i) {
    trace.points.push_back({t, lat, lon});
    t += 900.0 + static_cast<double>(rng.below(301));
    // Mostly stationary, occasionally a trip of a few km.
    const double step = rng.uniform01() < 0.7 ? 0.0002 : 0.03;
    lat = std::clamp(lat + (rng.uniform01() - 0.5) * step, -89.0, 89.0);
    lon = std::clamp(lon + (rng.uniform01() - 0.5) * step, -179.0, 179.0);
  }
  return trace;
}

void write_trace_csv(const GpsTrace& trace, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw InputError("cannot write " + file.string());
  out << "timestamp,lat,lon\n";
  char buf[96];
  for (const auto& p : trace.points) {
    std::snprintf(buf, sizeof buf, "%.0f,%.6f,%.6f\n", p.timestamp, p.lat, p.lon);
    out << buf;
  }
}

}  // namespace smc
