#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "smc/field.hpp"

namespace smc {

struct GpsPoint {
  double timestamp;  // seconds
  double lat;        // degrees
  double lon;        // degrees
};

struct GpsTrace {
  std::string source;
  std::vector<GpsPoint> points;
};

struct TraceLoadReport {
  std::vector<GpsTrace> traces;  // one per party
  // "file:line: reason" for every rejected row.
  std::vector<std::string> rejected;
};

constexpr double kEarthRadiusMeters = 6371000.0;
constexpr double kFixedPointScale = 100.0;

// Parses one CSV file with columns timestamp,lat,lon. A header line is
// allowed. Bad rows are skipped and reported. Throws InputError naming the
// file if nothing valid remains.
GpsTrace load_trace_file(const std::filesystem::path& file, std::vector<std::string>* rejected = nullptr);

// Every *.csv file of `dir`, in name order.
std::vector<GpsTrace> load_trace_dir(const std::filesystem::path& dir, std::vector<std::string>* rejected = nullptr);

// All *.csv files of `dir` in name order, then repeated round-robin until
// there is one trace per party.
TraceLoadReport load_traces(const std::filesystem::path& dir, int parties);
std::vector<GpsTrace> assign_round_robin(const std::vector<GpsTrace>& traces, int parties);

double haversine_meters(const GpsPoint& a, const GpsPoint& b);
// Distances between successive points. Throws InputError below 2 points.
std::vector<double> distances(const GpsTrace& trace);

// Centimeter fixed point, rounded half away from zero. The bound keeps the
// sum of peers * sessions such values below p.
FieldElement encode_distance(double meters, const PrimeModulus& modulus, int peers, std::size_t sessions);
std::uint64_t encode_centimeters(double meters);

// Random walk with jittered 15-20 minute spacing; deterministic per seed.
GpsTrace synthetic_trace(std::uint64_t seed, std::size_t points);
void write_trace_csv(const GpsTrace& trace, const std::filesystem::path& file);

}  // namespace smc
