#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "smc/field.hpp"
#include "smc/traces.hpp"

namespace smc {

enum class Mode { simulate, sockets };
// axes: vary one list at a time, the others held at their first value.
// cartesian: every combination.
enum class Grid { axes, cartesian };

struct SweepConfig {
  std::vector<int> peers{3, 5, 7, 9, 11, 13, 15};
  std::vector<double> latency_ms{0, 16, 50, 200, 500};
  std::vector<double> rate_mbit{1000, 100, 10, 1};
  std::vector<double> loss{0.00, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 0.10};
  std::vector<std::size_t> pf{1, 5, 10, 20, 50, 100, 200, 500, 1000};
  std::size_t sessions = 1000;
  std::size_t repetitions = 50;
  std::uint64_t seed = 1;
  Mode mode = Mode::simulate;
  // "sum", "product" or a plan file.
  std::string protocol = "sum";
  Grid grid = Grid::axes;
  std::string modulus = "2305843009213693951";
  // Party n's running sum is written here after every session; rows already
  // recorded in it are skipped on the next start.
  std::optional<std::filesystem::path> state_file;

  // Throws ConfigError.
  void validate() const;
};

// Keys mirror the CLI flags, with '-' or '_': peers, latency-ms, rate-mbit,
// loss, pf, sessions, reps, seed, mode, protocol, grid, modulus, state.
// Scalars are accepted where lists are expected. Throws ConfigError.
void apply_config_json(SweepConfig& cfg, const std::string& json_text);

struct SweepCell {
  int n;
  double latency_ms;
  double rate_mbit;
  double loss;
  std::size_t pf;
};

std::vector<SweepCell> sweep_cells(const SweepConfig& cfg);

struct SweepRow {
  SweepCell cell;
  std::size_t sessions = 0;
  std::size_t repetition = 0;
  double duration_ms = 0.0;  // amortized per session
  double bytes_per_peer = 0.0;
  std::uint64_t messages = 0;
  std::uint64_t packets = 0;
  std::uint64_t retransmissions = 0;
  std::size_t failures = 0;
  double predicted_ms = 0.0;

  // Use-case bookkeeping (sum protocol): party n's running sum against the
  // plaintext sum of the same submissions.
  u128 running_sum = 0;
  u128 oracle_sum = 0;
  std::uint64_t submissions = 0;
  // Every successful session matched its plaintext evaluation.
  bool exact = true;
  std::optional<std::string> hard_failure;

  double running_average_m() const;
  double oracle_average_m() const;
};

extern const char* const kCsvHeader;
std::string csv_line(const SweepRow& row);

struct SweepSummary {
  std::vector<SweepRow> rows;
  std::size_t hard_failures = 0;
};

using RowCallback = std::function<void(const SweepRow&)>;

// Runs every cell and repetition; each row is written to `csv` as soon as it
// completes. `traces` holds at least one trace; parties beyond its size
// reuse traces round-robin. Session failures are counted, not thrown; other
// errors of a cell become a hard failure and the sweep moves on.
SweepSummary run_sweep(const SweepConfig& cfg, const std::vector<GpsTrace>& traces, std::ostream* csv = nullptr,
                       const RowCallback& on_row = {});

// Bundled traces if present, otherwise five synthetic ones.
std::vector<GpsTrace> default_traces();
std::filesystem::path default_trace_dir();

}  // namespace smc
