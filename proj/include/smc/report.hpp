#pragma once

#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "smc/analysis.hpp"
#include "smc/sweep.hpp"

namespace smc {

// Throws InputError with the line number on a malformed row.
std::vector<SweepRow> read_results_csv(std::istream& in);

struct AxisPoint {
  double x = 0.0;
  double duration_ms = 0.0;   // mean over repetitions
  double bytes_per_peer = 0.0;
  double predicted_ms = 0.0;  // cost model
  double ttp_ms = 0.0;
  std::size_t failures = 0;
  std::size_t rows = 0;
};

struct AxisReport {
  std::string axis;  // n, latency_ms, rate_mbit, loss or pf
  std::vector<AxisPoint> points;
  std::optional<RegressionFit> duration_fit;
  std::optional<RegressionFit> bytes_fit;  // MBytes per peer
  std::optional<RegressionFit> ttp_fit;
};

struct ReferenceComparison {
  std::string name;
  RegressionFit measured;
  RegressionFit reference;
  VerdictReport verdict;
};

struct FitReport {
  std::vector<AxisReport> axes;
  std::vector<ReferenceComparison> references;
  std::string reference_tag;

  const AxisReport* axis(const std::string& name) const;
  std::string to_json() const;
  std::string to_text() const;
};

// Rows whose other parameters match the first row form one axis. An axis
// with fewer than two distinct values is left out. The TTP baseline uses
// `modulus` to size its messages.
FitReport emit_report(const std::vector<SweepRow>& rows, const std::string& protocol = "sum",
                      const std::string& modulus = "2305843009213693951",
                      const std::string& reference_path = default_reference_path());

}  // namespace smc
