#pragma once

#include <utility>
#include <vector>

#include "smc/program.hpp"
#include "smc/simnet.hpp"

namespace smc {

// n x n per-message durations in ms; the diagonal is ignored.
class DurationMatrix {
 public:
  DurationMatrix(int n, double fill = 0.0);
  static DurationMatrix uniform(int n, double value) { return DurationMatrix(n, value); }

  int size() const noexcept { return n_; }
  double& operator()(int from, int to) { return cells_[index(from, to)]; }
  double operator()(int from, int to) const { return cells_[index(from, to)]; }

 private:
  std::size_t index(int from, int to) const;

  int n_;
  std::vector<double> cells_;
};

// Slowest message of a round: receipt of several shares overlaps, so the
// round costs the maximum, not the sum. Indices are 0-based.
double round_comm_cost(const DurationMatrix& link_matrix);
// The additive counterpart (every message waited for in turn). Not used for
// predictions; kept to show how far off sequential accounting would be.
double naive_round_comm_cost(const DurationMatrix& link_matrix);

struct CostParams {
  int n = 3;
  std::vector<double> comp_costs;  // m entries
  double comm_cost = 0.0;          // one value for every communication step
  DurationMatrix link_matrix{2};

  int steps() const noexcept { return static_cast<int>(comp_costs.size()); }
  void validate() const;
};

// sum(comp_costs) + (m - 1) * comm_cost.
double total_cost(const CostParams& params);

enum class Phase { close, add, mul, open };
long long phase_message_count(Phase phase, int n);
// Close, n - 1 multiplication rounds and Open, each n^2 - n messages.
long long product_message_total(int n);

struct TtpModel {
  int n = 3;
  double upload_delay_ms = 0.0;
  double download_delay_ms = 0.0;
};
// Everyone uploads in parallel, the server answers everyone in parallel.
double ttp_total_cost(const TtpModel& model);

// [n * L, 3n * L]: n sequential waits of one to two-packet messages.
std::pair<double, double> latency_interval(int n, double latency_ms);

// Expected transmissions per packet, 1 / (1 - p). Throws DomainError for p
// outside [0, 1).
double loss_inflation(double p);

// Builds the comp/comm sequence one session of `program` walks through.
// Input sharing is sequential, and a sender's turn ends when its shares
// are acknowledged, so every input turn but the last adds a return trip.
CostParams session_cost_params(const ProtocolProgram& program, const LinkParams& link,
                               const ComputeProfile& compute, const PrimeModulus& modulus);

struct SessionPrediction {
  double predicted_ms;  // max-semantics communication, loss-inflated
  double naive_ms;      // additive communication
  double ttp_ms;
};

SessionPrediction predict_session(const ProtocolProgram& program, const LinkParams& link,
                                  const ComputeProfile& compute, const PrimeModulus& modulus);

}  // namespace smc
