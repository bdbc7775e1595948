#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smc/field.hpp"
#include "smc/sharing.hpp"

namespace smc {

enum class StepKind { close, add_local, mul_round, open };

// Wires 0..n-1 hold the parties' inputs once Close has run; every AddLocal
// and MulRound appends one wire.
struct Step {
  StepKind kind;
  int lhs = -1;
  int rhs = -1;
};

class ProtocolProgram {
 public:
  // Throws UsageError unless the program starts with Close, ends with Open,
  // and every operand wire exists before it is used.
  ProtocolProgram(ThresholdConfig cfg, std::vector<Step> steps);

  const ThresholdConfig& config() const noexcept { return cfg_; }
  const std::vector<Step>& steps() const noexcept { return steps_; }
  int step_count() const noexcept { return static_cast<int>(steps_.size()); }
  int wire_count() const noexcept { return wires_; }
  int multiplication_rounds() const noexcept { return mul_rounds_; }
  // Close + one per MulRound + Open.
  int communication_rounds() const noexcept { return mul_rounds_ + 2; }
  // (n^2 - n) per communication round.
  long long messages_per_session() const noexcept;

 private:
  ThresholdConfig cfg_;
  std::vector<Step> steps_;
  int wires_ = 0;
  int mul_rounds_ = 0;
};

ProtocolProgram build_sum_program(const ThresholdConfig& cfg);
// Left fold ((v1 * v2) * v3) ... : n - 1 multiplication rounds.
ProtocolProgram build_product_program(const ThresholdConfig& cfg);

// Plan text: one keyword per line (close, add, mul, open); '#' starts a
// comment. add/mul lines fold the next input into the accumulator; if the
// plan has fewer fold lines than n - 1 the last one repeats, so
// "close\nadd\nopen" is the sum for any n. Throws InputError.
ProtocolProgram parse_plan(std::string_view text, const ThresholdConfig& cfg);
// "sum", "product", or a path to a plan file.
ProtocolProgram program_from_name(const std::string& name, const ThresholdConfig& cfg);

FieldElement evaluate_plain(const ProtocolProgram& program, std::span<const FieldElement> inputs);

// Simulated local computation costs in milliseconds. Linear in the party
// count where the work is (polynomial evaluation, interpolation).
struct ComputeProfile {
  double share_base_ms = 0.10;
  double share_per_party_ms = 0.03;
  double add_ms = 0.005;
  double mul_ms = 0.005;
  double recombine_base_ms = 0.05;
  double recombine_per_party_ms = 0.01;
  double interpolate_base_ms = 0.10;
  double interpolate_per_share_ms = 0.03;

  double share_generation(int n) const { return share_base_ms + share_per_party_ms * n; }
  double recombine(int n) const { return recombine_base_ms + recombine_per_party_ms * n; }
  double interpolate(int n) const { return interpolate_base_ms + interpolate_per_share_ms * n; }
};

// Times the real gate functions on this host and scales them into a
// profile. Non-deterministic; simulations using it are not reproducible.
ComputeProfile measure_compute_profile(const PrimeModulus& modulus, int n, int iterations = 2000);

}  // namespace smc
