#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "smc/party_session.hpp"
#include "smc/program.hpp"
#include "smc/simnet.hpp"

namespace smc {

// Input of `party` for the session at position `index` of a batch. Called
// when that party starts the session, so later inputs may depend on
// earlier results.
using InputProvider = std::function<FieldElement(std::size_t index, PartyId party)>;

struct SessionBatch {
  const ProtocolProgram* program = nullptr;
  std::size_t sessions = 0;
  // Parallelization factor: sessions driven concurrently.
  std::size_t pf = 1;
  SessionTag first_tag = 1;
  std::uint64_t seed = 0;
  InputProvider inputs;
};

struct EngineOptions {
  ComputeProfile compute;
  // Executor lanes per party; local actions of concurrent sessions share them.
  int lanes = 8;
  // Record (time, session, party, round) whenever a party completes a round.
  bool trace_rounds = false;
};

struct RoundTrace {
  double time;
  SessionTag session;
  PartyId party;
  int round_index;
};

struct SessionOutcome {
  std::size_t index = 0;
  SessionTag tag = 0;
  // Identical at every party; empty if the session failed.
  std::optional<FieldElement> result;
  std::optional<int> failed_round;
  double start_ms = 0.0;
  double end_ms = 0.0;
  // Per sending party (index party - 1).
  std::vector<TransportCounters> traffic;

  double duration_ms() const { return end_ms - start_ms; }
  bool ok() const { return result.has_value(); }
  std::uint64_t messages() const;
  std::uint64_t bytes() const;
};

struct BatchOutcome {
  std::vector<SessionOutcome> sessions;  // in batch order
  double total_ms = 0.0;
  std::vector<RoundTrace> rounds;

  double amortized_ms() const { return sessions.empty() ? 0.0 : total_ms / static_cast<double>(sessions.size()); }
  std::size_t failures() const;
};

using SessionCallback = std::function<void(const SessionOutcome&)>;

// Drives the batch over the simulated network with a sliding window of pf
// live sessions; returns once the network is idle. A failing session does
// not abort its siblings. Expects a network with no other traffic.
BatchOutcome run_batch(const SessionBatch& batch, SimulatedNetwork& net, const EngineOptions& options = {},
                       const SessionCallback& on_done = {});

struct SessionRun {
  FieldElement result;
  SessionOutcome metrics;
};

// One session with fixed inputs. Throws SessionFailed carrying the round.
SessionRun run_session(const ProtocolProgram& program, std::span<const FieldElement> inputs,
                       SimulatedNetwork& net, std::uint64_t seed, const EngineOptions& options = {});

}  // namespace smc
