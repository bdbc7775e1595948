#pragma once

#include <map>
#include <optional>
#include <vector>

#include "smc/program.hpp"
#include "smc/rng.hpp"
#include "smc/transport.hpp"

namespace smc {

// Collects one share per expected sender for a single communication round.
// Arrival order is irrelevant: the barrier is released by the last share.
class RoundBarrier {
 public:
  explicit RoundBarrier(std::vector<PartyId> expected);

  // Throws UsageError for a sender that is not expected or already arrived.
  void accept(PartyId sender, Share share);
  bool complete() const noexcept { return received_ == expected_.size(); }
  std::size_t outstanding() const noexcept { return expected_.size() - received_; }
  // Shares ordered by sender id. Only valid once complete().
  std::vector<Share> shares() const;
  const Share& from(PartyId sender) const;

 private:
  std::vector<PartyId> expected_;
  std::map<PartyId, Share> arrived_;
  std::size_t received_ = 0;
};

// One party's view of one protocol execution. The program is compiled into
// a fixed list of local actions; drivers poll ready(), charge
// action_cost_ms() of compute time, then call perform() and hand the
// returned messages to their transport.
class PartySession {
 public:
  enum class Action { close_share, close_collect, add, mul_share, mul_collect, open_send, open_collect };

  PartySession(const ProtocolProgram& program, PartyId self, SessionTag session, FieldElement input,
               std::uint64_t seed, const ComputeProfile& profile);

  PartyId party() const noexcept { return self_; }
  SessionTag session() const noexcept { return session_; }
  bool done() const noexcept { return next_ >= actions_.size(); }
  bool ready() const;
  Action current_action() const;
  double action_cost_ms() const;
  // Communication rounds this party has completed.
  int round_index() const noexcept { return rounds_done_; }

  std::vector<Message> perform();
  // Accepts a message for any round of this session, including future ones.
  void deliver(const Message& message);

  // Input sharing is sequential across parties; the driver decides when
  // this party may send its input shares.
  void grant_input_turn() noexcept { turn_granted_ = true; }
  bool input_turn_granted() const noexcept { return turn_granted_; }

  const std::optional<FieldElement>& result() const noexcept { return result_; }

 private:
  struct Planned {
    Action action;
    int step;
    int round;
  };

  RoundBarrier& barrier(int round);
  std::vector<Message> send_to_all(const std::vector<Share>& shares_by_party, int round);

  const ProtocolProgram* program_;
  ThresholdConfig cfg_;
  PartyId self_;
  SessionTag session_;
  FieldElement input_;
  SeededRng rng_;
  const ComputeProfile* profile_;

  std::vector<Planned> actions_;
  std::size_t next_ = 0;
  std::vector<std::optional<Share>> wires_;
  std::map<int, RoundBarrier> barriers_;
  std::optional<Share> own_subshare_;
  std::vector<FieldElement> lambda_;
  bool turn_granted_ = false;
  int rounds_done_ = 0;
  std::optional<FieldElement> result_;
};

}  // namespace smc
