#include <algorithm>
#include <limits>
#include <memory>
#include <string>
#include <unordered_map>

#include "smc/engine.hpp"
#include "smc/errors.hpp"

namespace smc {

std::uint64_t SessionOutcome::messages() const {
  std::uint64_t sum = 0;
  for (const auto& c : traffic) sum += c.messages_sent;
  return sum;
}

std::uint64_t SessionOutcome::bytes() const {
  std::uint64_t sum = 0;
  for (const auto& c : traffic) sum += c.bytes_sent;
  return sum;
}

std::size_t BatchOutcome::failures() const {
  return static_cast<std::size_t>(
      std::count_if(sessions.begin(), sessions.end(), [](const SessionOutcome& s) { return !s.ok(); }));
}

namespace {

class SimBatchDriver {
 public:
  SimBatchDriver(const SessionBatch& batch, SimulatedNetwork& net, const EngineOptions& options,
                 const SessionCallback& on_done)
      : batch_(batch),
        net_(net),
        options_(options),
        on_done_(on_done),
        n_(batch.program->config().n),
        lane_free_(static_cast<std::size_t>(n_), std::vector<double>(static_cast<std::size_t>(options.lanes), 0.0)) {}

  BatchOutcome run() {
    net_.on_delivery([this](const Message& m) { delivered(m); });
    net_.on_acknowledged([this](const Message& m) { acknowledged(m); });
    net_.on_failure([this](const Message& m, DeliveryFailure) { failed(m.session, m.round); });

    result_.sessions.resize(batch_.sessions);
    const std::size_t initial = std::min(batch_.pf, batch_.sessions);
    for (std::size_t i = 0; i < initial; ++i) start_session(next_index_++);
    net_.run_until_idle();

    net_.on_delivery({});
    net_.on_acknowledged({});
    net_.on_failure({});

    if (!live_.empty()) throw UsageError("simulation went idle with unfinished sessions");
    double first = std::numeric_limits<double>::infinity(), last = 0.0;
    for (auto& s : result_.sessions) {
      s.traffic = net_.session_counters(s.tag);
      if (s.traffic.empty()) s.traffic.resize(static_cast<std::size_t>(n_));
      first = std::min(first, s.start_ms);
      last = std::max(last, s.end_ms);
    }
    result_.total_ms = result_.sessions.empty() ? 0.0 : last - first;
    return std::move(result_);
  }

 private:
  struct Live {
    std::size_t index = 0;
    std::vector<std::unique_ptr<PartySession>> parties;
    std::vector<bool> busy;
    std::vector<int> close_unacked;
    PartyId turn = 1;
    int finished = 0;
    double start = 0.0;
  };

  void start_session(std::size_t index) {
    const SessionTag tag = batch_.first_tag + static_cast<SessionTag>(index);
    Live live;
    live.index = index;
    live.start = net_.now();
    live.busy.assign(static_cast<std::size_t>(n_), false);
    live.close_unacked.assign(static_cast<std::size_t>(n_), 0);
    for (PartyId p = 1; p <= n_; ++p) {
      const std::uint64_t seed = SeededRng::derive_seed(batch_.seed, index, static_cast<std::uint64_t>(p));
      live.parties.push_back(std::make_unique<PartySession>(*batch_.program, p, tag, batch_.inputs(index, p), seed,
                                                            options_.compute));
    }
    live.parties.front()->grant_input_turn();
    auto& slot = result_.sessions[index];
    slot.index = index;
    slot.tag = tag;
    slot.start_ms = live.start;
    live_.emplace(tag, std::move(live));
    for (PartyId p = 1; p <= n_; ++p) progress(tag, p);
  }

  void progress(SessionTag tag, PartyId p) {
    auto it = live_.find(tag);
    if (it == live_.end()) return;
    Live& live = it->second;
    const auto idx = static_cast<std::size_t>(p - 1);
    PartySession& ps = *live.parties[idx];
    if (live.busy[idx] || !ps.ready()) return;
    auto& lanes = lane_free_[idx];
    auto lane = std::min_element(lanes.begin(), lanes.end());
    const double begin = std::max(net_.now(), *lane);
    const double end = begin + ps.action_cost_ms();
    *lane = end;
    live.busy[idx] = true;
    net_.schedule_at(end, [this, tag, p] { complete(tag, p); });
  }

  void complete(SessionTag tag, PartyId p) {
    auto it = live_.find(tag);
    if (it == live_.end()) return;
    Live& live = it->second;
    const auto idx = static_cast<std::size_t>(p - 1);
    PartySession& ps = *live.parties[idx];
    live.busy[idx] = false;
    const bool sharing_input = ps.current_action() == PartySession::Action::close_share;
    const int rounds_before = ps.round_index();
    std::vector<Message> out = ps.perform();
    if (sharing_input) live.close_unacked[idx] = static_cast<int>(out.size());
    if (options_.trace_rounds && ps.round_index() != rounds_before) {
      result_.rounds.push_back(RoundTrace{net_.now(), tag, p, ps.round_index()});
    }
    for (auto& m : out) net_.send(std::move(m));
    if (ps.done()) {
      if (++live.finished == n_) finish(tag, std::nullopt);
      return;
    }
    progress(tag, p);
  }

  void delivered(const Message& m) {
    auto it = live_.find(m.session);
    if (it == live_.end()) return;
    it->second.parties[static_cast<std::size_t>(m.receiver - 1)]->deliver(m);
    progress(m.session, m.receiver);
  }

  void acknowledged(const Message& m) {
    if (m.round != 0) return;
    auto it = live_.find(m.session);
    if (it == live_.end()) return;
    Live& live = it->second;
    // The next party shares its input once every input share of the current
    // sender has been acknowledged.
    if (--live.close_unacked[static_cast<std::size_t>(m.sender - 1)] == 0 && m.sender == live.turn &&
        live.turn < n_) {
      ++live.turn;
      live.parties[static_cast<std::size_t>(live.turn - 1)]->grant_input_turn();
      progress(m.session, live.turn);
    }
  }

  void failed(SessionTag tag, int round) {
    if (live_.count(tag) == 0) return;
    finish(tag, round);
  }

  void finish(SessionTag tag, std::optional<int> failed_round) {
    auto it = live_.find(tag);
    Live live = std::move(it->second);
    live_.erase(it);
    SessionOutcome& out = result_.sessions[live.index];
    out.end_ms = net_.now();
    if (failed_round) {
      out.failed_round = failed_round;
    } else {
      const auto& first = live.parties.front()->result();
      for (const auto& ps : live.parties) {
        if (!(ps->result() == first)) throw UsageError("parties disagree on the session result");
      }
      out.result = first;
    }
    if (on_done_) on_done_(out);
    if (next_index_ < batch_.sessions) start_session(next_index_++);
  }

  const SessionBatch& batch_;
  SimulatedNetwork& net_;
  const EngineOptions& options_;
  const SessionCallback& on_done_;
  int n_;
  std::vector<std::vector<double>> lane_free_;
  std::unordered_map<SessionTag, Live> live_;
  std::size_t next_index_ = 0;
  BatchOutcome result_;
};

}  // namespace

BatchOutcome run_batch(const SessionBatch& batch, SimulatedNetwork& net, const EngineOptions& options,
                       const SessionCallback& on_done) {
  if (batch.program == nullptr) throw UsageError("batch has no program");
  if (!batch.inputs) throw UsageError("batch has no input provider");
  if (batch.pf == 0) throw UsageError("parallelization factor must be at least 1");
  if (options.lanes < 1) throw UsageError("need at least one executor lane");
  if (net.parties() != batch.program->config().n) throw UsageError("network size does not match the program");
  return SimBatchDriver(batch, net, options, on_done).run();
}

SessionRun run_session(const ProtocolProgram& program, std::span<const FieldElement> inputs, SimulatedNetwork& net,
                       std::uint64_t seed, const EngineOptions& options) {
  if (static_cast<int>(inputs.size()) != program.config().n) throw UsageError("expected one input per party");
  SessionBatch batch;
  batch.program = &program;
  batch.sessions = 1;
  batch.seed = seed;
  batch.inputs = [&](std::size_t, PartyId p) { return inputs[static_cast<std::size_t>(p - 1)]; };
  BatchOutcome out = run_batch(batch, net, options);
  SessionOutcome& s = out.sessions.front();
  if (!s.ok()) {
    throw SessionFailed("session failed in communication round " + std::to_string(*s.failed_round),
                        *s.failed_round);
  }
  return SessionRun{*s.result, std::move(s)};
}

}  // namespace smc
