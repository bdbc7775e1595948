#include <algorithm>
#include <atomic>
#include <map>
#include <memory>
#include <string>

#include "smc/errors.hpp"
#include "smc/socket_transport.hpp"

namespace smc {

namespace {

using Clock = std::chrono::steady_clock;

class PartyDriver {
 public:
  PartyDriver(const SessionBatch& batch, SocketEndpoint& endpoint, std::chrono::milliseconds timeout,
              const SessionCallback& on_done)
      : batch_(batch),
        ep_(endpoint),
        timeout_(timeout),
        on_done_(on_done),
        self_(endpoint.self()),
        n_(batch.program->config().n),
        origin_(Clock::now()) {}

  std::vector<SessionOutcome> run() {
    out_.resize(batch_.sessions);
    const std::size_t initial = std::min(batch_.pf, batch_.sessions);
    for (std::size_t i = 0; i < initial; ++i) start(next_index_++);
    while (!live_.empty()) {
      std::optional<Message> m = ep_.receive(timeout_);
      if (!m) {
        fail_all();
        break;
      }
      route(std::move(*m));
    }
    return std::move(out_);
  }

 private:
  struct Live {
    std::size_t index;
    std::unique_ptr<PartySession> session;
  };

  double now_ms() const {
    return std::chrono::duration<double, std::milli>(Clock::now() - origin_).count();
  }

  void start(std::size_t index) {
    const SessionTag tag = batch_.first_tag + static_cast<SessionTag>(index);
    const std::uint64_t seed = SeededRng::derive_seed(batch_.seed, index, static_cast<std::uint64_t>(self_));
    auto ps = std::make_unique<PartySession>(*batch_.program, self_, tag, batch_.inputs(index, self_), seed,
                                             profile_);
    if (self_ == 1) ps->grant_input_turn();
    SessionOutcome& o = out_[index];
    o.index = index;
    o.tag = tag;
    o.start_ms = now_ms();
    o.traffic.assign(static_cast<std::size_t>(n_), TransportCounters{});
    live_.emplace(tag, Live{index, std::move(ps)});
    auto early = pending_.find(tag);
    if (early != pending_.end()) {
      std::vector<Message> buffered = std::move(early->second);
      pending_.erase(early);
      for (auto& m : buffered) {
        if (!accept(tag, m)) return;
      }
    }
    advance(tag);
  }

  void route(Message m) {
    const SessionTag tag = m.session;
    if (live_.count(tag) == 0) {
      if (tag < batch_.first_tag || tag - batch_.first_tag >= batch_.sessions) {
        throw TransportError("message for unknown session " + std::to_string(tag));
      }
      // Peers may run ahead of this party's window.
      if (tag - batch_.first_tag >= next_index_) pending_[tag].push_back(std::move(m));
      return;
    }
    if (accept(tag, m)) advance(tag);
  }

  // False if the session finished or was dropped.
  bool accept(SessionTag tag, const Message& m) {
    Live& live = live_.at(tag);
    live.session->deliver(m);
    // Input sharing is sequential: party k goes once party k-1's share arrived.
    if (m.round == 0 && m.sender == self_ - 1) live.session->grant_input_turn();
    return true;
  }

  void advance(SessionTag tag) {
    auto it = live_.find(tag);
    if (it == live_.end()) return;
    PartySession& ps = *it->second.session;
    SessionOutcome& o = out_[it->second.index];
    TransportCounters& mine = o.traffic[static_cast<std::size_t>(self_ - 1)];
    while (!ps.done() && ps.ready()) {
      for (const Message& m : ps.perform()) {
        ep_.send(m);
        ++mine.messages_sent;
        ++mine.packets_sent;
        mine.bytes_sent += m.payload.size() + kFrameHeaderBytes;
      }
    }
    if (ps.done()) {
      o.end_ms = now_ms();
      o.result = ps.result();
      live_.erase(it);
      if (on_done_) on_done_(o);
      if (next_index_ < batch_.sessions) start(next_index_++);
    }
  }

  void fail_all() {
    const double t = now_ms();
    for (auto& [tag, live] : live_) {
      SessionOutcome& o = out_[live.index];
      o.end_ms = t;
      o.failed_round = live.session->round_index();
      if (on_done_) on_done_(o);
    }
    live_.clear();
    // Sessions never started fail at round 0.
    while (next_index_ < batch_.sessions) {
      SessionOutcome& o = out_[next_index_];
      o.index = next_index_;
      o.tag = batch_.first_tag + static_cast<SessionTag>(next_index_);
      o.start_ms = o.end_ms = t;
      o.failed_round = 0;
      o.traffic.assign(static_cast<std::size_t>(n_), TransportCounters{});
      if (on_done_) on_done_(o);
      ++next_index_;
    }
  }

  const SessionBatch& batch_;
  SocketEndpoint& ep_;
  std::chrono::milliseconds timeout_;
  const SessionCallback& on_done_;
  PartyId self_;
  int n_;
  Clock::time_point origin_;
  ComputeProfile profile_;
  std::vector<SessionOutcome> out_;
  std::map<SessionTag, Live> live_;
  std::map<SessionTag, std::vector<Message>> pending_;
  std::size_t next_index_ = 0;
};

void check_batch(const SessionBatch& batch) {
  if (batch.program == nullptr) throw UsageError("batch has no program");
  if (!batch.inputs) throw UsageError("batch has no input provider");
  if (batch.pf == 0) throw UsageError("parallelization factor must be at least 1");
}

}  // namespace

std::vector<SessionOutcome> run_party_batch(const SessionBatch& batch, SocketEndpoint& endpoint,
                                            std::chrono::milliseconds receive_timeout,
                                            const SessionCallback& on_done) {
  check_batch(batch);
  if (endpoint.parties() != batch.program->config().n) throw UsageError("endpoint size does not match the program");
  return PartyDriver(batch, endpoint, receive_timeout, on_done).run();
}

BatchOutcome run_batch_sockets(const SessionBatch& batch, const SocketOptions& options, const SessionCallback& on_done,
                               std::vector<TransportCounters>* totals) {
  check_batch(batch);
  const int n = batch.program->config().n;
  std::vector<std::unique_ptr<SocketEndpoint>> endpoints;
  std::vector<PeerAddress> table;
  for (PartyId p = 1; p <= n; ++p) {
    endpoints.push_back(std::make_unique<SocketEndpoint>(p, n, "127.0.0.1", 0));
    table.push_back(PeerAddress{"127.0.0.1", endpoints.back()->port()});
  }

  std::vector<std::vector<SessionOutcome>> per_party(static_cast<std::size_t>(n));
  std::vector<std::string> errors(static_cast<std::size_t>(n));
  std::vector<std::thread> threads;
  const auto started = Clock::now();
  for (PartyId p = 1; p <= n; ++p) {
    threads.emplace_back([&, p] {
      const auto idx = static_cast<std::size_t>(p - 1);
      try {
        endpoints[idx]->connect_mesh(table, options);
        static const SessionCallback none;
        per_party[idx] = run_party_batch(batch, *endpoints[idx], options.receive_timeout, p == n ? on_done : none);
      } catch (const std::exception& e) {
        errors[idx] = e.what();
      }
      // Every party closes so peers blocked on a read see EOF.
      try {
        endpoints[idx]->close();
      } catch (const std::exception& e) {
        if (errors[idx].empty()) errors[idx] = e.what();
      }
    });
  }
  for (auto& t : threads) t.join();
  const double wall = std::chrono::duration<double, std::milli>(Clock::now() - started).count();
  for (PartyId p = 1; p <= n; ++p) {
    const auto& e = errors[static_cast<std::size_t>(p - 1)];
    if (!e.empty()) throw TransportError("party " + std::to_string(p) + ": " + e);
  }

  BatchOutcome result;
  result.sessions = std::move(per_party[static_cast<std::size_t>(n - 1)]);
  double first = wall, last = 0.0;
  for (std::size_t i = 0; i < result.sessions.size(); ++i) {
    SessionOutcome& s = result.sessions[i];
    for (PartyId p = 1; p < n; ++p) {
      const SessionOutcome& other = per_party[static_cast<std::size_t>(p - 1)][i];
      if (s.ok() && other.ok() && !(*s.result == *other.result)) {
        throw UsageError("parties disagree on the session result");
      }
      if (!other.ok() && s.ok()) {
        s.result.reset();
        s.failed_round = other.failed_round;
      }
      s.traffic[static_cast<std::size_t>(p - 1)] = other.traffic[static_cast<std::size_t>(p - 1)];
      s.start_ms = std::min(s.start_ms, other.start_ms);
      s.end_ms = std::max(s.end_ms, other.end_ms);
    }
    first = std::min(first, s.start_ms);
    last = std::max(last, s.end_ms);
  }
  result.total_ms = result.sessions.empty() ? 0.0 : last - first;
  if (totals) {
    totals->clear();
    for (const auto& ep : endpoints) totals->push_back(ep->counters());
  }
  return result;
}

}  // namespace smc
