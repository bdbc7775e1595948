#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <queue>
#include <unordered_map>
#include <vector>

#include "smc/rng.hpp"
#include "smc/transport.hpp"

namespace smc {

struct LinkParams {
  double one_way_latency_ms = 0.0;
  double rate_bps = 1e9;  // may be +infinity
  double loss_prob = 0.0;
  int mtu_payload = 1460;
  int header_overhead = 54;  // Ethernet 14 + IPv4 20 + TCP 20
  // Wire units in flight (sent, not yet acknowledged) per directed link.
  int window_units = 10;

  // The configured latency is round-trip additive: each direction carries
  // half of it.
  static LinkParams from_configured(double latency_ms, double rate_mbit, double loss);

  // Throws UsageError on negative latency, non-positive rate, loss outside
  // [0, 1), or non-positive sizes.
  void validate() const;

  double serialization_ms(std::size_t packet_bytes) const;
  int packets_for(std::size_t payload_bytes) const;
};

// Time to move `size_bytes` of payload over `link` with no loss: each
// packet after the first waits for the previous packet's acknowledgement.
double transfer_time(std::size_t size_bytes, const LinkParams& link);

constexpr int kRetransmissionCap = 50;

// Retransmission timeout for the given 0-based attempt:
// (2 * one_way + 1 ms) doubling per attempt, capped at 8x.
double retransmission_timeout_ms(const LinkParams& link, int attempt);

// Draws attempts until one survives. Throws DeliveryFailed past the cap.
int lossy_transmit(const LinkParams& link, SeededRng& rng);

// Framing overhead of one wire unit (length prefix).
constexpr std::size_t kFrameHeaderBytes = 4;

enum class SimEventKind { packet_arrival, ack_arrival, retransmit_timer, delivery, timer };

struct SimEvent {
  double time = 0.0;
  SimEventKind kind = SimEventKind::timer;
  PartyId from = 0;
  PartyId to = 0;
  SessionTag session = 0;
  std::uint64_t unit = 0;
  int packet = 0;
  int attempt = 0;

  friend bool operator==(const SimEvent&, const SimEvent&) = default;
};

enum class DeliveryFailure { timeout, retransmission_cap };

// Deterministic discrete-event network between parties 1..n. Every
// directed link is a FIFO transmitter with its own latency, rate and loss.
class SimulatedNetwork {
 public:
  using DeliveryHandler = std::function<void(const Message&)>;
  using AckHandler = std::function<void(const Message&)>;
  using FailureHandler = std::function<void(const Message&, DeliveryFailure)>;
  // Returns true if the given transmission attempt should be dropped.
  using LossOverride =
      std::function<bool(PartyId from, PartyId to, SessionTag session, std::uint64_t unit, int packet, int attempt)>;

  SimulatedNetwork(int parties, const LinkParams& link, std::uint64_t seed);

  int parties() const noexcept { return parties_; }
  void set_link(PartyId from, PartyId to, const LinkParams& link);
  const LinkParams& link(PartyId from, PartyId to) const;

  // Buffers the message at the sender. Wire units are formed at the end of
  // the current instant, so same-session messages sent together combine.
  void send(Message message);

  void schedule_at(double time_ms, std::function<void()> fn);
  void schedule_after(double delay_ms, std::function<void()> fn) { schedule_at(now_ + delay_ms, std::move(fn)); }

  // Processes events until the queue is empty; returns the final time.
  double run_until_idle();
  double now() const noexcept { return now_; }

  void on_delivery(DeliveryHandler h) { deliver_ = std::move(h); }
  void on_acknowledged(AckHandler h) { acked_ = std::move(h); }
  void on_failure(FailureHandler h) { failed_ = std::move(h); }
  void set_loss_override(LossOverride o) { loss_override_ = std::move(o); }

  // A wire unit not delivered within this many initial timeouts (plus its
  // serialization time) after its first transmission is reported failed.
  void set_deadline_factor(double factor) { deadline_factor_ = factor; }
  double delivery_deadline_ms(PartyId from, PartyId to, std::size_t payload_bytes) const;

  const TransportCounters& counters(PartyId party) const;
  TransportCounters totals() const;
  // Traffic attributed to one session, per sending party (index party - 1).
  const std::vector<TransportCounters>& session_counters(SessionTag session) const;
  void forget_session(SessionTag session) { per_session_.erase(session); }

  // Data packets that reached the receiver on their first attempt or later.
  std::uint64_t distinct_packets() const noexcept { return distinct_packets_; }

  void record_events(bool on) { record_ = on; }
  const std::vector<SimEvent>& event_log() const noexcept { return log_; }

 private:
  struct WireUnit {
    std::uint64_t id = 0;
    PartyId from = 0;
    PartyId to = 0;
    SessionTag session = 0;
    std::vector<Message> messages;
    std::size_t payload_bytes = 0;
    int packets = 0;
    int next_packet = 0;
    int attempt = 0;
    bool started = false;
    bool delivered = false;
    bool failure_reported = false;
  };

  struct Link {
    LinkParams params;
    double tx_free_at = 0.0;
    int in_flight = 0;
    std::vector<Message> pending;  // sent this instant, not yet framed
    std::deque<std::uint64_t> queue;  // framed units waiting for the window
    bool pump_scheduled = false;
  };

  struct Queued {
    double time;
    std::uint64_t seq;
    SimEventKind kind;
    std::uint64_t unit;
    int packet;
    std::function<void()> fn;
  };
  struct Later {
    bool operator()(const Queued& a, const Queued& b) const {
      return a.time != b.time ? a.time > b.time : a.seq > b.seq;
    }
  };

  Link& link_ref(PartyId from, PartyId to);
  void push(double time, SimEventKind kind, std::uint64_t unit, int packet, std::function<void()> fn = {});
  void pump(PartyId from, PartyId to);
  void start_units(Link& link);
  void transmit_packet(WireUnit& unit);
  std::size_t packet_payload(const WireUnit& unit, int packet) const;
  void handle(const Queued& ev);
  void report_failure(WireUnit& unit, DeliveryFailure why);
  void log(const Queued& ev, const WireUnit* unit);
  TransportCounters& session_party(SessionTag session, PartyId party);

  int parties_;
  std::vector<Link> links_;
  SeededRng rng_;
  double now_ = 0.0;
  std::uint64_t seq_ = 0;
  std::uint64_t next_unit_ = 1;
  std::priority_queue<Queued, std::vector<Queued>, Later> events_;
  std::unordered_map<std::uint64_t, WireUnit> units_;
  std::vector<TransportCounters> counters_;
  std::unordered_map<SessionTag, std::vector<TransportCounters>> per_session_;
  std::uint64_t distinct_packets_ = 0;
  double deadline_factor_ = 10.0;

  DeliveryHandler deliver_;
  AckHandler acked_;
  FailureHandler failed_;
  LossOverride loss_override_;

  bool record_ = false;
  std::vector<SimEvent> log_;
};

}  // namespace smc
