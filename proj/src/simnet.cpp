#include "smc/simnet.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "smc/errors.hpp"

namespace smc {

LinkParams LinkParams::from_configured(double latency_ms, double rate_mbit, double loss) {
  LinkParams p;
  p.one_way_latency_ms = latency_ms / 2.0;
  p.rate_bps = rate_mbit * 1e6;
  p.loss_prob = loss;
  p.validate();
  return p;
}

void LinkParams::validate() const {
  if (!(one_way_latency_ms >= 0.0)) throw UsageError("latency must be non-negative");
  if (!(rate_bps > 0.0)) throw UsageError("rate must be positive");
  if (!(loss_prob >= 0.0 && loss_prob < 1.0)) throw UsageError("loss probability must be in [0, 1)");
  if (mtu_payload <= 0 || header_overhead < 0) throw UsageError("invalid packet sizes");
  if (window_units <= 0) throw UsageError("window must hold at least one unit");
}

double LinkParams::serialization_ms(std::size_t packet_bytes) const {
  if (std::isinf(rate_bps)) return 0.0;
  return static_cast<double>(packet_bytes) * 8.0 / rate_bps * 1000.0;
}

int LinkParams::packets_for(std::size_t payload_bytes) const {
  const auto mtu = static_cast<std::size_t>(mtu_payload);
  return static_cast<int>(std::max<std::size_t>(1, (payload_bytes + mtu - 1) / mtu));
}

double transfer_time(std::size_t size_bytes, const LinkParams& link) {
  if (size_bytes == 0) throw UsageError("transfer size must be positive");
  const int k = link.packets_for(size_bytes);
  double serialization = 0.0;
  std::size_t remaining = size_bytes;
  for (int i = 0; i < k; ++i) {
    const std::size_t chunk = std::min<std::size_t>(remaining, static_cast<std::size_t>(link.mtu_payload));
    serialization += link.serialization_ms(chunk + static_cast<std::size_t>(link.header_overhead));
    remaining -= chunk;
  }
  return link.one_way_latency_ms * (2.0 * k - 1.0) + serialization;
}

double retransmission_timeout_ms(const LinkParams& link, int attempt) {
  const double base = 2.0 * link.one_way_latency_ms + 1.0;
  return base * static_cast<double>(1 << std::min(attempt, 3));
}

int lossy_transmit(const LinkParams& link, SeededRng& rng) {
  int attempts = 1;
  while (link.loss_prob > 0.0 && rng.uniform01() < link.loss_prob) {
    if (++attempts > kRetransmissionCap) {
      throw DeliveryFailed("packet lost " + std::to_string(kRetransmissionCap) + " times");
    }
  }
  return attempts;
}

SimulatedNetwork::SimulatedNetwork(int parties, const LinkParams& link, std::uint64_t seed)
    : parties_(parties),
      links_(static_cast<std::size_t>(parties) * static_cast<std::size_t>(parties)),
      rng_(seed),
      counters_(static_cast<std::size_t>(parties)) {
  if (parties < 2) throw UsageError("network needs at least two parties");
  link.validate();
  for (auto& l : links_) l.params = link;
}

SimulatedNetwork::Link& SimulatedNetwork::link_ref(PartyId from, PartyId to) {
  if (from < 1 || from > parties_ || to < 1 || to > parties_) {
    throw UsageError("unknown party in link " + std::to_string(from) + "->" + std::to_string(to));
  }
  if (from == to) throw UsageError("no link from a party to itself");
  return links_[static_cast<std::size_t>(from - 1) * static_cast<std::size_t>(parties_) +
                static_cast<std::size_t>(to - 1)];
}

void SimulatedNetwork::set_link(PartyId from, PartyId to, const LinkParams& link) {
  link.validate();
  link_ref(from, to).params = link;
}

const LinkParams& SimulatedNetwork::link(PartyId from, PartyId to) const {
  return const_cast<SimulatedNetwork*>(this)->link_ref(from, to).params;
}

double SimulatedNetwork::delivery_deadline_ms(PartyId from, PartyId to, std::size_t payload_bytes) const {
  const LinkParams& fwd = link(from, to);
  const LinkParams& rev = link(to, from);
  const std::size_t total = payload_bytes + kFrameHeaderBytes;
  const double serialization = transfer_time(total, LinkParams{0.0, fwd.rate_bps, 0.0, fwd.mtu_payload,
                                                               fwd.header_overhead, fwd.window_units});
  const double rtt = fwd.one_way_latency_ms + rev.one_way_latency_ms;
  return deadline_factor_ * (rtt + 1.0 + serialization);
}

TransportCounters& SimulatedNetwork::session_party(SessionTag session, PartyId party) {
  auto& v = per_session_[session];
  if (v.empty()) v.resize(static_cast<std::size_t>(parties_));
  return v[static_cast<std::size_t>(party - 1)];
}

const TransportCounters& SimulatedNetwork::counters(PartyId party) const {
  if (party < 1 || party > parties_) throw UsageError("unknown party " + std::to_string(party));
  return counters_[static_cast<std::size_t>(party - 1)];
}

TransportCounters SimulatedNetwork::totals() const {
  TransportCounters sum;
  for (const auto& c : counters_) sum += c;
  return sum;
}

const std::vector<TransportCounters>& SimulatedNetwork::session_counters(SessionTag session) const {
  static const std::vector<TransportCounters> empty;
  auto it = per_session_.find(session);
  return it == per_session_.end() ? empty : it->second;
}

void SimulatedNetwork::push(double time, SimEventKind kind, std::uint64_t unit, int packet,
                            std::function<void()> fn) {
  events_.push(Queued{time, seq_++, kind, unit, packet, std::move(fn)});
}

void SimulatedNetwork::schedule_at(double time_ms, std::function<void()> fn) {
  if (time_ms < now_) throw UsageError("cannot schedule an event in the past");
  push(time_ms, SimEventKind::timer, 0, 0, std::move(fn));
}

void SimulatedNetwork::send(Message message) {
  if (message.sender == message.receiver) throw UsageError("a party cannot send to itself");
  Link& link = link_ref(message.sender, message.receiver);
  if (message.payload.empty()) throw UsageError("message payload must not be empty");
  ++counters_[static_cast<std::size_t>(message.sender - 1)].messages_sent;
  ++session_party(message.session, message.sender).messages_sent;
  const PartyId from = message.sender, to = message.receiver;
  link.pending.push_back(std::move(message));
  if (!link.pump_scheduled) {
    link.pump_scheduled = true;
    push(now_, SimEventKind::timer, 0, 0, [this, from, to] { pump(from, to); });
  }
}

void SimulatedNetwork::pump(PartyId from, PartyId to) {
  Link& link = link_ref(from, to);
  link.pump_scheduled = false;
  std::vector<Message> pending = std::move(link.pending);
  link.pending.clear();

  for (auto& msg : pending) {
    // Merge into a framed unit of the same session that has not started yet.
    WireUnit* target = nullptr;
    for (std::uint64_t id : link.queue) {
      WireUnit& u = units_.at(id);
      if (u.session == msg.session) {
        target = &u;
        break;
      }
    }
    const SessionTag session = msg.session;
    if (target != nullptr) {
      target->payload_bytes += msg.payload.size();
      target->messages.push_back(std::move(msg));
      target->packets = link.params.packets_for(target->payload_bytes + kFrameHeaderBytes);
      ++counters_[static_cast<std::size_t>(from - 1)].combined_messages;
      ++session_party(session, from).combined_messages;
      continue;
    }
    WireUnit u;
    u.id = next_unit_++;
    u.from = from;
    u.to = to;
    u.session = session;
    u.payload_bytes = msg.payload.size();
    u.packets = link.params.packets_for(u.payload_bytes + kFrameHeaderBytes);
    u.messages.push_back(std::move(msg));
    link.queue.push_back(u.id);
    units_.emplace(u.id, std::move(u));
  }
  start_units(link);
}

void SimulatedNetwork::start_units(Link& link) {
  while (link.in_flight < link.params.window_units && !link.queue.empty()) {
    const std::uint64_t id = link.queue.front();
    link.queue.pop_front();
    WireUnit& unit = units_.at(id);
    unit.started = true;
    ++link.in_flight;
    const double deadline = now_ + delivery_deadline_ms(unit.from, unit.to, unit.payload_bytes);
    push(deadline, SimEventKind::timer, 0, 0, [this, id] {
      auto it = units_.find(id);
      if (it != units_.end() && !it->second.delivered) report_failure(it->second, DeliveryFailure::timeout);
    });
    transmit_packet(unit);
  }
}

std::size_t SimulatedNetwork::packet_payload(const WireUnit& unit, int packet) const {
  const auto mtu = static_cast<std::size_t>(link(unit.from, unit.to).mtu_payload);
  const std::size_t total = unit.payload_bytes + kFrameHeaderBytes;
  const std::size_t offset = static_cast<std::size_t>(packet) * mtu;
  return std::min(mtu, total - offset);
}

void SimulatedNetwork::transmit_packet(WireUnit& unit) {
  Link& link = link_ref(unit.from, unit.to);
  const LinkParams& p = link.params;
  const std::size_t bytes = packet_payload(unit, unit.next_packet) + static_cast<std::size_t>(p.header_overhead);
  const double start = std::max(now_, link.tx_free_at);
  const double done = start + p.serialization_ms(bytes);
  link.tx_free_at = done;

  for (TransportCounters* c : {&counters_[static_cast<std::size_t>(unit.from - 1)], &session_party(unit.session, unit.from)}) {
    ++c->packets_sent;
    c->bytes_sent += bytes;
    if (unit.attempt > 0) ++c->retransmissions;
  }

  bool lost = false;
  if (loss_override_) {
    lost = loss_override_(unit.from, unit.to, unit.session, unit.id, unit.next_packet, unit.attempt);
  } else if (p.loss_prob > 0.0) {
    lost = rng_.uniform01() < p.loss_prob;
  }
  if (lost) {
    push(done + retransmission_timeout_ms(p, unit.attempt), SimEventKind::retransmit_timer, unit.id,
         unit.next_packet);
  } else {
    push(done + p.one_way_latency_ms, SimEventKind::packet_arrival, unit.id, unit.next_packet);
  }
}

void SimulatedNetwork::report_failure(WireUnit& unit, DeliveryFailure why) {
  if (unit.failure_reported) return;
  unit.failure_reported = true;
  if (failed_) {
    for (const Message& m : unit.messages) failed_(m, why);
  }
}

void SimulatedNetwork::log(const Queued& ev, const WireUnit* unit) {
  if (!record_) return;
  SimEvent e;
  e.time = ev.time;
  e.kind = ev.kind;
  e.unit = ev.unit;
  e.packet = ev.packet;
  if (unit != nullptr) {
    e.from = unit->from;
    e.to = unit->to;
    e.session = unit->session;
    e.attempt = unit->attempt;
  }
  log_.push_back(e);
}

void SimulatedNetwork::handle(const Queued& ev) {
  if (ev.kind == SimEventKind::timer) {
    log(ev, nullptr);
    ev.fn();
    return;
  }
  auto it = units_.find(ev.unit);
  if (it == units_.end()) return;
  WireUnit& unit = it->second;
  log(ev, &unit);

  switch (ev.kind) {
    case SimEventKind::packet_arrival: {
      ++distinct_packets_;
      if (ev.packet == unit.packets - 1) push(now_, SimEventKind::delivery, unit.id, ev.packet);
      ++counters_[static_cast<std::size_t>(unit.to - 1)].acks_sent;
      ++session_party(unit.session, unit.to).acks_sent;
      push(now_ + link(unit.to, unit.from).one_way_latency_ms, SimEventKind::ack_arrival, unit.id, ev.packet);
      break;
    }
    case SimEventKind::ack_arrival: {
      unit.attempt = 0;
      ++unit.next_packet;
      if (unit.next_packet < unit.packets) {
        transmit_packet(unit);
        break;
      }
      Link& link = link_ref(unit.from, unit.to);
      --link.in_flight;
      const std::vector<Message> messages = std::move(unit.messages);
      units_.erase(it);
      if (acked_) {
        for (const Message& m : messages) acked_(m);
      }
      start_units(link);
      break;
    }
    case SimEventKind::retransmit_timer: {
      ++unit.attempt;
      if (unit.attempt >= kRetransmissionCap) {
        report_failure(unit, DeliveryFailure::retransmission_cap);
        Link& link = link_ref(unit.from, unit.to);
        --link.in_flight;
        units_.erase(it);
        start_units(link);
        break;
      }
      transmit_packet(unit);
      break;
    }
    case SimEventKind::delivery: {
      unit.delivered = true;
      for (const Message& m : unit.messages) {
        ++counters_[static_cast<std::size_t>(m.receiver - 1)].messages_received;
        ++session_party(m.session, m.receiver).messages_received;
        if (deliver_) deliver_(m);
      }
      break;
    }
    case SimEventKind::timer:
      break;
  }
}

double SimulatedNetwork::run_until_idle() {
  while (!events_.empty()) {
    // top() is const; the element is discarded right after the move.
    Queued ev = std::move(const_cast<Queued&>(events_.top()));
    events_.pop();
    now_ = ev.time;
    handle(ev);
  }
  return now_;
}

}  // namespace smc
