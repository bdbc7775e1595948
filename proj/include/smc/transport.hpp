#pragma once

#include <cstdint>
#include <vector>

#include "smc/sharing.hpp"

namespace smc {

using PartyId = int;  // 1-based

struct Message {
  PartyId sender = 0;
  PartyId receiver = 0;
  SessionTag session = 0;
  std::uint16_t round = 0;
  std::vector<std::uint8_t> payload;  // one or more encoded shares
};

// Per-party traffic. Identical field meaning for both backends; the socket
// backend reports frames as packets and never retransmits.
struct TransportCounters {
  std::uint64_t bytes_sent = 0;  // on-the-wire bytes including headers and retransmissions
  std::uint64_t messages_sent = 0;
  std::uint64_t messages_received = 0;
  std::uint64_t packets_sent = 0;  // including retransmissions
  std::uint64_t retransmissions = 0;
  std::uint64_t combined_messages = 0;  // messages merged into an already pending wire unit
  std::uint64_t acks_sent = 0;

  TransportCounters& operator+=(const TransportCounters& o) {
    bytes_sent += o.bytes_sent;
    messages_sent += o.messages_sent;
    messages_received += o.messages_received;
    packets_sent += o.packets_sent;
    retransmissions += o.retransmissions;
    combined_messages += o.combined_messages;
    acks_sent += o.acks_sent;
    return *this;
  }
};

}  // namespace smc
