#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "smc/engine.hpp"
#include "smc/transport.hpp"

namespace smc {

struct PeerAddress {
  std::string host;
  std::uint16_t port = 0;

  friend bool operator==(const PeerAddress&, const PeerAddress&) = default;
};

struct SocketOptions {
  std::chrono::milliseconds connect_timeout{30000};
  std::chrono::milliseconds receive_timeout{30000};
};

constexpr std::uint8_t kProtocolVersion = 0x01;
constexpr std::uint32_t kMaxFrameBytes = 1u << 20;

// Appends a 4-byte big-endian length prefix and the payload.
std::vector<std::uint8_t> frame(std::span<const std::uint8_t> payload);

// Full-mesh TCP endpoint of one party. Every party listens; the lower id of
// each pair dials the higher one, so each pair shares exactly one link.
// Frames are length-prefixed; the first frame on a link is the handshake
// (version byte, party id byte).
class SocketEndpoint {
 public:
  // Binds and listens right away; port 0 picks an ephemeral port.
  SocketEndpoint(PartyId self, int parties, const std::string& bind_host, std::uint16_t port);
  ~SocketEndpoint();
  SocketEndpoint(const SocketEndpoint&) = delete;
  SocketEndpoint& operator=(const SocketEndpoint&) = delete;

  PartyId self() const noexcept { return self_; }
  int parties() const noexcept { return parties_; }
  std::uint16_t port() const noexcept { return port_; }

  // Establishes all links. Throws TransportError on a bad table or when the
  // connect timeout expires.
  void connect_mesh(const std::vector<PeerAddress>& table, const SocketOptions& options = {});

  // Thread-safe.
  void send(const Message& message);
  // Next message from any peer. Throws TransportError if a link hit a
  // protocol error.
  std::optional<Message> receive(std::chrono::milliseconds timeout);

  TransportCounters counters() const;

  // Half-closes every link and waits until the peers have done the same.
  void close();

 private:
  struct Link {
    int fd = -1;
    std::mutex write_mutex;
    std::thread reader;
  };

  void reader_loop(PartyId peer, int fd);
  void fail(const std::string& why);

  PartyId self_;
  int parties_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::vector<std::unique_ptr<Link>> links_;  // index peer - 1

  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<Message> inbox_;
  std::optional<std::string> error_;
  TransportCounters counters_;
  bool closed_ = false;
};

// Binds to table[self - 1] and connects to every other entry.
std::unique_ptr<SocketEndpoint> socket_transport(PartyId self, const std::vector<PeerAddress>& table,
                                                 const SocketOptions& options = {});

// Runs this party's side of the batch over a connected endpoint. Outcomes
// carry wall-clock times in ms since the call and this party's traffic only.
// If no message arrives within receive_timeout, every unfinished session is
// marked failed at its current round. on_done runs as soon as this party
// finishes a session.
std::vector<SessionOutcome> run_party_batch(const SessionBatch& batch, SocketEndpoint& endpoint,
                                            std::chrono::milliseconds receive_timeout = std::chrono::seconds(30),
                                            const SessionCallback& on_done = {});

// All parties in this process over loopback TCP, one thread each. The
// session callback is invoked from party n's thread.
BatchOutcome run_batch_sockets(const SessionBatch& batch, const SocketOptions& options = {},
                               const SessionCallback& on_done = {}, std::vector<TransportCounters>* totals = nullptr);

}  // namespace smc
