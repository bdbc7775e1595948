#include "smc/socket_transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <set>

#include "smc/errors.hpp"

namespace smc {

namespace {

using Clock = std::chrono::steady_clock;

std::string sys_error(const std::string& what) { return what + ": " + std::strerror(errno); }

sockaddr_in resolve(const std::string& host, std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) == 1) return addr;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) {
    throw TransportError("cannot resolve host " + host);
  }
  addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  freeaddrinfo(res);
  return addr;
}

void write_all(int fd, const std::uint8_t* data, std::size_t size) {
  while (size > 0) {
    const ssize_t n = ::send(fd, data, size, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(sys_error("send"));
    }
    data += n;
    size -= static_cast<std::size_t>(n);
  }
}

// False on orderly EOF before the first byte.
bool read_all(int fd, std::uint8_t* data, std::size_t size) {
  std::size_t got = 0;
  while (got < size) {
    const ssize_t n = ::recv(fd, data + got, size - got, 0);
    if (n == 0) {
      if (got == 0) return false;
      throw TransportError("connection closed mid-frame");
    }
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(sys_error("recv"));
    }
    got += static_cast<std::size_t>(n);
  }
  return true;
}

std::optional<std::vector<std::uint8_t>> read_frame(int fd) {
  std::uint8_t header[4];
  if (!read_all(fd, header, 4)) return std::nullopt;
  const std::uint32_t len = (std::uint32_t{header[0]} << 24) | (std::uint32_t{header[1]} << 16) |
                            (std::uint32_t{header[2]} << 8) | header[3];
  if (len == 0) throw TransportError("protocol error: empty frame");
  if (len > kMaxFrameBytes) throw TransportError("protocol error: frame of " + std::to_string(len) + " bytes");
  std::vector<std::uint8_t> payload(len);
  if (!read_all(fd, payload.data(), len)) throw TransportError("connection closed mid-frame");
  return payload;
}

void set_nodelay(int fd) {
  int one = 1;
  setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

}  // namespace

std::vector<std::uint8_t> frame(std::span<const std::uint8_t> payload) {
  if (payload.empty()) throw UsageError("frames must not be empty");
  if (payload.size() > kMaxFrameBytes) throw UsageError("frame too large");
  const auto len = static_cast<std::uint32_t>(payload.size());
  std::vector<std::uint8_t> out(4 + payload.size());
  for (int i = 0; i < 4; ++i) out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(len >> (24 - 8 * i));
  std::copy(payload.begin(), payload.end(), out.begin() + 4);
  return out;
}

SocketEndpoint::SocketEndpoint(PartyId self, int parties, const std::string& bind_host, std::uint16_t port)
    : self_(self), parties_(parties) {
  if (parties < 2 || parties > 255) throw UsageError("party count out of range");
  if (self < 1 || self > parties) throw UsageError("party id out of range");
  for (int i = 0; i < parties; ++i) links_.push_back(std::make_unique<Link>());

  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw TransportError(sys_error("socket"));
  int one = 1;
  setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr = resolve(bind_host, port);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    const std::string msg = sys_error("bind " + bind_host + ":" + std::to_string(port));
    ::close(listen_fd_);
    throw TransportError(msg);
  }
  if (::listen(listen_fd_, parties) != 0) {
    const std::string msg = sys_error("listen");
    ::close(listen_fd_);
    throw TransportError(msg);
  }
  socklen_t len = sizeof addr;
  getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

SocketEndpoint::~SocketEndpoint() {
  try {
    close();
  } catch (...) {
  }
}

void SocketEndpoint::connect_mesh(const std::vector<PeerAddress>& table, const SocketOptions& options) {
  if (static_cast<int>(table.size()) != parties_) {
    throw TransportError("startup: peer table has " + std::to_string(table.size()) + " entries, expected " +
                         std::to_string(parties_));
  }
  std::set<std::pair<std::string, std::uint16_t>> seen;
  for (const auto& a : table) {
    if (!seen.emplace(a.host, a.port).second) {
      throw TransportError("startup: duplicate peer address " + a.host + ":" + std::to_string(a.port));
    }
  }
  const auto deadline = Clock::now() + options.connect_timeout;
  auto remaining_ms = [&] {
    return static_cast<int>(std::max<long long>(
        0, std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count()));
  };

  // Accept the lower ids while dialing the higher ones.
  const int expected_accepts = self_ - 1;
  std::string accept_error;
  std::thread acceptor([&] {
    try {
      int accepted = 0;
      while (accepted < expected_accepts) {
        pollfd pfd{listen_fd_, POLLIN, 0};
        const int ready = ::poll(&pfd, 1, remaining_ms());
        if (ready == 0) throw TransportError("startup: timed out waiting for lower-id peers");
        if (ready < 0) {
          if (errno == EINTR) continue;
          throw TransportError(sys_error("poll"));
        }
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) throw TransportError(sys_error("accept"));
        set_nodelay(fd);
        std::optional<std::vector<std::uint8_t>> hello;
        try {
          hello = read_frame(fd);
        } catch (const TransportError&) {
          ::close(fd);
          throw;
        }
        if (!hello || hello->size() != 2 || (*hello)[0] != kProtocolVersion) {
          ::close(fd);
          throw TransportError("startup: bad handshake");
        }
        const PartyId peer = (*hello)[1];
        if (peer < 1 || peer >= self_ || links_[static_cast<std::size_t>(peer - 1)]->fd >= 0) {
          ::close(fd);
          throw TransportError("startup: unexpected or duplicate link from party " + std::to_string(peer));
        }
        links_[static_cast<std::size_t>(peer - 1)]->fd = fd;
        ++accepted;
      }
    } catch (const std::exception& e) {
      accept_error = e.what();
    }
  });

  std::string dial_error;
  try {
    for (PartyId peer = self_ + 1; peer <= parties_; ++peer) {
      const PeerAddress& a = table[static_cast<std::size_t>(peer - 1)];
      const sockaddr_in addr = resolve(a.host, a.port);
      int fd = -1;
      for (;;) {
        fd = ::socket(AF_INET, SOCK_STREAM, 0);
        if (fd < 0) throw TransportError(sys_error("socket"));
        if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) == 0) break;
        ::close(fd);
        fd = -1;
        if (remaining_ms() == 0) {
          throw TransportError("startup: could not connect to party " + std::to_string(peer) + " at " + a.host +
                               ":" + std::to_string(a.port));
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
      }
      set_nodelay(fd);
      const std::uint8_t hello[2] = {kProtocolVersion, static_cast<std::uint8_t>(self_)};
      const auto framed = frame(hello);
      write_all(fd, framed.data(), framed.size());
      links_[static_cast<std::size_t>(peer - 1)]->fd = fd;
    }
  } catch (const std::exception& e) {
    dial_error = e.what();
  }
  acceptor.join();
  if (!dial_error.empty()) throw TransportError(dial_error);
  if (!accept_error.empty()) throw TransportError(accept_error);

  for (PartyId peer = 1; peer <= parties_; ++peer) {
    if (peer == self_) continue;
    Link& link = *links_[static_cast<std::size_t>(peer - 1)];
    link.reader = std::thread([this, peer, fd = link.fd] { reader_loop(peer, fd); });
  }
}

void SocketEndpoint::fail(const std::string& why) {
  std::lock_guard lock(mutex_);
  if (!error_) error_ = why;
  cv_.notify_all();
}

void SocketEndpoint::reader_loop(PartyId peer, int fd) {
  try {
    while (auto payload = read_frame(fd)) {
      if (payload->size() < 6) throw TransportError("protocol error: frame too short for a share");
      Message m;
      m.sender = peer;
      m.receiver = self_;
      const std::size_t tail = payload->size() - 6;
      for (int i = 0; i < 4; ++i) m.session = (m.session << 8) | (*payload)[tail + static_cast<std::size_t>(i)];
      m.round = static_cast<std::uint16_t>(((*payload)[tail + 4] << 8) | (*payload)[tail + 5]);
      m.payload = std::move(*payload);
      std::lock_guard lock(mutex_);
      ++counters_.messages_received;
      inbox_.push_back(std::move(m));
      cv_.notify_all();
    }
  } catch (const std::exception& e) {
    // Protocol errors close the link.
    ::shutdown(fd, SHUT_RDWR);
    fail("link to party " + std::to_string(peer) + ": " + e.what());
  }
}

void SocketEndpoint::send(const Message& message) {
  if (message.sender != self_) throw UsageError("endpoint can only send as its own party");
  if (message.receiver < 1 || message.receiver > parties_ || message.receiver == self_) {
    throw UsageError("unknown receiver " + std::to_string(message.receiver));
  }
  Link& link = *links_[static_cast<std::size_t>(message.receiver - 1)];
  if (link.fd < 0) throw UsageError("endpoint is not connected");
  const auto framed = frame(message.payload);
  {
    std::lock_guard lock(link.write_mutex);
    write_all(link.fd, framed.data(), framed.size());
  }
  std::lock_guard lock(mutex_);
  ++counters_.messages_sent;
  ++counters_.packets_sent;
  counters_.bytes_sent += framed.size();
}

std::optional<Message> SocketEndpoint::receive(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  cv_.wait_for(lock, timeout, [&] { return !inbox_.empty() || error_.has_value(); });
  if (!inbox_.empty()) {
    Message m = std::move(inbox_.front());
    inbox_.pop_front();
    return m;
  }
  if (error_) throw TransportError(*error_);
  return std::nullopt;
}

TransportCounters SocketEndpoint::counters() const {
  std::lock_guard lock(mutex_);
  return counters_;
}

void SocketEndpoint::close() {
  {
    std::lock_guard lock(mutex_);
    if (closed_) return;
    closed_ = true;
  }
  for (auto& link : links_) {
    if (link->fd >= 0) ::shutdown(link->fd, SHUT_WR);
  }
  // Readers exit once the peers half-close too.
  for (auto& link : links_) {
    if (link->reader.joinable()) link->reader.join();
    if (link->fd >= 0) ::close(link->fd);
    link->fd = -1;
  }
  if (listen_fd_ >= 0) ::close(listen_fd_);
  listen_fd_ = -1;
}

std::unique_ptr<SocketEndpoint> socket_transport(PartyId self, const std::vector<PeerAddress>& table,
                                                 const SocketOptions& options) {
  const int parties = static_cast<int>(table.size());
  if (self < 1 || self > parties) throw UsageError("party id not in the peer table");
  const PeerAddress& me = table[static_cast<std::size_t>(self - 1)];
  auto endpoint = std::make_unique<SocketEndpoint>(self, parties, me.host, me.port);
  endpoint->connect_mesh(table, options);
  return endpoint;
}

}  // namespace smc
