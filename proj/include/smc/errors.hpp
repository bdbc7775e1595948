#pragma once

#include <stdexcept>
#include <string>

namespace smc {

// Caller violated an API precondition (mismatched moduli, wrong party, ...).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Mathematically undefined request, e.g. inverting zero.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Malformed or insufficient external input (files, share sets, encodings).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration; the CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Socket backend failures: startup, framing, peer loss.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A packet exhausted its retransmission budget.
class DeliveryFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SessionFailed : public std::runtime_error {
 public:
  SessionFailed(const std::string& what, int round)
      : std::runtime_error(what), round_(round) {}

  int round() const noexcept { return round_; }

 private:
  int round_;
};

}  // namespace smc
