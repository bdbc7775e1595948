#include "smc/party_session.hpp"

#include <algorithm>
#include <string>

#include "smc/errors.hpp"

namespace smc {

RoundBarrier::RoundBarrier(std::vector<PartyId> expected) : expected_(std::move(expected)) {
  std::sort(expected_.begin(), expected_.end());
}

void RoundBarrier::accept(PartyId sender, Share share) {
  if (!std::binary_search(expected_.begin(), expected_.end(), sender)) {
    throw UsageError("unexpected share from party " + std::to_string(sender));
  }
  if (!arrived_.emplace(sender, std::move(share)).second) {
    throw UsageError("duplicate share from party " + std::to_string(sender));
  }
  ++received_;
}

std::vector<Share> RoundBarrier::shares() const {
  std::vector<Share> out;
  out.reserve(arrived_.size());
  for (const auto& [sender, share] : arrived_) out.push_back(share);
  return out;
}

const Share& RoundBarrier::from(PartyId sender) const {
  auto it = arrived_.find(sender);
  if (it == arrived_.end()) throw UsageError("no share from party " + std::to_string(sender));
  return it->second;
}

PartySession::PartySession(const ProtocolProgram& program, PartyId self, SessionTag session, FieldElement input,
                           std::uint64_t seed, const ComputeProfile& profile)
    : program_(&program),
      cfg_(program.config()),
      self_(self),
      session_(session),
      input_(std::move(input)),
      rng_(seed),
      profile_(&profile),
      wires_(static_cast<std::size_t>(program.wire_count())) {
  if (self < 1 || self > cfg_.n) throw UsageError("party id out of range: " + std::to_string(self));
  int round = 0;
  const auto& steps = program.steps();
  for (int i = 0; i < static_cast<int>(steps.size()); ++i) {
    switch (steps[static_cast<std::size_t>(i)].kind) {
      case StepKind::close:
        actions_.push_back({Action::close_share, i, round});
        actions_.push_back({Action::close_collect, i, round});
        ++round;
        break;
      case StepKind::add_local:
        actions_.push_back({Action::add, i, round});
        break;
      case StepKind::mul_round:
        actions_.push_back({Action::mul_share, i, round});
        actions_.push_back({Action::mul_collect, i, round});
        ++round;
        break;
      case StepKind::open:
        actions_.push_back({Action::open_send, i, round});
        actions_.push_back({Action::open_collect, i, round});
        ++round;
        break;
    }
  }
  if (program.multiplication_rounds() > 0) lambda_ = reduction_coefficients(cfg_, input_.modulus());
}

RoundBarrier& PartySession::barrier(int round) {
  auto it = barriers_.find(round);
  if (it == barriers_.end()) {
    std::vector<PartyId> others;
    for (PartyId p = 1; p <= cfg_.n; ++p) {
      if (p != self_) others.push_back(p);
    }
    it = barriers_.emplace(round, RoundBarrier(std::move(others))).first;
  }
  return it->second;
}

PartySession::Action PartySession::current_action() const {
  if (done()) throw UsageError("session already finished");
  return actions_[next_].action;
}

bool PartySession::ready() const {
  if (done()) return false;
  const Planned& a = actions_[next_];
  switch (a.action) {
    case Action::close_share:
      return turn_granted_;
    case Action::close_collect:
    case Action::mul_collect:
    case Action::open_collect: {
      auto it = barriers_.find(a.round);
      return it != barriers_.end() && it->second.complete();
    }
    default:
      return true;
  }
}

double PartySession::action_cost_ms() const {
  const int n = cfg_.n;
  switch (current_action()) {
    case Action::close_share:
      return profile_->share_generation(n);
    case Action::add:
      return profile_->add_ms;
    case Action::mul_share:
      return profile_->mul_ms + profile_->share_generation(n);
    case Action::mul_collect:
      return profile_->recombine(n);
    case Action::open_collect:
      return profile_->interpolate(n);
    case Action::close_collect:
    case Action::open_send:
      return 0.0;
  }
  return 0.0;
}

std::vector<Message> PartySession::send_to_all(const std::vector<Share>& shares_by_party, int round) {
  std::vector<Message> out;
  out.reserve(static_cast<std::size_t>(cfg_.n - 1));
  for (PartyId p = 1; p <= cfg_.n; ++p) {
    if (p == self_) continue;
    Message m;
    m.sender = self_;
    m.receiver = p;
    m.session = session_;
    m.round = static_cast<std::uint16_t>(round);
    append_share(m.payload, shares_by_party[static_cast<std::size_t>(p - 1)], m.round);
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<Message> PartySession::perform() {
  if (!ready()) throw UsageError("perform() called on a session that is not ready");
  const Planned a = actions_[next_];
  const Step& step = program_->steps()[static_cast<std::size_t>(a.step)];
  const auto self_idx = static_cast<std::size_t>(self_ - 1);
  std::vector<Message> out;

  auto next_wire = [&] {
    return static_cast<std::size_t>(std::find_if(wires_.begin() + cfg_.n, wires_.end(),
                                                 [](const auto& w) { return !w.has_value(); }) -
                                    wires_.begin());
  };

  switch (a.action) {
    case Action::close_share: {
      auto shares = share_polynomial(random_polynomial(input_, cfg_.t, rng_), cfg_.n, session_);
      wires_[self_idx] = shares[self_idx];
      out = send_to_all(shares, a.round);
      break;
    }
    case Action::close_collect: {
      const RoundBarrier& b = barrier(a.round);
      for (PartyId p = 1; p <= cfg_.n; ++p) {
        if (p != self_) wires_[static_cast<std::size_t>(p - 1)] = b.from(p);
      }
      ++rounds_done_;
      break;
    }
    case Action::add:
      wires_[next_wire()] = local_add(*wires_[static_cast<std::size_t>(step.lhs)],
                                      *wires_[static_cast<std::size_t>(step.rhs)]);
      break;
    case Action::mul_share: {
      const Share raw = local_mul_raw(*wires_[static_cast<std::size_t>(step.lhs)],
                                      *wires_[static_cast<std::size_t>(step.rhs)]);
      auto subshares = share_polynomial(random_polynomial(raw.y, cfg_.t, rng_), cfg_.n, session_);
      own_subshare_ = subshares[self_idx];
      out = send_to_all(subshares, a.round);
      break;
    }
    case Action::mul_collect: {
      const RoundBarrier& b = barrier(a.round);
      FieldElement acc = lambda_[self_idx] * own_subshare_->y;
      for (PartyId p = 1; p <= cfg_.n; ++p) {
        if (p != self_) acc = acc + lambda_[static_cast<std::size_t>(p - 1)] * b.from(p).y;
      }
      wires_[next_wire()] = Share{self_, acc, session_};
      own_subshare_.reset();
      ++rounds_done_;
      break;
    }
    case Action::open_send: {
      const Share& mine = *wires_[static_cast<std::size_t>(step.lhs)];
      out = send_to_all(std::vector<Share>(static_cast<std::size_t>(cfg_.n), mine), a.round);
      break;
    }
    case Action::open_collect: {
      std::vector<Share> all = barrier(a.round).shares();
      all.push_back(*wires_[static_cast<std::size_t>(step.lhs)]);
      result_ = reconstruct(all, cfg_);
      ++rounds_done_;
      break;
    }
  }
  barriers_.erase(barriers_.begin(), barriers_.lower_bound(rounds_done_));
  ++next_;
  return out;
}

void PartySession::deliver(const Message& message) {
  if (message.session != session_) throw UsageError("message for another session");
  if (message.receiver != self_) throw UsageError("message for another party");
  if (message.round < rounds_done_) throw UsageError("message for an already completed round");
  const int open_round = program_->communication_rounds() - 1;
  for (auto& decoded : decode_shares(message.payload, input_.modulus())) {
    // Opened shares carry the sender's point, all others the receiver's.
    const int expected_x = decoded.round == open_round ? message.sender : self_;
    if (decoded.share.x != expected_x) throw InputError("share carries an unexpected evaluation point");
    barrier(decoded.round).accept(message.sender, std::move(decoded.share));
  }
}

}  // namespace smc
