#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>

#include "smc/errors.hpp"
#include "smc/party_session.hpp"

using namespace smc;

namespace {

FieldElement fe(std::uint64_t v, const PrimeModulus& m) { return FieldElement(v, m); }

struct LoopResult {
  std::vector<FieldElement> results;
  std::map<int, int> messages_per_round;
  int max_round_spread = 0;
};

// Drives all parties of one session through an in-memory FIFO. `order`
// picks which queued message is delivered next, to shuffle arrivals.
LoopResult run_in_memory(const ProtocolProgram& program, const std::vector<FieldElement>& inputs,
                         std::uint64_t seed, SeededRng* shuffle = nullptr) {
  const int n = program.config().n;
  const ComputeProfile profile;
  std::vector<std::unique_ptr<PartySession>> parties;
  for (PartyId p = 1; p <= n; ++p) {
    parties.push_back(std::make_unique<PartySession>(program, p, 5, inputs[static_cast<std::size_t>(p - 1)],
                                                     SeededRng::derive_seed(seed, 0, static_cast<std::uint64_t>(p)),
                                                     profile));
    parties.back()->grant_input_turn();
  }
  LoopResult out;
  std::deque<Message> wire;
  for (;;) {
    bool progressed = false;
    for (auto& ps : parties) {
      while (!ps->done() && ps->ready()) {
        for (auto& m : ps->perform()) {
          ++out.messages_per_round[m.round];
          wire.push_back(std::move(m));
        }
        progressed = true;
      }
    }
    int lo = 1 << 30, hi = 0;
    for (auto& ps : parties) {
      lo = std::min(lo, ps->round_index());
      hi = std::max(hi, ps->round_index());
    }
    out.max_round_spread = std::max(out.max_round_spread, hi - lo);
    if (wire.empty()) {
      if (!progressed) break;
      continue;
    }
    std::size_t pick = shuffle ? static_cast<std::size_t>(shuffle->below(wire.size())) : 0;
    Message m = std::move(wire[pick]);
    wire.erase(wire.begin() + static_cast<std::ptrdiff_t>(pick));
    parties[static_cast<std::size_t>(m.receiver - 1)]->deliver(m);
  }
  for (auto& ps : parties) {
    REQUIRE(ps->done());
    out.results.push_back(*ps->result());
  }
  return out;
}

}  // namespace

TEST_CASE("sum program shape") {
  for (int n = 3; n <= 15; ++n) {
    const auto prog = build_sum_program(ThresholdConfig::for_parties(n));
    CHECK(prog.communication_rounds() == 2);
    CHECK(prog.multiplication_rounds() == 0);
    CHECK(prog.step_count() == n + 1);
    CHECK(prog.messages_per_session() == 2LL * (n * n - n));
  }
  CHECK(build_sum_program(ThresholdConfig::for_parties(3)).messages_per_session() == 12);
  CHECK(build_sum_program(ThresholdConfig::for_parties(5)).messages_per_session() == 40);
}

TEST_CASE("product program shape") {
  CHECK(build_product_program(ThresholdConfig::for_parties(3)).communication_rounds() == 4);
  CHECK(build_product_program(ThresholdConfig::for_parties(4)).messages_per_session() == 60);
  for (int n = 3; n <= 9; ++n) {
    const auto prog = build_product_program(ThresholdConfig::for_parties(n));
    CHECK(prog.communication_rounds() == n + 1);
    CHECK(prog.messages_per_session() == static_cast<long long>(n + 1) * (n * n - n));
  }
}

TEST_CASE("program validation") {
  const auto cfg = ThresholdConfig::for_parties(3);
  CHECK_THROWS_AS(ProtocolProgram(cfg, {Step{StepKind::open, 0}}), UsageError);
  CHECK_THROWS_AS(ProtocolProgram(cfg, {Step{StepKind::close}, Step{StepKind::add_local, 0, 1}}), UsageError);
  CHECK_THROWS_AS(ProtocolProgram(cfg, {Step{StepKind::close}, Step{StepKind::add_local, 0, 7}, Step{StepKind::open, 3}}),
                  UsageError);
  CHECK_NOTHROW(ProtocolProgram(cfg, {Step{StepKind::close}, Step{StepKind::open, 2}}));
}

TEST_CASE("plan parsing") {
  const auto cfg5 = ThresholdConfig::for_parties(5);
  const auto sum = parse_plan("close\nadd\nopen\n", cfg5);
  CHECK(sum.communication_rounds() == 2);
  CHECK(sum.step_count() == 6);
  const auto mixed = parse_plan("# comment\nclose\n  mul  # first fold\nadd\nopen\n", cfg5);
  CHECK(mixed.multiplication_rounds() == 1);
  const PrimeModulus p(97);
  const std::vector<FieldElement> in{fe(2, p), fe(3, p), fe(4, p), fe(5, p), fe(6, p)};
  // ((2*3)+4)+5)+6
  CHECK(evaluate_plain(mixed, in).value() == 21);
  CHECK_THROWS_AS(parse_plan("add\nopen", cfg5), InputError);
  CHECK_THROWS_AS(parse_plan("close\nadd", cfg5), InputError);
  CHECK_THROWS_AS(parse_plan("close\nsub\nopen", cfg5), InputError);
  CHECK_THROWS_AS(parse_plan("close\nadd add\nopen", cfg5), InputError);
  CHECK_THROWS_AS(parse_plan("close\nadd\nadd\nadd\nadd\nadd\nopen", cfg5), InputError);

  const auto path = std::filesystem::temp_directory_path() / "smc_plan_test.txt";
  {
    std::ofstream f(path);
    f << "close\nmul\nopen\n";
  }
  CHECK(program_from_name(path.string(), cfg5).multiplication_rounds() == 4);
  std::filesystem::remove(path);
  CHECK(program_from_name("sum", cfg5).communication_rounds() == 2);
  CHECK(program_from_name("product", cfg5).communication_rounds() == 6);
  CHECK_THROWS_AS(program_from_name("/nonexistent/plan", cfg5), ConfigError);
}

TEST_CASE("plaintext evaluation") {
  const PrimeModulus p(97);
  const auto cfg = ThresholdConfig::for_parties(3);
  const std::vector<FieldElement> in{fe(2, p), fe(3, p), fe(4, p)};
  CHECK(evaluate_plain(build_product_program(cfg), in).value() == 24);
  CHECK(evaluate_plain(build_sum_program(cfg), in).value() == 9);
  CHECK_THROWS_AS(evaluate_plain(build_sum_program(cfg), std::vector<FieldElement>{fe(1, p)}), UsageError);
}

TEST_CASE("round barrier") {
  const auto m = PrimeModulus::mersenne61();
  RoundBarrier b({1, 3});
  CHECK_FALSE(b.complete());
  CHECK(b.outstanding() == 2);
  b.accept(3, Share{2, fe(30, m), 0});
  CHECK_THROWS_AS(b.accept(3, Share{2, fe(31, m), 0}), UsageError);
  CHECK_THROWS_AS(b.accept(2, Share{2, fe(31, m), 0}), UsageError);
  b.accept(1, Share{2, fe(10, m), 0});
  CHECK(b.complete());
  const auto shares = b.shares();
  REQUIRE(shares.size() == 2);
  CHECK(shares[0].y.value() == 10);
  CHECK(shares[1].y.value() == 30);
  CHECK(b.from(3).y.value() == 30);

  RoundBarrier empty({});
  CHECK(empty.complete());
}

TEST_CASE("sessions in memory: sum inputs 3,4,5") {
  const auto m = PrimeModulus::mersenne61();
  const auto prog = build_sum_program(ThresholdConfig::for_parties(3));
  const auto r = run_in_memory(prog, {fe(3, m), fe(4, m), fe(5, m)}, 1);
  for (const auto& v : r.results) CHECK(v.value() == 12);
  CHECK(r.messages_per_round.at(0) == 6);
  CHECK(r.messages_per_round.at(1) == 6);
  const auto zero = run_in_memory(prog, {fe(0, m), fe(0, m), fe(0, m)}, 2);
  for (const auto& v : zero.results) CHECK(v.is_zero());
}

TEST_CASE("sessions in memory: product with a zero input") {
  const auto m = PrimeModulus::mersenne61();
  const auto prog = build_product_program(ThresholdConfig::for_parties(4));
  const auto r = run_in_memory(prog, {fe(7, m), fe(0, m), fe(9, m), fe(11, m)}, 3);
  for (const auto& v : r.results) CHECK(v.is_zero());
  CHECK(r.messages_per_round.size() == 5);
  for (const auto& [round, count] : r.messages_per_round) CHECK(count == 12);
}

TEST_CASE("oracle equivalence under shuffled delivery") {
  const auto m = PrimeModulus::mersenne61();
  SeededRng gen(77);
  for (int n = 3; n <= 7; ++n) {
    const auto cfg = ThresholdConfig::for_parties(n);
    for (const auto& prog : {build_sum_program(cfg), build_product_program(cfg),
                             parse_plan("close\nmul\nadd\nopen", cfg)}) {
      for (int trial = 0; trial < 40; ++trial) {
        std::vector<FieldElement> in;
        for (int p = 0; p < n; ++p) in.push_back(fe_random(gen, m));
        SeededRng shuffle(gen.next_u64());
        const auto r = run_in_memory(prog, in, gen.next_u64(), &shuffle);
        const auto expected = evaluate_plain(prog, in);
        for (const auto& v : r.results) REQUIRE(v == expected);
        // A party never runs more than one round ahead of the slowest.
        CHECK(r.max_round_spread <= 1);
      }
    }
  }
}

TEST_CASE("session input checks") {
  const auto m = PrimeModulus::mersenne61();
  const auto prog = build_sum_program(ThresholdConfig::for_parties(3));
  const ComputeProfile profile;
  PartySession ps(prog, 1, 9, fe(1, m), 1, profile);
  CHECK_FALSE(ps.ready());  // needs its input turn
  ps.grant_input_turn();
  CHECK(ps.ready());
  CHECK(ps.current_action() == PartySession::Action::close_share);
  CHECK(ps.action_cost_ms() == doctest::Approx(profile.share_generation(3)));
  const auto out = ps.perform();
  REQUIRE(out.size() == 2);
  CHECK(out[0].receiver == 2);
  CHECK(out[1].receiver == 3);
  CHECK(out[0].payload.size() == share_encoding_size(m));

  Message wrong = out[0];
  wrong.session = 10;
  CHECK_THROWS_AS(ps.deliver(wrong), UsageError);
  // A share meant for party 2 delivered to party 1.
  Message misrouted = out[0];
  misrouted.sender = 2;
  misrouted.receiver = 1;
  CHECK_THROWS_AS(ps.deliver(misrouted), InputError);
}

TEST_CASE("compute profile") {
  const ComputeProfile p;
  CHECK(p.share_generation(3) == doctest::Approx(0.19));
  CHECK(p.recombine(3) == doctest::Approx(0.08));
  CHECK(p.interpolate(3) == doctest::Approx(0.19));
  const auto measured = measure_compute_profile(PrimeModulus::mersenne61(), 5, 50);
  CHECK(measured.share_generation(5) > 0.0);
  CHECK(measured.interpolate(5) > 0.0);
}
