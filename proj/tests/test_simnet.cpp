#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "smc/errors.hpp"
#include "smc/simnet.hpp"

using namespace smc;

namespace {

Message msg(PartyId from, PartyId to, SessionTag session, std::size_t bytes, std::uint16_t round = 0) {
  Message m;
  m.sender = from;
  m.receiver = to;
  m.session = session;
  m.round = round;
  m.payload.assign(bytes, 0xab);
  return m;
}

// Wire time of one packet carrying `payload` bytes plus frame and headers.
double ser(double rate_bps, std::size_t payload) { return (payload + 4 + 54) * 8.0 / rate_bps * 1000.0; }

}  // namespace

TEST_CASE("link parameters") {
  const auto p = LinkParams::from_configured(16, 100, 0.05);
  CHECK(p.one_way_latency_ms == 8.0);
  CHECK(p.rate_bps == 1e8);
  CHECK(p.loss_prob == 0.05);
  CHECK(p.serialization_ms(1250) == doctest::Approx(0.1));
  CHECK(p.packets_for(1) == 1);
  CHECK(p.packets_for(1460) == 1);
  CHECK(p.packets_for(1461) == 2);
  CHECK_THROWS_AS(LinkParams::from_configured(-1, 100, 0), UsageError);
  CHECK_THROWS_AS(LinkParams::from_configured(0, 0, 0), UsageError);
  CHECK_THROWS_AS(LinkParams::from_configured(0, 100, 1.0), UsageError);
  LinkParams inf;
  inf.rate_bps = std::numeric_limits<double>::infinity();
  CHECK(inf.serialization_ms(1500) == 0.0);
}

TEST_CASE("transfer time") {
  LinkParams p = LinkParams::from_configured(20, 8, 0);  // d = 10 ms, 1 byte = 1 us
  CHECK(transfer_time(100, p) == doctest::Approx(10 + 0.154));
  // Three packets, each after the previous acknowledgement.
  CHECK(transfer_time(3000, p) == doctest::Approx(50 + (1460 + 54) * 2 * 0.001 + (80 + 54) * 0.001));
  CHECK_THROWS_AS(transfer_time(0, p), UsageError);
}

TEST_CASE("retransmission timeout doubles up to 8x") {
  const auto p = LinkParams::from_configured(16, 1000, 0);
  CHECK(retransmission_timeout_ms(p, 0) == 17.0);
  CHECK(retransmission_timeout_ms(p, 1) == 34.0);
  CHECK(retransmission_timeout_ms(p, 2) == 68.0);
  CHECK(retransmission_timeout_ms(p, 3) == 136.0);
  CHECK(retransmission_timeout_ms(p, 9) == 136.0);
}

TEST_CASE("lossy transmit is geometric") {
  for (double loss : {0.0, 0.01, 0.05, 0.10, 0.5}) {
    const auto p = LinkParams::from_configured(0, 1000, loss);
    SeededRng rng(9);
    const int packets = 100000;
    long long total = 0;
    for (int i = 0; i < packets; ++i) total += lossy_transmit(p, rng);
    CHECK(static_cast<double>(total) / packets == doctest::Approx(1.0 / (1.0 - loss)).epsilon(0.02));
  }
  const auto hopeless = LinkParams::from_configured(0, 1000, 0.999);
  SeededRng rng(1);
  CHECK_THROWS_AS(
      [&] {
        for (;;) lossy_transmit(hopeless, rng);
      }(),
      DeliveryFailed);
}

TEST_CASE("single message timing and counters") {
  const auto p = LinkParams::from_configured(20, 8, 0);
  SimulatedNetwork net(3, p, 1);
  double delivered_at = -1, acked_at = -1;
  net.on_delivery([&](const Message& m) {
    CHECK(m.receiver == 2);
    delivered_at = net.now();
  });
  net.on_acknowledged([&](const Message&) { acked_at = net.now(); });
  net.send(msg(1, 2, 7, 15));
  net.run_until_idle();
  CHECK(delivered_at == doctest::Approx(10 + ser(8e6, 15)));
  CHECK(acked_at == doctest::Approx(20 + ser(8e6, 15)));
  const auto& c = net.counters(1);
  CHECK(c.messages_sent == 1);
  CHECK(c.packets_sent == 1);
  CHECK(c.bytes_sent == 15 + 4 + 54);
  CHECK(net.counters(2).messages_received == 1);
  CHECK(net.counters(2).acks_sent == 1);
  CHECK(net.session_counters(7)[0].messages_sent == 1);
  CHECK(net.session_counters(99).empty());
}

TEST_CASE("multi-packet messages wait for acknowledgements") {
  const auto p = LinkParams::from_configured(20, 8, 0);
  SimulatedNetwork net(2, p, 1);
  double delivered_at = -1;
  net.on_delivery([&](const Message&) { delivered_at = net.now(); });
  net.send(msg(1, 2, 1, 2996));  // 3000 bytes framed, three packets
  net.run_until_idle();
  CHECK(delivered_at == doctest::Approx(transfer_time(3000, p)));
  CHECK(net.counters(1).packets_sent == 3);
  CHECK(net.counters(1).bytes_sent == 3000 + 3 * 54);
}

TEST_CASE("links are FIFO transmitters") {
  const auto p = LinkParams::from_configured(0, 8, 0);
  SimulatedNetwork net(3, p, 1);
  std::vector<double> at;
  net.on_delivery([&](const Message&) { at.push_back(net.now()); });
  net.send(msg(1, 2, 1, 96));
  net.send(msg(1, 2, 2, 96));
  net.send(msg(1, 3, 3, 96));  // other link, not queued behind
  net.run_until_idle();
  REQUIRE(at.size() == 3);
  CHECK(at[0] == doctest::Approx(0.154));
  CHECK(at[1] == doctest::Approx(0.154));
  CHECK(at[2] == doctest::Approx(0.308));
}

TEST_CASE("same-session messages combine, different sessions do not") {
  const auto p = LinkParams::from_configured(10, 1000, 0);
  SimulatedNetwork net(2, p, 1);
  int delivered = 0;
  net.on_delivery([&](const Message&) { ++delivered; });
  net.send(msg(1, 2, 1, 15, 0));
  net.send(msg(1, 2, 1, 15, 1));
  net.run_until_idle();
  CHECK(delivered == 2);
  CHECK(net.counters(1).messages_sent == 2);
  CHECK(net.counters(1).packets_sent == 1);
  CHECK(net.counters(1).combined_messages == 1);

  SimulatedNetwork other(2, p, 1);
  other.send(msg(1, 2, 1, 15));
  other.send(msg(1, 2, 2, 15));
  other.run_until_idle();
  CHECK(other.counters(1).packets_sent == 2);
  CHECK(other.counters(1).combined_messages == 0);
}

TEST_CASE("window limits units in flight") {
  auto p = LinkParams::from_configured(10, 1000, 0);
  p.window_units = 2;
  SimulatedNetwork net(2, p, 1);
  std::vector<double> at;
  net.on_delivery([&](const Message&) { at.push_back(net.now()); });
  for (SessionTag s = 1; s <= 3; ++s) net.send(msg(1, 2, s, 15));
  net.run_until_idle();
  REQUIRE(at.size() == 3);
  const double t = ser(1e9, 15);
  CHECK(at[0] == doctest::Approx(5 + t));
  CHECK(at[1] == doctest::Approx(5 + 2 * t));
  // Third unit waits for the first acknowledgement.
  CHECK(at[2] == doctest::Approx(10 + t + t + 5));
}

TEST_CASE("a single loss costs one timeout") {
  const auto p = LinkParams::from_configured(16, 1000, 0);
  SimulatedNetwork net(2, p, 1);
  net.set_loss_override([](PartyId, PartyId, SessionTag, std::uint64_t, int, int attempt) { return attempt == 0; });
  double at = -1;
  net.on_delivery([&](const Message&) { at = net.now(); });
  net.send(msg(1, 2, 1, 15));
  net.run_until_idle();
  const double t = ser(1e9, 15);
  CHECK(at == doctest::Approx(t + 17 + t + 8));
  CHECK(net.counters(1).retransmissions == 1);
  CHECK(net.counters(1).packets_sent == 2);
  CHECK(net.distinct_packets() == 1);
}

TEST_CASE("undeliverable units are reported") {
  const auto p = LinkParams::from_configured(0, 1000, 0);
  SimulatedNetwork net(2, p, 1);
  net.set_loss_override([](PartyId, PartyId, SessionTag, std::uint64_t, int, int) { return true; });
  std::vector<std::pair<double, DeliveryFailure>> failures;
  net.on_failure([&](const Message&, DeliveryFailure why) { failures.emplace_back(net.now(), why); });
  net.on_delivery([](const Message&) { FAIL("lost packets must not arrive"); });
  net.send(msg(1, 2, 1, 15));
  net.run_until_idle();
  REQUIRE(failures.size() == 1);
  CHECK(failures[0].second == DeliveryFailure::timeout);
  CHECK(failures[0].first == doctest::Approx(net.delivery_deadline_ms(1, 2, 15)));
  CHECK(net.delivery_deadline_ms(1, 2, 15) == doctest::Approx(10 * (1 + ser(1e9, 15))));
  CHECK(net.counters(1).packets_sent == kRetransmissionCap);

  SimulatedNetwork capped(2, p, 1);
  capped.set_deadline_factor(1e9);
  capped.set_loss_override([](PartyId, PartyId, SessionTag, std::uint64_t, int, int) { return true; });
  std::vector<DeliveryFailure> why;
  capped.on_failure([&](const Message&, DeliveryFailure w) { why.push_back(w); });
  capped.send(msg(1, 2, 1, 15));
  capped.run_until_idle();
  REQUIRE(why.size() == 1);
  CHECK(why[0] == DeliveryFailure::retransmission_cap);
}

TEST_CASE("send errors") {
  SimulatedNetwork net(3, LinkParams{}, 1);
  CHECK_THROWS_AS(net.send(msg(1, 1, 1, 15)), UsageError);
  CHECK_THROWS_AS(net.send(msg(1, 4, 1, 15)), UsageError);
  CHECK_THROWS_AS(net.send(msg(0, 2, 1, 15)), UsageError);
  CHECK_THROWS_AS(net.send(msg(1, 2, 1, 0)), UsageError);
  CHECK_THROWS_AS(SimulatedNetwork(1, LinkParams{}, 1), UsageError);
  CHECK_THROWS_AS(net.counters(9), UsageError);
}

TEST_CASE("per-link parameters and scheduled timers") {
  SimulatedNetwork net(3, LinkParams::from_configured(0, 1000, 0), 1);
  auto slow = LinkParams::from_configured(60, 1000, 0);
  net.set_link(1, 3, slow);
  CHECK(net.link(1, 3).one_way_latency_ms == 30.0);
  CHECK(net.link(3, 1).one_way_latency_ms == 0.0);
  std::vector<int> order;
  net.schedule_at(5.0, [&] { order.push_back(2); });
  net.schedule_at(1.0, [&] { order.push_back(1); });
  net.schedule_after(5.0, [&] { order.push_back(3); });
  net.run_until_idle();
  CHECK(order == std::vector<int>{1, 2, 3});
  CHECK(net.now() == 5.0);
  CHECK_THROWS_AS(net.schedule_at(1.0, [] {}), UsageError);
}

TEST_CASE("identical seeds replay identical event logs") {
  auto run = [](std::uint64_t seed) {
    SimulatedNetwork net(4, LinkParams::from_configured(16, 10, 0.2), seed);
    net.record_events(true);
    for (PartyId a = 1; a <= 4; ++a)
      for (PartyId b = 1; b <= 4; ++b)
        if (a != b) net.send(msg(a, b, static_cast<SessionTag>(a), 3000));
    net.run_until_idle();
    return net.event_log();
  };
  const auto a = run(5), b = run(5), c = run(6);
  CHECK(a == b);
  CHECK_FALSE(a == c);
  CHECK(a.size() > 20);
}

TEST_CASE("simulated loss inflation matches the geometric mean") {
  for (double loss : {0.01, 0.05, 0.10}) {
    SimulatedNetwork net(2, LinkParams::from_configured(0, 1000, loss), 3);
    for (SessionTag s = 0; s < 20000; ++s) {
      net.send(msg(1, 2, s, 15));
      if (s % 10 == 9) net.run_until_idle();
    }
    net.run_until_idle();
    const double mean = static_cast<double>(net.counters(1).packets_sent) / static_cast<double>(net.distinct_packets());
    CHECK(mean == doctest::Approx(1.0 / (1.0 - loss)).epsilon(0.05));
  }
}
