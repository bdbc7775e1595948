#include "smc/sweep.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <json.hpp>

#include "smc/costmodel.hpp"
#include "smc/engine.hpp"
#include "smc/errors.hpp"
#include "smc/program.hpp"
#include "smc/socket_transport.hpp"

#ifndef SMC_DATA_DIR
#define SMC_DATA_DIR "data"
#endif

namespace smc {

using nlohmann::json;

void SweepConfig::validate() const {
  if (peers.empty() || latency_ms.empty() || rate_mbit.empty() || loss.empty() || pf.empty()) {
    throw ConfigError("every sweep list needs at least one value");
  }
  for (int n : peers) {
    if (n < 3 || n > 255) throw ConfigError("peers must be in [3, 255], got " + std::to_string(n));
  }
  for (double l : latency_ms) {
    if (!(l >= 0.0)) throw ConfigError("latency must be non-negative");
  }
  for (double r : rate_mbit) {
    if (!(r > 0.0)) throw ConfigError("rate must be positive");
  }
  for (double p : loss) {
    if (!(p >= 0.0 && p < 1.0)) throw ConfigError("loss must be in [0, 1)");
  }
  for (std::size_t f : pf) {
    if (f == 0) throw ConfigError("pf must be at least 1");
  }
  if (sessions == 0) throw ConfigError("sessions must be at least 1");
  if (repetitions == 0) throw ConfigError("reps must be at least 1");
  if (sessions < *std::max_element(pf.begin(), pf.end())) {
    throw ConfigError("sessions must be at least the largest pf");
  }
  const PrimeModulus m = PrimeModulus::from_decimal(modulus);
  if (m.value() <= (u128{1} << 32)) throw ConfigError("modulus must exceed 2^32");
  if (protocol.empty()) throw ConfigError("protocol must not be empty");
}

namespace {

const json* find_key(const json& j, const std::string& dashed) {
  std::string underscored = dashed;
  std::replace(underscored.begin(), underscored.end(), '-', '_');
  for (const auto& k : {dashed, underscored}) {
    if (auto it = j.find(k); it != j.end()) return &*it;
  }
  return nullptr;
}

template <typename T>
std::vector<T> as_list(const json& v, const std::string& key) {
  try {
    if (v.is_array()) return v.get<std::vector<T>>();
    return {v.get<T>()};
  } catch (const json::exception&) {
    throw ConfigError("bad value for " + key);
  }
}

template <typename T>
T as_scalar(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad value for " + key);
  }
}

}  // namespace

void apply_config_json(SweepConfig& cfg, const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::vector<std::string> known{"peers", "latency-ms", "rate-mbit", "loss", "pf",
                                              "sessions", "reps", "seed", "mode", "protocol",
                                              "grid", "modulus", "state"};
  for (const auto& [key, value] : j.items()) {
    std::string dashed = key;
    std::replace(dashed.begin(), dashed.end(), '_', '-');
    if (std::find(known.begin(), known.end(), dashed) == known.end()) throw ConfigError("unknown config key " + key);
  }
  if (auto v = find_key(j, "peers")) cfg.peers = as_list<int>(*v, "peers");
  if (auto v = find_key(j, "latency-ms")) cfg.latency_ms = as_list<double>(*v, "latency-ms");
  if (auto v = find_key(j, "rate-mbit")) cfg.rate_mbit = as_list<double>(*v, "rate-mbit");
  if (auto v = find_key(j, "loss")) cfg.loss = as_list<double>(*v, "loss");
  if (auto v = find_key(j, "pf")) cfg.pf = as_list<std::size_t>(*v, "pf");
  if (auto v = find_key(j, "sessions")) cfg.sessions = as_scalar<std::size_t>(*v, "sessions");
  if (auto v = find_key(j, "reps")) cfg.repetitions = as_scalar<std::size_t>(*v, "reps");
  if (auto v = find_key(j, "seed")) cfg.seed = as_scalar<std::uint64_t>(*v, "seed");
  if (auto v = find_key(j, "mode")) {
    const auto m = as_scalar<std::string>(*v, "mode");
    if (m == "simulate") cfg.mode = Mode::simulate;
    else if (m == "sockets") cfg.mode = Mode::sockets;
    else throw ConfigError("mode must be simulate or sockets");
  }
  if (auto v = find_key(j, "protocol")) cfg.protocol = as_scalar<std::string>(*v, "protocol");
  if (auto v = find_key(j, "grid")) {
    const auto g = as_scalar<std::string>(*v, "grid");
    if (g == "axes") cfg.grid = Grid::axes;
    else if (g == "cartesian") cfg.grid = Grid::cartesian;
    else throw ConfigError("grid must be axes or cartesian");
  }
  if (auto v = find_key(j, "modulus")) {
    cfg.modulus = v->is_string() ? v->get<std::string>() : std::to_string(as_scalar<std::uint64_t>(*v, "modulus"));
  }
  if (auto v = find_key(j, "state")) cfg.state_file = as_scalar<std::string>(*v, "state");
}

std::vector<SweepCell> sweep_cells(const SweepConfig& cfg) {
  std::vector<SweepCell> cells;
  const SweepCell base{cfg.peers.front(), cfg.latency_ms.front(), cfg.rate_mbit.front(), cfg.loss.front(),
                       cfg.pf.front()};
  if (cfg.grid == Grid::cartesian) {
    for (int n : cfg.peers)
      for (double l : cfg.latency_ms)
        for (double r : cfg.rate_mbit)
          for (double p : cfg.loss)
            for (std::size_t f : cfg.pf) cells.push_back({n, l, r, p, f});
    return cells;
  }
  cells.push_back(base);
  for (std::size_t i = 1; i < cfg.peers.size(); ++i) {
    auto c = base;
    c.n = cfg.peers[i];
    cells.push_back(c);
  }
  for (std::size_t i = 1; i < cfg.latency_ms.size(); ++i) {
    auto c = base;
    c.latency_ms = cfg.latency_ms[i];
    cells.push_back(c);
  }
  for (std::size_t i = 1; i < cfg.rate_mbit.size(); ++i) {
    auto c = base;
    c.rate_mbit = cfg.rate_mbit[i];
    cells.push_back(c);
  }
  for (std::size_t i = 1; i < cfg.loss.size(); ++i) {
    auto c = base;
    c.loss = cfg.loss[i];
    cells.push_back(c);
  }
  for (std::size_t i = 1; i < cfg.pf.size(); ++i) {
    auto c = base;
    c.pf = cfg.pf[i];
    cells.push_back(c);
  }
  return cells;
}

double SweepRow::running_average_m() const {
  if (submissions == 0) return 0.0;
  return static_cast<double>(static_cast<long double>(running_sum) / submissions / kFixedPointScale);
}

double SweepRow::oracle_average_m() const {
  if (submissions == 0) return 0.0;
  return static_cast<double>(static_cast<long double>(oracle_sum) / submissions / kFixedPointScale);
}

const char* const kCsvHeader =
    "n,latency_ms,rate_mbit,loss,pf,sessions,repetition,duration_ms,bytes_per_peer,messages,packets,"
    "retransmissions,failures,predicted_ms";

std::string csv_line(const SweepRow& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%d,%g,%g,%g,%zu,%zu,%zu,%.6f,%.1f,%llu,%llu,%llu,%zu,%.6f", r.cell.n,
                r.cell.latency_ms, r.cell.rate_mbit, r.cell.loss, r.cell.pf, r.sessions, r.repetition, r.duration_ms,
                r.bytes_per_peer, static_cast<unsigned long long>(r.messages),
                static_cast<unsigned long long>(r.packets), static_cast<unsigned long long>(r.retransmissions),
                r.failures, r.predicted_ms);
  return buf;
}

namespace {

struct StateFile {
  std::size_t rows_done = 0;

  static StateFile load(const std::filesystem::path& path) {
    StateFile s;
    std::ifstream in(path);
    if (!in) return s;
    try {
      const json j = json::parse(in);
      s.rows_done = j.value("rows_done", std::size_t{0});
    } catch (const json::exception& e) {
      throw ConfigError("unreadable state file " + path.string() + ": " + e.what());
    }
    return s;
  }
};

void save_state(const std::filesystem::path& path, std::size_t rows_done, std::size_t row, std::size_t sessions_done,
                u128 running_sum, std::uint64_t submissions) {
  const json j{{"rows_done", rows_done},
               {"row", row},
               {"sessions_done", sessions_done},
               {"running_sum", to_decimal(running_sum)},
               {"submissions", submissions}};
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw InputError("cannot write state file " + tmp.string());
    out << j.dump() << '\n';
  }
  std::filesystem::rename(tmp, path);
}

class RowRunner {
 public:
  RowRunner(const SweepConfig& cfg, const std::vector<GpsTrace>& traces, const PrimeModulus& modulus)
      : cfg_(cfg), traces_(traces), modulus_(modulus) {}

  SweepRow run(const SweepCell& cell, std::size_t rep, std::uint64_t row_seed, std::size_t row_index,
               std::size_t rows_done) {
    SweepRow row;
    row.cell = cell;
    row.sessions = cfg_.sessions;
    row.repetition = rep;
    const int n = cell.n;
    const ThresholdConfig tc = ThresholdConfig::for_parties(n);
    const ProtocolProgram program = program_from_name(cfg_.protocol, tc);
    const bool use_case = cfg_.protocol == "sum";
    const bool product = cfg_.protocol == "product";
    const LinkParams link = LinkParams::from_configured(cell.latency_ms, cell.rate_mbit, cell.loss);
    row.predicted_ms = predict_session(program, link, ComputeProfile{}, modulus_).predicted_ms;

    // Encoded contributions of parties 1..n-1.
    std::vector<std::vector<FieldElement>> contrib(static_cast<std::size_t>(n - 1));
    const auto assigned = assign_round_robin(traces_, n - 1);
    for (int p = 1; p < n; ++p) {
      const std::vector<double> d = distances(assigned[static_cast<std::size_t>(p - 1)]);
      auto& c = contrib[static_cast<std::size_t>(p - 1)];
      c.reserve(cfg_.sessions);
      for (std::size_t i = 0; i < cfg_.sessions; ++i) {
        c.push_back(encode_distance(d[(rep * cfg_.sessions + i) % d.size()], modulus_, n, cfg_.sessions));
      }
    }

    const FieldElement zero(0, modulus_);
    FieldElement running = zero;
    std::vector<FieldElement> server_input(cfg_.sessions, zero);
    auto input_of = [&](std::size_t index, PartyId p) -> FieldElement {
      if (p < n) return contrib[static_cast<std::size_t>(p - 1)][index];
      if (product) return FieldElement(1, modulus_);
      server_input[index] = running;
      return running;
    };

    FieldElement oracle = zero;
    std::size_t sessions_done = 0;
    auto on_done = [&](const SessionOutcome& o) {
      ++sessions_done;
      if (!o.ok()) return;
      std::vector<FieldElement> inputs;
      for (PartyId p = 1; p <= n; ++p) {
        inputs.push_back(p < n ? contrib[static_cast<std::size_t>(p - 1)][o.index] : server_input[o.index]);
      }
      if (product) inputs.back() = FieldElement(1, modulus_);
      if (!(evaluate_plain(program, inputs) == *o.result)) row.exact = false;
      if (use_case) {
        running = running + (*o.result - server_input[o.index]);
        for (PartyId p = 1; p < n; ++p) oracle = oracle + contrib[static_cast<std::size_t>(p - 1)][o.index];
        row.submissions += static_cast<std::uint64_t>(n - 1);
        if (cfg_.state_file) {
          save_state(*cfg_.state_file, rows_done, row_index, sessions_done, running.value(), row.submissions);
        }
      }
    };

    SessionBatch batch;
    batch.program = &program;
    batch.sessions = cfg_.sessions;
    batch.pf = cell.pf;
    batch.seed = SeededRng::derive_seed(row_seed, 2);
    batch.inputs = input_of;

    BatchOutcome out;
    std::vector<TransportCounters> per_party;
    if (cfg_.mode == Mode::simulate) {
      SimulatedNetwork net(n, link, SeededRng::derive_seed(row_seed, 1));
      out = run_batch(batch, net, EngineOptions{}, on_done);
      for (PartyId p = 1; p <= n; ++p) per_party.push_back(net.counters(p));
    } else {
      out = run_batch_sockets(batch, SocketOptions{}, on_done, &per_party);
    }

    TransportCounters total;
    for (const auto& c : per_party) total += c;
    row.duration_ms = out.amortized_ms();
    row.bytes_per_peer = static_cast<double>(total.bytes_sent) / n;
    row.messages = total.messages_sent;
    row.packets = total.packets_sent;
    row.retransmissions = total.retransmissions;
    row.failures = out.failures();
    if (use_case) {
      row.running_sum = running.value();
      row.oracle_sum = oracle.value();
      if (row.running_sum != row.oracle_sum) row.exact = false;
    }
    if (!row.exact) row.hard_failure = "results differ from the plaintext evaluation";
    return row;
  }

 private:
  const SweepConfig& cfg_;
  const std::vector<GpsTrace>& traces_;
  const PrimeModulus& modulus_;
};

}  // namespace

SweepSummary run_sweep(const SweepConfig& cfg, const std::vector<GpsTrace>& traces, std::ostream* csv,
                       const RowCallback& on_row) {
  cfg.validate();
  if (traces.empty()) throw InputError("no traces");
  const PrimeModulus modulus = PrimeModulus::from_decimal(cfg.modulus);
  const auto cells = sweep_cells(cfg);
  const std::size_t skip = cfg.state_file ? StateFile::load(*cfg.state_file).rows_done : 0;

  SweepSummary summary;
  RowRunner runner(cfg, traces, modulus);
  if (csv && skip == 0) *csv << kCsvHeader << '\n';
  std::size_t row_index = 0;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (std::size_t rep = 0; rep < cfg.repetitions; ++rep, ++row_index) {
      if (row_index < skip) continue;
      const std::uint64_t row_seed = SeededRng::derive_seed(cfg.seed, c, rep);
      SweepRow row;
      try {
        row = runner.run(cells[c], rep, row_seed, row_index, row_index);
      } catch (const ConfigError&) {
        throw;
      } catch (const std::exception& e) {
        row = SweepRow{};
        row.cell = cells[c];
        row.sessions = cfg.sessions;
        row.repetition = rep;
        row.failures = cfg.sessions;
        row.exact = false;
        row.hard_failure = e.what();
      }
      if (row.hard_failure) ++summary.hard_failures;
      if (csv) *csv << csv_line(row) << '\n' << std::flush;
      if (cfg.state_file) {
        save_state(*cfg.state_file, row_index + 1, row_index, cfg.sessions, row.running_sum, row.submissions);
      }
      if (on_row) on_row(row);
      summary.rows.push_back(std::move(row));
    }
  }
  return summary;
}

std::filesystem::path default_trace_dir() { return std::filesystem::path(SMC_DATA_DIR) / "traces"; }

std::vector<GpsTrace> default_traces() {
  std::error_code ec;
  if (std::filesystem::is_directory(default_trace_dir(), ec)) {
    try {
      return load_trace_dir(default_trace_dir());
    } catch (const InputError&) {
    }
  }
  std::vector<GpsTrace> out;
  for (std::uint64_t s = 1; s <= 5; ++s) out.push_back(synthetic_trace(s, 1200));
  return out;
}

}  // namespace smc
