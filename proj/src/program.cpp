#include "smc/program.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include "smc/errors.hpp"

namespace smc {

ProtocolProgram::ProtocolProgram(ThresholdConfig cfg, std::vector<Step> steps)
    : cfg_(cfg), steps_(std::move(steps)) {
  cfg_.validate();
  if (steps_.size() < 2) throw UsageError("a program needs at least Close and Open");
  if (steps_.front().kind != StepKind::close) throw UsageError("program must start with Close");
  if (steps_.back().kind != StepKind::open) throw UsageError("program must end with Open");
  for (std::size_t i = 0; i < steps_.size(); ++i) {
    const Step& s = steps_[i];
    switch (s.kind) {
      case StepKind::close:
        if (i != 0) throw UsageError("Close may only appear as the first step");
        wires_ = cfg_.n;
        break;
      case StepKind::add_local:
      case StepKind::mul_round:
        if (s.lhs < 0 || s.lhs >= wires_ || s.rhs < 0 || s.rhs >= wires_) {
          throw UsageError("step " + std::to_string(i) + " uses an undefined wire");
        }
        if (s.kind == StepKind::mul_round) ++mul_rounds_;
        ++wires_;
        break;
      case StepKind::open:
        if (i + 1 != steps_.size()) throw UsageError("Open may only appear as the last step");
        if (s.lhs < 0 || s.lhs >= wires_) throw UsageError("Open targets an undefined wire");
        break;
    }
  }
}

long long ProtocolProgram::messages_per_session() const noexcept {
  const long long n = cfg_.n;
  return static_cast<long long>(communication_rounds()) * (n * n - n);
}

namespace {

ProtocolProgram fold_program(const ThresholdConfig& cfg, const std::vector<StepKind>& folds) {
  std::vector<Step> steps;
  steps.push_back(Step{StepKind::close});
  int acc = 0;
  int next_wire = cfg.n;
  for (std::size_t i = 0; i < folds.size(); ++i) {
    steps.push_back(Step{folds[i], acc, static_cast<int>(i) + 1});
    acc = next_wire++;
  }
  steps.push_back(Step{StepKind::open, acc});
  return ProtocolProgram(cfg, std::move(steps));
}

}  // namespace

ProtocolProgram build_sum_program(const ThresholdConfig& cfg) {
  cfg.validate();
  return fold_program(cfg, std::vector<StepKind>(static_cast<std::size_t>(cfg.n - 1), StepKind::add_local));
}

ProtocolProgram build_product_program(const ThresholdConfig& cfg) {
  cfg.validate();
  return fold_program(cfg, std::vector<StepKind>(static_cast<std::size_t>(cfg.n - 1), StepKind::mul_round));
}

ProtocolProgram parse_plan(std::string_view text, const ThresholdConfig& cfg) {
  cfg.validate();
  std::vector<std::string> words;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  std::vector<int> line_of;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream tok(line);
    std::string word, extra;
    if (!(tok >> word)) continue;
    if (tok >> extra) throw InputError("plan line " + std::to_string(line_no) + ": unexpected '" + extra + "'");
    if (word != "close" && word != "add" && word != "mul" && word != "open") {
      throw InputError("plan line " + std::to_string(line_no) + ": unknown step '" + word + "'");
    }
    words.push_back(word);
    line_of.push_back(line_no);
  }
  if (words.size() < 2 || words.front() != "close" || words.back() != "open") {
    throw InputError("plan must start with 'close' and end with 'open'");
  }
  std::vector<StepKind> folds;
  for (std::size_t i = 1; i + 1 < words.size(); ++i) {
    if (words[i] == "close" || words[i] == "open") {
      throw InputError("plan line " + std::to_string(line_of[i]) + ": '" + words[i] + "' only allowed at the ends");
    }
    folds.push_back(words[i] == "add" ? StepKind::add_local : StepKind::mul_round);
  }
  const auto wanted = static_cast<std::size_t>(cfg.n - 1);
  if (folds.size() > wanted) {
    throw InputError("plan folds " + std::to_string(folds.size()) + " inputs but only " + std::to_string(wanted) +
                     " remain for " + std::to_string(cfg.n) + " parties");
  }
  if (folds.empty()) throw InputError("plan needs at least one add or mul line");
  while (folds.size() < wanted) folds.push_back(folds.back());
  return fold_program(cfg, folds);
}

ProtocolProgram program_from_name(const std::string& name, const ThresholdConfig& cfg) {
  if (name == "sum") return build_sum_program(cfg);
  if (name == "product") return build_product_program(cfg);
  std::ifstream file(name);
  if (!file) throw ConfigError("protocol must be 'sum', 'product' or a readable plan file: " + name);
  std::stringstream buf;
  buf << file.rdbuf();
  return parse_plan(buf.str(), cfg);
}

FieldElement evaluate_plain(const ProtocolProgram& program, std::span<const FieldElement> inputs) {
  const int n = program.config().n;
  if (static_cast<int>(inputs.size()) != n) throw UsageError("expected one input per party");
  std::vector<FieldElement> wires(inputs.begin(), inputs.end());
  for (const Step& s : program.steps()) {
    switch (s.kind) {
      case StepKind::close:
        break;
      case StepKind::add_local:
        wires.push_back(wires[static_cast<std::size_t>(s.lhs)] + wires[static_cast<std::size_t>(s.rhs)]);
        break;
      case StepKind::mul_round:
        wires.push_back(wires[static_cast<std::size_t>(s.lhs)] * wires[static_cast<std::size_t>(s.rhs)]);
        break;
      case StepKind::open:
        return wires[static_cast<std::size_t>(s.lhs)];
    }
  }
  throw UsageError("program has no Open step");
}

namespace {

template <typename F>
double time_ms(int iterations, F&& body) {
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < iterations; ++i) body();
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(stop - start).count() / iterations;
}

}  // namespace

ComputeProfile measure_compute_profile(const PrimeModulus& modulus, int n, int iterations) {
  SeededRng rng(1);
  const int small = 3;
  const int large = std::max(n, 9);
  FieldElement sink(0, modulus);

  auto share_cost = [&](int parties) {
    const ThresholdConfig cfg = ThresholdConfig::for_parties(parties);
    return time_ms(iterations, [&] {
      auto shares = share_secret(fe_random(rng, modulus), cfg, rng);
      sink = sink + shares.back().y;
    });
  };
  auto interp_cost = [&](int parties) {
    const ThresholdConfig cfg = ThresholdConfig::for_parties(parties);
    const auto shares = share_secret(FieldElement(42, modulus), cfg, rng);
    return time_ms(iterations, [&] { sink = sink + reconstruct(shares, cfg); });
  };

  ComputeProfile p;
  const double s_small = share_cost(small), s_large = share_cost(large);
  p.share_per_party_ms = std::max(0.0, (s_large - s_small) / (large - small));
  p.share_base_ms = std::max(0.0, s_small - p.share_per_party_ms * small);
  const double i_small = interp_cost(small), i_large = interp_cost(large);
  p.interpolate_per_share_ms = std::max(0.0, (i_large - i_small) / (large - small));
  p.interpolate_base_ms = std::max(0.0, i_small - p.interpolate_per_share_ms * small);

  const FieldElement a = fe_random(rng, modulus), b = fe_random(rng, modulus);
  p.add_ms = time_ms(iterations * 10, [&] { sink = sink + a + b; });
  p.mul_ms = time_ms(iterations * 10, [&] { sink = sink + a * b; });
  const auto lambda = reduction_coefficients(ThresholdConfig::for_parties(large), modulus);
  const double r_large = time_ms(iterations, [&] {
    FieldElement acc(0, modulus);
    for (const auto& l : lambda) acc = acc + l * a;
    sink = sink + acc;
  });
  p.recombine_base_ms = 0.0;
  p.recombine_per_party_ms = r_large / large;
  volatile auto observed = static_cast<std::uint64_t>(sink.value());
  (void)observed;
  return p;
}

}  // namespace smc
