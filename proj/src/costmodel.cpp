#include "smc/costmodel.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "smc/errors.hpp"

namespace smc {

DurationMatrix::DurationMatrix(int n, double fill)
    : n_(n), cells_(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), fill) {
  if (n < 2) throw UsageError("duration matrix needs at least two parties");
}

std::size_t DurationMatrix::index(int from, int to) const {
  if (from < 0 || from >= n_ || to < 0 || to >= n_) throw UsageError("duration matrix index out of range");
  return static_cast<std::size_t>(from) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(to);
}

double round_comm_cost(const DurationMatrix& m) {
  double worst = 0.0;
  for (int k = 0; k < m.size(); ++k) {
    for (int l = 0; l < m.size(); ++l) {
      if (k != l) worst = std::max(worst, m(k, l));
    }
  }
  return worst;
}

double naive_round_comm_cost(const DurationMatrix& m) {
  double sum = 0.0;
  for (int k = 0; k < m.size(); ++k) {
    for (int l = 0; l < m.size(); ++l) {
      if (k != l) sum += m(k, l);
    }
  }
  return sum;
}

void CostParams::validate() const {
  if (comp_costs.empty()) throw UsageError("cost model needs at least one computation step");
  if (comm_cost < 0.0) throw UsageError("communication cost must be non-negative");
  if (link_matrix.size() != n) throw UsageError("link matrix does not match party count");
}

double total_cost(const CostParams& params) {
  params.validate();
  const double comp = std::accumulate(params.comp_costs.begin(), params.comp_costs.end(), 0.0);
  return comp + static_cast<double>(params.steps() - 1) * params.comm_cost;
}

long long phase_message_count(Phase phase, int n) {
  if (n < 2) throw UsageError("need at least two parties");
  if (phase == Phase::add) return 0;
  return static_cast<long long>(n) * n - n;
}

long long product_message_total(int n) {
  if (n < 2) throw UsageError("need at least two parties");
  return static_cast<long long>(n + 1) * phase_message_count(Phase::close, n);
}

double ttp_total_cost(const TtpModel& model) {
  if (model.upload_delay_ms < 0.0 || model.download_delay_ms < 0.0) throw UsageError("delays must be non-negative");
  return model.upload_delay_ms + model.download_delay_ms;
}

std::pair<double, double> latency_interval(int n, double latency_ms) {
  if (n < 2) throw UsageError("need at least two parties");
  if (latency_ms < 0.0) throw UsageError("latency must be non-negative");
  return {n * latency_ms, 3.0 * n * latency_ms};
}

double loss_inflation(double p) {
  if (!(p >= 0.0 && p < 1.0)) throw DomainError("loss probability must be in [0, 1), got " + std::to_string(p));
  return 1.0 / (1.0 - p);
}

CostParams session_cost_params(const ProtocolProgram& program, const LinkParams& link,
                               const ComputeProfile& compute, const PrimeModulus& modulus) {
  const int n = program.config().n;
  const double message = transfer_time(share_encoding_size(modulus) + kFrameHeaderBytes, link);

  std::vector<double> comps{0.0};
  auto comp = [&](double c) { comps.back() += c; };
  auto comm = [&] { comps.push_back(0.0); };

  for (const Step& step : program.steps()) {
    switch (step.kind) {
      case StepKind::close:
        for (int sender = 1; sender <= n; ++sender) {
          comp(compute.share_generation(n));
          comm();
          if (sender < n) comm();  // acknowledgement before the next sender
        }
        break;
      case StepKind::add_local:
        comp(compute.add_ms);
        break;
      case StepKind::mul_round:
        comp(compute.mul_ms + compute.share_generation(n));
        comm();
        comp(compute.recombine(n));
        break;
      case StepKind::open:
        comm();
        comp(compute.interpolate(n));
        break;
    }
  }

  CostParams params{n, std::move(comps), 0.0, DurationMatrix::uniform(n, message)};
  params.comm_cost = round_comm_cost(params.link_matrix);
  return params;
}

SessionPrediction predict_session(const ProtocolProgram& program, const LinkParams& link,
                                  const ComputeProfile& compute, const PrimeModulus& modulus) {
  CostParams params = session_cost_params(program, link, compute, modulus);
  const double base_comm = params.comm_cost;
  const double additive = naive_round_comm_cost(params.link_matrix);
  params.comm_cost = base_comm * loss_inflation(link.loss_prob);
  const double predicted = total_cost(params);
  params.comm_cost = additive;
  const double naive = total_cost(params);
  const double ttp = ttp_total_cost(TtpModel{program.config().n, base_comm, base_comm});
  return SessionPrediction{predicted, naive, ttp};
}

}  // namespace smc
