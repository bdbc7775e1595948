#include "smc/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <json.hpp>
#include <sstream>

#include "smc/costmodel.hpp"
#include "smc/errors.hpp"
#include "smc/sharing.hpp"

namespace smc {

using nlohmann::json;

std::vector<SweepRow> read_results_csv(std::istream& in) {
  std::vector<SweepRow> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.rfind("n,", 0) == 0) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
    if (cols.size() != 14) throw InputError("results line " + std::to_string(line_no) + ": expected 14 columns");
    try {
      SweepRow r;
      r.cell.n = std::stoi(cols[0]);
      r.cell.latency_ms = std::stod(cols[1]);
      r.cell.rate_mbit = std::stod(cols[2]);
      r.cell.loss = std::stod(cols[3]);
      r.cell.pf = std::stoull(cols[4]);
      r.sessions = std::stoull(cols[5]);
      r.repetition = std::stoull(cols[6]);
      r.duration_ms = std::stod(cols[7]);
      r.bytes_per_peer = std::stod(cols[8]);
      r.messages = std::stoull(cols[9]);
      r.packets = std::stoull(cols[10]);
      r.retransmissions = std::stoull(cols[11]);
      r.failures = std::stoull(cols[12]);
      r.predicted_ms = std::stod(cols[13]);
      rows.push_back(r);
    } catch (const std::logic_error&) {
      throw InputError("results line " + std::to_string(line_no) + ": not a number");
    }
  }
  return rows;
}

const AxisReport* FitReport::axis(const std::string& name) const {
  for (const auto& a : axes) {
    if (a.axis == name) return &a;
  }
  return nullptr;
}

namespace {

struct AxisDef {
  const char* name;
  double (*get)(const SweepCell&);
};

const AxisDef kAxes[] = {
    {"n", [](const SweepCell& c) { return static_cast<double>(c.n); }},
    {"latency_ms", [](const SweepCell& c) { return c.latency_ms; }},
    {"rate_mbit", [](const SweepCell& c) { return c.rate_mbit; }},
    {"loss", [](const SweepCell& c) { return c.loss; }},
    {"pf", [](const SweepCell& c) { return static_cast<double>(c.pf); }},
};

bool others_match(const SweepCell& a, const SweepCell& b, const AxisDef& skip) {
  for (const auto& d : kAxes) {
    if (&d == &skip) continue;
    if (d.get(a) != d.get(b)) return false;
  }
  return true;
}

std::optional<RegressionFit> try_fit(const std::vector<Point>& pts) {
  try {
    return fit_linear(pts);
  } catch (const InputError&) {
    return std::nullopt;
  }
}

json fit_json(const RegressionFit& f) {
  return json{{"slope", f.slope}, {"intercept", f.intercept}, {"mse", f.mse}, {"r_squared", f.r_squared},
              {"samples", f.sample_count}};
}

}  // namespace

FitReport emit_report(const std::vector<SweepRow>& rows, const std::string& protocol, const std::string& modulus,
                      const std::string& reference_path) {
  FitReport report;
  if (rows.empty()) return report;
  const PrimeModulus mod = PrimeModulus::from_decimal(modulus);
  const SweepCell base = rows.front().cell;

  for (const auto& def : kAxes) {
    std::map<double, std::vector<const SweepRow*>> groups;
    for (const auto& r : rows) {
      if (others_match(r.cell, base, def)) groups[def.get(r.cell)].push_back(&r);
    }
    if (groups.size() < 2) continue;
    AxisReport axis;
    axis.axis = def.name;
    std::vector<Point> dur, bytes, ttp;
    for (const auto& [x, members] : groups) {
      AxisPoint p;
      p.x = x;
      p.rows = members.size();
      for (const SweepRow* r : members) {
        p.duration_ms += r->duration_ms;
        p.bytes_per_peer += r->bytes_per_peer;
        p.predicted_ms += r->predicted_ms;
        p.failures += r->failures;
      }
      p.duration_ms /= static_cast<double>(p.rows);
      p.bytes_per_peer /= static_cast<double>(p.rows);
      p.predicted_ms /= static_cast<double>(p.rows);
      const SweepCell& c = members.front()->cell;
      const LinkParams link = LinkParams::from_configured(c.latency_ms, c.rate_mbit, c.loss);
      // One share per message each way.
      const std::size_t unit = share_encoding_size(mod) + kFrameHeaderBytes;
      const double delay = transfer_time(unit, link) * loss_inflation(c.loss);
      p.ttp_ms = ttp_total_cost(TtpModel{c.n, delay, delay});
      axis.points.push_back(p);
      for (const SweepRow* r : members) {
        dur.push_back({x, r->duration_ms});
        bytes.push_back({x, r->bytes_per_peer / 1e6});
      }
      ttp.push_back({x, p.ttp_ms});
    }
    axis.duration_fit = try_fit(dur);
    axis.bytes_fit = try_fit(bytes);
    axis.ttp_fit = try_fit(ttp);
    report.axes.push_back(std::move(axis));
  }

  if (protocol == "sum") {
    ReferenceSet refs;
    try {
      refs = load_reference_fits(reference_path);
    } catch (const std::exception&) {
      return report;
    }
    report.reference_tag = refs.tag;
    auto compare = [&](const char* name, const std::optional<RegressionFit>& measured) {
      const ReferenceFit* ref = refs.find(name);
      if (!ref || !measured) return;
      const Tolerances tol{std::abs(ref->fit.slope) * 0.1, std::max(1.0, std::abs(ref->fit.intercept) * 0.1)};
      report.references.push_back({name, *measured, ref->fit, compare_to_reference(*measured, ref->fit, tol)});
    };
    if (const AxisReport* a = report.axis("n")) {
      compare("time_vs_peers", a->duration_fit);
      compare("bytes_vs_peers", a->bytes_fit);
    }
    if (const AxisReport* a = report.axis("latency_ms")) compare("time_vs_latency", a->duration_fit);
  }
  return report;
}

std::string FitReport::to_json() const {
  json out;
  out["axes"] = json::array();
  for (const auto& a : axes) {
    json ja{{"axis", a.axis}, {"points", json::array()}};
    for (const auto& p : a.points) {
      ja["points"].push_back({{"x", p.x},
                              {"duration_ms", p.duration_ms},
                              {"bytes_per_peer", p.bytes_per_peer},
                              {"predicted_ms", p.predicted_ms},
                              {"ttp_ms", p.ttp_ms},
                              {"failures", p.failures},
                              {"rows", p.rows}});
    }
    if (a.duration_fit) ja["duration_fit"] = fit_json(*a.duration_fit);
    if (a.bytes_fit) ja["bytes_fit_mbytes"] = fit_json(*a.bytes_fit);
    if (a.ttp_fit) ja["ttp_fit"] = fit_json(*a.ttp_fit);
    out["axes"].push_back(std::move(ja));
  }
  out["references"] = {{"tag", reference_tag}, {"comparisons", json::array()}};
  for (const auto& r : references) {
    out["references"]["comparisons"].push_back({{"name", r.name},
                                                {"measured", fit_json(r.measured)},
                                                {"reference", fit_json(r.reference)},
                                                {"slope_within", r.verdict.slope_within},
                                                {"intercept_within", r.verdict.intercept_within},
                                                {"summary", r.verdict.summary}});
  }
  return out.dump(2);
}

std::string FitReport::to_text() const {
  std::ostringstream out;
  char buf[256];
  for (const auto& a : axes) {
    out << "axis " << a.axis << "\n";
    std::snprintf(buf, sizeof buf, "  %12s %14s %14s %14s %12s %8s\n", "x", "duration_ms", "predicted_ms", "ttp_ms",
                  "MB/peer", "fails");
    out << buf;
    for (const auto& p : a.points) {
      std::snprintf(buf, sizeof buf, "  %12g %14.4f %14.4f %14.4f %12.4f %8zu\n", p.x, p.duration_ms,
                    p.predicted_ms, p.ttp_ms, p.bytes_per_peer / 1e6, p.failures);
      out << buf;
    }
    if (a.duration_fit) {
      std::snprintf(buf, sizeof buf, "  duration = %.5f + %.5f * x  (mse %.5g, r2 %.4f)\n", a.duration_fit->intercept,
                    a.duration_fit->slope, a.duration_fit->mse, a.duration_fit->r_squared);
      out << buf;
    }
    if (a.bytes_fit) {
      std::snprintf(buf, sizeof buf, "  MB/peer  = %.5f + %.5f * x  (mse %.5g, r2 %.4f)\n", a.bytes_fit->intercept,
                    a.bytes_fit->slope, a.bytes_fit->mse, a.bytes_fit->r_squared);
      out << buf;
    }
  }
  if (!references.empty()) {
    out << "reference lines (" << reference_tag << ")\n";
    for (const auto& r : references) out << "  " << r.name << ": " << r.verdict.summary << "\n";
  }
  return out.str();
}

}  // namespace smc
