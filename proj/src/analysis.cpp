#include "smc/analysis.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "smc/errors.hpp"

namespace smc {

RegressionFit fit_linear(std::span<const Point> points) {
  if (points.size() < 2) throw InputError("linear fit needs at least two points");
  const double count = static_cast<double>(points.size());
  double mean_x = 0.0, mean_y = 0.0;
  for (const Point& p : points) {
    mean_x += p.x;
    mean_y += p.y;
  }
  mean_x /= count;
  mean_y /= count;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const Point& p : points) {
    const double dx = p.x - mean_x, dy = p.y - mean_y;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw InputError("linear fit needs at least two distinct x values");

  RegressionFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = mean_y - fit.slope * mean_x;
  fit.sample_count = points.size();
  fit.mse = line_mse(points, fit.slope, fit.intercept);
  const double ss_res = fit.mse * count;
  fit.r_squared = syy == 0.0 ? 1.0 : 1.0 - ss_res / syy;
  return fit;
}

double line_mse(std::span<const Point> points, double slope, double intercept) {
  if (points.empty()) return 0.0;
  double sum = 0.0;
  for (const Point& p : points) {
    const double r = p.y - (intercept + slope * p.x);
    sum += r * r;
  }
  return sum / static_cast<double>(points.size());
}

VerdictReport compare_to_reference(const RegressionFit& fit, const RegressionFit& reference,
                                   const Tolerances& tolerances) {
  VerdictReport v;
  const double ds = std::abs(fit.slope - reference.slope);
  const double di = std::abs(fit.intercept - reference.intercept);
  v.slope_within = ds <= tolerances.slope;
  v.intercept_within = di <= tolerances.intercept;
  std::ostringstream out;
  out << "slope " << fit.slope << " vs " << reference.slope << " (|d|=" << ds << ", tol " << tolerances.slope
      << ") " << (v.slope_within ? "within" : "OUTSIDE") << "; intercept " << fit.intercept << " vs "
      << reference.intercept << " (|d|=" << di << ", tol " << tolerances.intercept << ") "
      << (v.intercept_within ? "within" : "OUTSIDE");
  v.summary = out.str();
  return v;
}

const ReferenceFit* ReferenceSet::find(const std::string& name) const {
  for (const auto& f : fits) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

ReferenceSet load_reference_fits(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open reference fits: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
    ReferenceSet set;
    set.tag = doc.at("tag").get<std::string>();
    for (const auto& f : doc.at("fits")) {
      ReferenceFit r;
      r.name = f.at("name").get<std::string>();
      r.x_axis = f.at("x_axis").get<std::string>();
      r.unit = f.at("unit").get<std::string>();
      r.unit_known = f.value("unit_known", true);
      r.fit.slope = f.at("slope").get<double>();
      r.fit.intercept = f.at("intercept").get<double>();
      r.fit.mse = f.at("mse").get<double>();
      set.fits.push_back(std::move(r));
    }
    return set;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("malformed reference fits " + path + ": " + e.what());
  }
}

std::string default_reference_path() { return std::string(SMC_DATA_DIR) + "/reference_fits.json"; }

}  // namespace smc
