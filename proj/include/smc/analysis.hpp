#pragma once

#include <span>
#include <string>
#include <vector>

namespace smc {

struct Point {
  double x;
  double y;
};

struct RegressionFit {
  double slope = 0.0;
  double intercept = 0.0;
  double mse = 0.0;
  double r_squared = 1.0;
  std::size_t sample_count = 0;

  double at(double x) const { return intercept + slope * x; }
};

// Ordinary least squares. Throws InputError with fewer than two distinct x.
RegressionFit fit_linear(std::span<const Point> points);

// Mean squared residual of an arbitrary line.
double line_mse(std::span<const Point> points, double slope, double intercept);

struct Tolerances {
  double slope = 0.0;
  double intercept = 0.0;
};

struct VerdictReport {
  bool slope_within = false;
  bool intercept_within = false;
  std::string summary;

  bool all_within() const { return slope_within && intercept_within; }
};

VerdictReport compare_to_reference(const RegressionFit& fit, const RegressionFit& reference,
                                   const Tolerances& tolerances);

// Published regression lines shipped with the project. Their absolute
// values depend on the measured hardware and runtime.
struct ReferenceFit {
  std::string name;
  std::string x_axis;
  std::string unit;
  bool unit_known = true;
  RegressionFit fit;
};

struct ReferenceSet {
  std::string tag;
  std::vector<ReferenceFit> fits;

  const ReferenceFit* find(const std::string& name) const;
};

ReferenceSet load_reference_fits(const std::string& path);
std::string default_reference_path();

}  // namespace smc
