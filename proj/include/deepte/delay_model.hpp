#ifndef DEEPTE_DELAY_MODEL_HPP_
#define DEEPTE_DELAY_MODEL_HPP_

#include <vector>

#include "deepte/net_core.hpp"

namespace deepte {

// Convex piecewise-linear link cost of utilization, f(0) = 0. With n
// breakpoints there are n + 1 segments; the last one extends to infinity.
class DelayFunction {
 public:
  DelayFunction(std::vector<double> breakpoints, std::vector<double> slopes);

  // Breakpoints {1/3, 2/3, 9/10, 1, 11/10}, slopes {1, 3, 10, 70, 500, 5000}.
  static DelayFunction standard();

  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& slopes() const { return slopes_; }
  // Intercepts of the per-segment affine forms slope_k * u + intercept_k.
  const std::vector<double>& intercepts() const { return intercepts_; }
  int segment_count() const { return static_cast<int>(slopes_.size()); }

  double operator()(double utilization) const;

 private:
  std::vector<double> breakpoints_;
  std::vector<double> slopes_;
  std::vector<double> intercepts_;
};

double eval_delay(const DelayFunction& f, double utilization);

// sum_l f(y_l / C_l)
double total_delay(const DelayFunction& f, const Vector& loads, const Vector& capacities);

// cost >= coef * load + constant, one per segment of f.
struct EpigraphTerm {
  int link = 0;
  double load_coefficient = 0.0;
  double constant = 0.0;
};

std::vector<EpigraphTerm> epigraph_terms(const DelayFunction& f, int link, double capacity);

}  // namespace deepte

#endif  // DEEPTE_DELAY_MODEL_HPP_
