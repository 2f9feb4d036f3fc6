#include "deepte/delay_model.hpp"

#include <cmath>
#include <stdexcept>

namespace deepte {

DelayFunction::DelayFunction(std::vector<double> breakpoints, std::vector<double> slopes)
    : breakpoints_(std::move(breakpoints)), slopes_(std::move(slopes)) {
  if (slopes_.size() != breakpoints_.size() + 1) {
    throw std::invalid_argument("delay function needs one more slope than breakpoints");
  }
  for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
    if (!(breakpoints_[i] > (i == 0 ? 0.0 : breakpoints_[i - 1]))) {
      throw std::invalid_argument("delay breakpoints must be positive and strictly increasing");
    }
  }
  for (std::size_t i = 0; i < slopes_.size(); ++i) {
    if (!(slopes_[i] > 0.0) || (i > 0 && !(slopes_[i] > slopes_[i - 1]))) {
      throw std::invalid_argument("delay slopes must be positive and strictly increasing (convexity)");
    }
  }
  // Continuity at each breakpoint fixes the intercepts.
  intercepts_.assign(slopes_.size(), 0.0);
  for (std::size_t i = 1; i < slopes_.size(); ++i) {
    intercepts_[i] = intercepts_[i - 1] + (slopes_[i - 1] - slopes_[i]) * breakpoints_[i - 1];
  }
}

DelayFunction DelayFunction::standard() {
  return DelayFunction({1.0 / 3.0, 2.0 / 3.0, 9.0 / 10.0, 1.0, 11.0 / 10.0}, {1, 3, 10, 70, 500, 5000});
}

double DelayFunction::operator()(double utilization) const {
  if (utilization < 0.0 || std::isnan(utilization)) {
    throw std::domain_error("delay evaluated at negative utilization");
  }
  std::size_t k = 0;
  while (k < breakpoints_.size() && utilization > breakpoints_[k]) ++k;
  return slopes_[k] * utilization + intercepts_[k];
}

double eval_delay(const DelayFunction& f, double utilization) { return f(utilization); }

double total_delay(const DelayFunction& f, const Vector& loads, const Vector& capacities) {
  if (loads.size() != capacities.size()) throw std::invalid_argument("total_delay: dimension mismatch");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < loads.size(); ++i) {
    // Solver round-off can leave loads a hair below zero.
    sum += f(std::max(0.0, loads[i]) / capacities[i]);
  }
  return sum;
}

std::vector<EpigraphTerm> epigraph_terms(const DelayFunction& f, int link, double capacity) {
  if (!(capacity > 0.0)) throw std::invalid_argument("epigraph_terms: nonpositive capacity");
  std::vector<EpigraphTerm> out;
  out.reserve(f.segment_count());
  for (int k = 0; k < f.segment_count(); ++k) {
    out.push_back({link, f.slopes()[k] / capacity, f.intercepts()[k]});
  }
  return out;
}

}  // namespace deepte
