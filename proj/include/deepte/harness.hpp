#ifndef DEEPTE_HARNESS_HPP_
#define DEEPTE_HARNESS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "deepte/baselines.hpp"
#include "deepte/controller.hpp"
#include "deepte/delay_model.hpp"
#include "deepte/net_core.hpp"
#include "deepte/traffic_gen.hpp"

namespace deepte {

enum class Method { kDeepte, kOpt, kConst, kTg5, kTg30 };

std::string to_string(Method method);
Method parse_method(const std::string& name);

struct ExperimentConfig {
  Method method = Method::kDeepte;
  ControllerConfig controller;
  DelayFunction delay = DelayFunction::standard();
  int k_paths = 4;
  int training_days = 2;
  int evaluation_days = 1;
  std::uint64_t seed = 1;
};

void validate(const ExperimentConfig& cfg);

// Foreground endpoints used when generating traffic for a named topology.
// On geant the stub nodes sit on one-way triangles with a single out-link,
// so foreground flows there saturate links no routing can relieve; the six
// ring nodes are used instead of seven.
int default_key_nodes(const std::string& topology_name);

// generate_series followed by scale_series against the per-step oracle.
ScaleResult generate_scaled_series(const Topology& topo, const GenParams& params, int k_paths,
                                   const DelayFunction& f = DelayFunction::standard());

// Everything shared by the methods compared on one series, including the
// per-step oracle that every PR denominator comes from.
struct Scenario {
  Topology topo;
  PathSet paths;
  PathSet elephant_paths;
  std::vector<int> elephants;
  DemandSeries series;
  Vector capacities;
  DelayFunction delay;
  int steps_per_day = 0;
  int eval_begin = 0;
  int eval_end = 0;
  Vector training_mean;
  RoutingConfig const_routing;             // elephants only
  std::vector<RoutingConfig> opt_routing;  // steps eval_begin - 1 ... eval_end - 1
  std::vector<double> opt_delay;

  const RoutingConfig& opt_at(int step) const { return opt_routing.at(step - eval_begin + 1); }
  double opt_delay_at(int step) const { return opt_delay.at(step - eval_begin + 1); }
};

Scenario prepare_scenario(Topology topo, DemandSeries series, const ExperimentConfig& cfg);

struct StepRecord {
  int step = 0;
  double time_s = 0.0;
  double delay = 0.0;
  double opt_delay = 0.0;
  double pr = 1.0;
  double rc = 0.0;      // || R(s) - R(s - 1) ||_1 over the full routing vector
  bool decision = false;
  bool fallback = false;
  int pe_rank = -1;     // -1 away from DeeP-TE decision steps
};

struct MetricsReport {
  std::string series;
  std::string method;
  std::vector<StepRecord> steps;
  int decisions = 0;
  int fallbacks = 0;
  double mean_pr = 0.0;
  double mean_rc = 0.0;
  double median_pr = 0.0;
  double decision_rc = 0.0;  // mean RC over control-interval boundaries only
  double wall_seconds = 0.0;
  double fallback_fraction() const { return decisions > 0 ? static_cast<double>(fallbacks) / decisions : 0.0; }
};

// Steps through the evaluation days. Warm-up intervals run before the first
// evaluated step so that DeeP-TE has L windows at its first decision.
MetricsReport run_simulation(const Scenario& scenario, const ExperimentConfig& cfg);

// Fills mean/median fields from the step records.
void finalize_metrics(MetricsReport& report);

struct SummaryRow {
  std::string series;
  std::string method;
  double mean_pr = 0.0;
  double mean_rc = 0.0;
  double median_pr = 0.0;
  double fallback_frac = 0.0;
};

struct QuartileRow {
  std::string method;
  int series_count = 0;
  double pr_q1 = 0.0, pr_median = 0.0, pr_q3 = 0.0;
  double rc_min = 0.0, rc_q1 = 0.0, rc_median = 0.0, rc_q3 = 0.0, rc_max = 0.0;
};

struct SummaryTable {
  std::vector<SummaryRow> rows;
  std::vector<QuartileRow> quartiles;  // over per-series means, one row per method
};

SummaryTable aggregate_metrics(const std::vector<MetricsReport>& reports);

// Linear-interpolation quantile of a nonempty sample, q in [0, 1].
double quantile(std::vector<double> values, double q);

double spearman_correlation(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace deepte

#endif  // DEEPTE_HARNESS_HPP_
