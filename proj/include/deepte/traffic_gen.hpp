#ifndef DEEPTE_TRAFFIC_GEN_HPP_
#define DEEPTE_TRAFFIC_GEN_HPP_

#include <cstdint>
#include <functional>
#include <vector>

#include "deepte/net_core.hpp"

namespace deepte {

// Time-indexed traffic matrices: row s holds w(s) over all_demands(n).
struct DemandSeries {
  Matrix values;               // T x n_w, Mbps
  double tau = 300.0;          // sample interval, seconds
  int node_count = 0;
  std::vector<int> elephants;  // sorted demand indices
  std::uint64_t seed = 0;

  int steps() const { return static_cast<int>(values.rows()); }
  int demand_count() const { return static_cast<int>(values.cols()); }
  Vector at(int step) const { return values.row(step).transpose(); }
};

struct GenParams {
  int days = 3;
  double tau = 300.0;
  int elephant_count = 8;
  double background_share = 0.2;
  double diurnal_period = 86400.0;
  double noise_level = 0.05;
  double amplitude = 0.4;
  std::uint64_t seed = 1;
  double utilization_target = 0.35;
  // 0: foreground pairs are drawn among pairs at least two hops apart.
  // Otherwise they are drawn among this many highest-degree nodes.
  int key_nodes = 0;
  // Total mean volume before utilization scaling.
  double total_volume = 1000.0;
};

void validate(const GenParams& params);

// Background flows between every ordered pair follow a gravity structure;
// elephant_count foreground flows carry the remaining volume. Each flow is
// base * (1 + a sin(2 pi t / period + phase)) * (1 + noise), clipped at 0.
DemandSeries generate_series(const Topology& topo, const GenParams& params);

// Least-squares polynomial of `degree` fitted to each flow within every block
// of `samples` steps: 0 gives a piecewise-constant series, 1 piecewise-linear.
DemandSeries interval_polynomial_fit(const DemandSeries& series, int samples, int degree);

// Every entry times (1 + level * z), z standard normal, clipped at 0.
DemandSeries add_noise(const DemandSeries& series, double level, std::uint64_t seed);

// Demands ordered by time-mean volume, largest first; ties go to the lower index.
std::vector<int> select_elephants(const Matrix& values, int count);
std::vector<int> select_elephants(const Vector& traffic_matrix, int count);

using RoutingOracle = std::function<RoutingConfig(const Vector& w)>;

struct ScaleResult {
  DemandSeries series;
  double gamma = 1.0;
  double mean_utilization = 0.0;  // at the probe steps, after scaling
  double max_utilization = 0.0;
};

// Finds gamma by bisection so that the oracle routing of gamma * w gives the
// target mean link utilization over `probe_steps` evenly spaced steps, unless
// the maximum utilization reaches `max_utilization` first.
ScaleResult scale_series(const DemandSeries& series, const Topology& topo, const PathSet& pathset,
                         double target, const RoutingOracle& oracle, int probe_steps = 8,
                         double max_utilization = 1.0);

// Hop distances from every node (BFS); -1 when unreachable.
std::vector<std::vector<int>> hop_distances(const Topology& topo);

}  // namespace deepte

#endif  // DEEPTE_TRAFFIC_GEN_HPP_
