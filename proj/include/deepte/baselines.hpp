#ifndef DEEPTE_BASELINES_HPP_
#define DEEPTE_BASELINES_HPP_

#include <vector>

#include "deepte/convex_solver.hpp"
#include "deepte/delay_model.hpp"
#include "deepte/net_core.hpp"

namespace deepte {

struct RoutingSolution {
  RoutingConfig routing;
  SolveStatus status = SolveStatus::kIterationLimit;
  double delay = 0.0;  // total delay of the returned (projected) routing
};

// Epigraph LP: minimize sum_l f((background_l + (D(w) r)_l) / C_l) over the
// split fractions of `pathset`. Demands without paths are skipped.
RoutingSolution optimize_routing(const PathSet& pathset, const Vector& w, const Vector& background,
                                 const DelayFunction& f, const Vector& capacities,
                                 const SolverOptions& options = {});

// Per-step oracle over all flows.
RoutingSolution opt_route(const PathSet& pathset, const Vector& w, const DelayFunction& f,
                          const Vector& capacities);

// Elephant-only routing: mice stay on their shortest path and contribute a
// fixed background load computed from the same traffic matrix.
RoutingSolution route_elephants(const PathSet& full, const std::vector<int>& elephants, const Vector& w,
                                const DelayFunction& f, const Vector& capacities);

// Optimum on the two-day mean traffic, kept for the whole session.
RoutingSolution const_route(const PathSet& full, const std::vector<int>& elephants, const Vector& training_mean,
                            const DelayFunction& f, const Vector& capacities);

// Link-by-demand load map induced by a routing: A(r)[l, d] = sum_{p ∋ l} r_dp.
Matrix routing_load_map(const PathSet& pathset, const RoutingConfig& r);

struct TomogravityEstimate {
  Vector estimate;  // w_hat >= 0
  Vector prior;     // gravity prior
  double residual = 0.0;  // || A w_hat - measurements ||_2, measurements include the marginals
};

// Gravity prior from the per-node egress/ingress totals measured at the
// network edge, then the smallest adjustment that fits the link loads and
// the totals. Negative entries are clipped and the fit is redone once on the
// remaining support.
TomogravityEstimate tomogravity_estimate(const PathSet& pathset, const RoutingConfig& routing,
                                         const Vector& link_loads, const Vector& egress, const Vector& ingress);

// Per-node totals of a traffic matrix over all_demands order.
Vector node_egress(const PathSet& pathset, const Vector& w, int node_count);
Vector node_ingress(const PathSet& pathset, const Vector& w, int node_count);

RoutingSolution tg_route(const TomogravityEstimate& estimate, const PathSet& full, const std::vector<int>& elephants,
                         const DelayFunction& f, const Vector& capacities);

}  // namespace deepte

#endif  // DEEPTE_BASELINES_HPP_
