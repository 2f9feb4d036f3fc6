#include <gtest/gtest.h>

#include <random>

#include "deepte/baselines.hpp"
#include "deepte/traffic_gen.hpp"
#include "test_util.hpp"

using namespace deepte;
using deepte::testing::geant;

namespace {

// Max slope of f divided by capacity bounds how fast total delay moves with
// a shift of load.
double lipschitz(const DelayFunction& f, const Vector& caps) { return f.slopes().back() / caps.minCoeff(); }

}  // namespace

TEST(OptRoute, SymmetricSplitOverIdenticalPaths) {
  const PathSet ps(2, {Demand{0, 1}}, {{{0}, {1}}});
  const RoutingSolution s = opt_route(ps, Vector::Constant(1, 12.0), DelayFunction::standard(), Vector::Constant(2, 10.0));
  ASSERT_EQ(s.status, SolveStatus::kOptimal);
  EXPECT_NEAR(s.routing.fractions[0], 0.5, 1e-6);
  EXPECT_NEAR(s.routing.fractions[1], 0.5, 1e-6);
}

TEST(OptRoute, SinglePath) {
  const PathSet ps(1, {Demand{0, 1}}, {{{0}}});
  const RoutingSolution s = opt_route(ps, Vector::Constant(1, 30.0), DelayFunction::standard(), Vector::Constant(1, 10.0));
  EXPECT_EQ(s.routing.fractions[0], 1.0);
  EXPECT_NEAR(s.delay, DelayFunction::standard()(3.0), 1e-9);
}

TEST(OptRoute, TriangleMatchesGridSearch) {
  const Topology topo = deepte::testing::triangle(10.0);
  const PathSet ps = PathSet::build(topo, 2);
  const DelayFunction f = DelayFunction::standard();
  const Vector caps = topo.capacities();
  // Two loaded demands out of node 0, both with a direct and a two-hop path.
  Vector w = Vector::Zero(6);
  w[0] = 9.0;  // 0 -> 1
  w[1] = 7.0;  // 0 -> 2
  const RoutingSolution s = opt_route(ps, w, f, caps);
  ASSERT_EQ(s.status, SolveStatus::kOptimal);
  RoutingConfig r = shortest_path_routing(ps);
  double best = 1e300;
  for (int a = 0; a <= 100; ++a) {
    for (int b = 0; b <= 100; ++b) {
      r.split(ps, 0) << a / 100.0, 1.0 - a / 100.0;
      r.split(ps, 1) << b / 100.0, 1.0 - b / 100.0;
      best = std::min(best, total_delay(f, compute_link_loads(ps, w, r), caps));
    }
  }
  EXPECT_LE(s.delay, best + 1e-9);
  EXPECT_GE(s.delay, best - 0.01 * w.sum() * lipschitz(f, caps));
}

TEST(OptRoute, NoFeasiblePerturbationImproves) {
  const Topology topo = geant();
  const PathSet ps = PathSet::build(topo, 4);
  const DemandSeries series = generate_series(topo, GenParams{});
  const Vector caps = topo.capacities();
  Vector w = series.at(100);
  const Vector u = compute_link_loads(ps, w, shortest_path_routing(ps)).cwiseQuotient(caps);
  w *= 0.4 / u.mean();
  const DelayFunction f = DelayFunction::standard();
  const RoutingSolution s = opt_route(ps, w, f, caps);
  ASSERT_EQ(s.status, SolveStatus::kOptimal);
  EXPECT_TRUE(is_valid_routing(ps, s.routing, 1e-9));
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const RoutingConfig target = deepte::testing::random_routing(ps, rng);
    const double t = std::uniform_real_distribution<double>(1e-4, 0.2)(rng);
    const RoutingConfig moved{(1.0 - t) * s.routing.fractions + t * target.fractions};
    EXPECT_GE(total_delay(f, compute_link_loads(ps, w, moved), caps), s.delay - 1e-6) << trial;
  }
}

TEST(ConstRoute, MeanEqualToTruthGivesElephantOptimum) {
  const Topology topo = geant();
  const PathSet ps = PathSet::build(topo, 4);
  const DemandSeries series = generate_series(topo, GenParams{});
  const Vector caps = topo.capacities();
  const Vector w = series.at(10) * 0.05;
  const DelayFunction f = DelayFunction::standard();
  const RoutingSolution c = const_route(ps, series.elephants, w, f, caps);
  const RoutingSolution e = route_elephants(ps, series.elephants, w, f, caps);
  EXPECT_NEAR(c.delay, e.delay, 1e-9);
  // Restricting control to the elephants can only cost delay.
  EXPECT_GE(c.delay, opt_route(ps, w, f, caps).delay - 1e-6);
}

TEST(Tomogravity, DirectLinksRecoverAnyMatrix) {
  const Topology topo = deepte::testing::triangle(10.0);
  const PathSet ps = PathSet::build(topo, 1);
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const Vector w = deepte::testing::random_vector(6, 0.0, 5.0, rng);
    const RoutingConfig r = shortest_path_routing(ps);
    const TomogravityEstimate est = tomogravity_estimate(ps, r, compute_link_loads(ps, w, r), node_egress(ps, w, 3),
                                                         node_ingress(ps, w, 3));
    EXPECT_LT((est.estimate - w).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(Tomogravity, StarLoadsDetermineHubTraffic) {
  // Hub 0 with three leaves; every demand enters or leaves the hub, so each
  // one has a link of its own and the load map is invertible.
  const Topology star(4, {{0, 1, 10}, {1, 0, 10}, {0, 2, 10}, {2, 0, 10}, {0, 3, 10}, {3, 0, 10}});
  std::vector<Demand> demands;
  std::vector<std::vector<Path>> paths;
  for (int leaf = 1; leaf <= 3; ++leaf) {
    demands.push_back({0, leaf});
    paths.push_back({{*star.edge_index(0, leaf)}});
    demands.push_back({leaf, 0});
    paths.push_back({{*star.edge_index(leaf, 0)}});
  }
  const PathSet ps(star.edge_count(), demands, paths);
  const RoutingConfig r = shortest_path_routing(ps);
  ASSERT_EQ(Eigen::FullPivLU<Matrix>(routing_load_map(ps, r)).rank(), 6);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Vector w = deepte::testing::random_vector(6, 0.0, 5.0, rng);
    const TomogravityEstimate est = tomogravity_estimate(ps, r, compute_link_loads(ps, w, r), node_egress(ps, w, 4),
                                                         node_ingress(ps, w, 4));
    EXPECT_LT((est.estimate - w).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(Tomogravity, GravityConsistentMatrixIsExact) {
  const Topology topo = geant();
  const PathSet ps = PathSet::build(topo, 4);
  const int n = topo.node_count();
  std::mt19937_64 rng(4);
  // Iterate w <- gravity(w) until the matrix equals its own gravity prior.
  Vector w = deepte::testing::random_vector(ps.demand_count(), 1.0, 2.0, rng);
  for (int it = 0; it < 100000; ++it) {
    const Vector e = node_egress(ps, w, n), in = node_ingress(ps, w, n);
    Vector next(w.size());
    for (int d = 0; d < ps.demand_count(); ++d) next[d] = e[ps.demand(d).src] * in[ps.demand(d).dst];
    next *= w.sum() / next.sum();
    const double change = (next - w).cwiseAbs().maxCoeff();
    w = next;
    if (change < 1e-14) break;
  }
  const RoutingConfig r = shortest_path_routing(ps);
  const TomogravityEstimate est =
      tomogravity_estimate(ps, r, compute_link_loads(ps, w, r), node_egress(ps, w, n), node_ingress(ps, w, n));
  ASSERT_LT((est.prior - w).cwiseAbs().maxCoeff(), 1e-8 * w.maxCoeff());
  EXPECT_LT((est.estimate - w).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_GE(est.estimate.minCoeff(), 0.0);
}

TEST(Tomogravity, ElephantDominatedMatrixIsBiased) {
  const Topology topo = geant();
  const PathSet ps = PathSet::build(topo, 4);
  const int n = topo.node_count();
  const RoutingConfig r = shortest_path_routing(ps);
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    GenParams params;
    params.seed = seed;
    params.key_nodes = 6;
    const Vector w = generate_series(topo, params).at(50);
    const Vector y = compute_link_loads(ps, w, r);
    const TomogravityEstimate est = tomogravity_estimate(ps, r, y, node_egress(ps, w, n), node_ingress(ps, w, n));
    EXPECT_GT((est.estimate - w).norm() / w.norm(), 0.1) << seed;
    EXPECT_GE(est.estimate.minCoeff(), 0.0);
    // The reported residual is the actual misfit.
    const Vector fit = routing_load_map(ps, r) * est.estimate;
    const double link_misfit = (fit - y).norm();
    EXPECT_LE(link_misfit, est.residual + 1e-9);
  }
}

TEST(TgRoute, ExactEstimateGivesElephantOptimum) {
  const Topology topo = geant();
  const PathSet ps = PathSet::build(topo, 4);
  const DemandSeries series = generate_series(topo, GenParams{});
  const Vector w = series.at(20) * 0.05;
  TomogravityEstimate exact;
  exact.estimate = w;
  const DelayFunction f = DelayFunction::standard();
  const RoutingSolution tg = tg_route(exact, ps, series.elephants, f, topo.capacities());
  const RoutingSolution e = route_elephants(ps, series.elephants, w, f, topo.capacities());
  EXPECT_NEAR(tg.delay, e.delay, 1e-9);
}

TEST(RoutingLoadMap, MatchesLinkLoads) {
  const Topology topo = geant();
  const PathSet ps = PathSet::build(topo, 3);
  std::mt19937_64 rng(5);
  const RoutingConfig r = deepte::testing::random_routing(ps, rng);
  const Vector w = deepte::testing::random_vector(ps.demand_count(), 0.0, 3.0, rng);
  EXPECT_LT((routing_load_map(ps, r) * w - compute_link_loads(ps, w, r)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(node_egress(ps, w, 22).sum(), w.sum(), 1e-10);
  EXPECT_NEAR(node_ingress(ps, w, 22).sum(), w.sum(), 1e-10);
}
