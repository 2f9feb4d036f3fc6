#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "deepte/net_core.hpp"
#include "test_util.hpp"

using namespace deepte;
using namespace deepte::testing;

TEST(Topology, ShippedFilesHaveTableSizes) {
  const Topology g = geant();
  EXPECT_EQ(g.node_count(), 22);
  EXPECT_EQ(g.edge_count(), 36);
  const Topology f = load_topology(data_path("topologies/france.topo"));
  EXPECT_EQ(f.node_count(), 21);
  EXPECT_EQ(f.edge_count(), 41);
}

TEST(Topology, TwoNodeFile) {
  std::istringstream in("nodes 2\n0 1 10\n");
  const Topology t = parse_topology(in);
  EXPECT_EQ(t.edge_count(), 1);
  EXPECT_DOUBLE_EQ(t.capacities()[0], 10.0);
  EXPECT_EQ(t.edge_index(0, 1), 0);
  EXPECT_FALSE(t.edge_index(1, 0).has_value());
}

TEST(Topology, ParseErrorsCarryLineNumbers) {
  auto message = [](const std::string& text) {
    std::istringstream in(text);
    try {
      parse_topology(in, "t");
    } catch (const TopologyError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message("nodes 2\n0 1 10\n0 1 5\n").find("t:3"), std::string::npos);
  EXPECT_NE(message("nodes 2\n# c\n0 1 0\n").find("t:3: nonpositive"), std::string::npos);
  EXPECT_NE(message("nodes 2\n0 1 -4\n").find("nonpositive"), std::string::npos);
  EXPECT_NE(message("0 1 4\n").find("t:1"), std::string::npos);
  EXPECT_NE(message("nodes 2\n0 0 4\n").find("self-loop"), std::string::npos);
  EXPECT_NE(message("nodes 2\n0 5 4\n").find("out of range"), std::string::npos);
  EXPECT_NE(message("nodes 2\n0 1\n").find("t:2"), std::string::npos);
  EXPECT_NE(message("").find("missing"), std::string::npos);
}

TEST(Topology, ConstructorRejectsBadEdges) {
  EXPECT_THROW(Topology(2, {{0, 1, 0.0}}), TopologyError);
  EXPECT_THROW(Topology(2, {{0, 1, 1.0}, {0, 1, 2.0}}), TopologyError);
  EXPECT_THROW(Topology(2, {{1, 1, 1.0}}), TopologyError);
}

TEST(KShortestPaths, CycleOppositeCorners) {
  const Topology c = ring(4);
  const auto paths = k_shortest_paths(c, {0, 2}, 2);
  ASSERT_EQ(paths.size(), 2u);
  for (const Path& p : paths) EXPECT_EQ(p.size(), 2u);
  EXPECT_EQ(path_nodes(c, paths[0]), (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(path_nodes(c, paths[1]), (std::vector<int>{0, 3, 2}));
}

TEST(KShortestPaths, SingleEdge) {
  const Topology t(2, {{0, 1, 1.0}});
  EXPECT_EQ(k_shortest_paths(t, {0, 1}, 4).size(), 1u);
  EXPECT_TRUE(k_shortest_paths(t, {1, 0}, 4).empty());
}

TEST(KShortestPaths, MatchesBruteForceOnGeant) {
  const Topology g = geant();
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> node(0, g.node_count() - 1);
  for (int trial = 0; trial < 40; ++trial) {
    const int s = node(rng);
    int t = node(rng);
    if (s == t) t = (t + 1) % g.node_count();
    std::vector<std::pair<std::vector<int>, Path>> all;
    std::vector<char> seen(g.node_count(), 0);
    seen[s] = 1;
    std::vector<int> nodes{s};
    Path edges;
    all_simple_paths(g, s, t, seen, nodes, edges, all);
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
      if (a.second.size() != b.second.size()) return a.second.size() < b.second.size();
      return a.first < b.first;
    });
    const auto got = k_shortest_paths(g, {s, t}, 4);
    ASSERT_EQ(got.size(), std::min<std::size_t>(4, all.size()));
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_EQ(got[i], all[i].second) << s << "->" << t;
    EXPECT_EQ(got, k_shortest_paths(g, {s, t}, 4));
  }
}

TEST(KShortestPaths, PathsAreSimpleAndConnectEndpoints) {
  const Topology g = geant();
  const PathSet ps = PathSet::build(g, 4);
  for (int d = 0; d < ps.demand_count(); ++d) {
    for (const Path& p : ps.paths(d)) {
      const auto nodes = path_nodes(g, p);
      EXPECT_EQ(nodes.front(), ps.demand(d).src);
      EXPECT_EQ(nodes.back(), ps.demand(d).dst);
      auto sorted = nodes;
      std::sort(sorted.begin(), sorted.end());
      EXPECT_EQ(std::adjacent_find(sorted.begin(), sorted.end()), sorted.end());
    }
  }
}

TEST(PathSet, IncidenceColumnsMarkPathEdges) {
  const PathSet ps = PathSet::build(ring(5), 3);
  for (int d = 0; d < ps.demand_count(); ++d) {
    const Matrix p = Matrix(ps.incidence(d));
    for (int j = 0; j < ps.path_count(d); ++j) {
      Vector expect = Vector::Zero(ps.link_count());
      for (int e : ps.path(d, j)) expect[e] = 1.0;
      EXPECT_EQ(p.col(j), expect);
    }
  }
}

TEST(LinkLoads, SinglePathAndEvenSplit) {
  const PathSet one(1, {{0, 1}}, {{{0}}});
  EXPECT_DOUBLE_EQ(compute_link_loads(one, Vector::Constant(1, 4.0), RoutingConfig{Vector::Ones(1)})[0], 4.0);

  const PathSet two(2, {{0, 1}}, {{{0}, {1}}});
  const Vector y = compute_link_loads(two, Vector::Constant(1, 4.0), RoutingConfig{Vector::Constant(2, 0.5)});
  EXPECT_DOUBLE_EQ(y[0], 2.0);
  EXPECT_DOUBLE_EQ(y[1], 2.0);
}

TEST(LinkLoads, TriangleMatchesPerEdgeAccumulation) {
  const Topology t = triangle();
  const PathSet ps = PathSet::build(t, 2);
  std::mt19937_64 rng(3);
  const RoutingConfig r = random_routing(ps, rng);
  const Vector w = random_vector(ps.demand_count(), 0.0, 5.0, rng);
  Vector expect = Vector::Zero(t.edge_count());
  for (int d = 0; d < ps.demand_count(); ++d) {
    for (int j = 0; j < ps.path_count(d); ++j) {
      for (int e : ps.path(d, j)) expect[e] += w[d] * r.fractions[ps.offset(d) + j];
    }
  }
  EXPECT_LT((compute_link_loads(ps, w, r) - expect).norm(), 1e-12);
  EXPECT_LT((ps.load_operator(w) * r.fractions - expect).norm(), 1e-12);
}

TEST(LinkLoads, Superposition) {
  const PathSet ps = PathSet::build(geant(), 4);
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const RoutingConfig r1 = random_routing(ps, rng), r2 = random_routing(ps, rng);
    const Vector w1 = random_vector(ps.demand_count(), 0.0, 10.0, rng);
    const Vector w2 = random_vector(ps.demand_count(), 0.0, 10.0, rng);
    const double a = 0.3, b = 1.7;
    const Vector lhs_w = compute_link_loads(ps, a * w1 + b * w2, r1);
    const Vector rhs_w = a * compute_link_loads(ps, w1, r1) + b * compute_link_loads(ps, w2, r1);
    EXPECT_LE((lhs_w - rhs_w).norm(), 1e-10 * rhs_w.norm());
    const Vector lhs_r = compute_link_loads(ps, w1, RoutingConfig{a * r1.fractions + b * r2.fractions});
    const Vector rhs_r = a * compute_link_loads(ps, w1, r1) + b * compute_link_loads(ps, w1, r2);
    EXPECT_LE((lhs_r - rhs_r).norm(), 1e-10 * rhs_r.norm());
    EXPECT_GE(lhs_w.minCoeff(), 0.0);
  }
}

TEST(LinkLoads, DimensionMismatchThrows) {
  const PathSet ps = PathSet::build(triangle(), 2);
  EXPECT_THROW(compute_link_loads(ps, Vector::Ones(2), even_split_routing(ps)), std::invalid_argument);
}

TEST(Routing, ValidityAndProjection) {
  const PathSet ps = PathSet::build(ring(4), 2);
  EXPECT_TRUE(is_valid_routing(ps, shortest_path_routing(ps)));
  EXPECT_TRUE(is_valid_routing(ps, even_split_routing(ps)));
  RoutingConfig bad = even_split_routing(ps);
  bad.fractions[0] = 1.2;
  bad.fractions[1] = -0.3;
  EXPECT_FALSE(is_valid_routing(ps, bad));
  EXPECT_TRUE(is_valid_routing(ps, project_to_simplex(ps, bad)));
}

TEST(Routing, EmbedExtractRoundTrip) {
  const PathSet ps = PathSet::build(geant(), 4);
  const std::vector<int> sub{3, 40, 100};
  const PathSet sp = ps.restrict(sub);
  std::mt19937_64 rng(2);
  const RoutingConfig r = random_routing(sp, rng);
  const RoutingConfig full = embed_routing(ps, shortest_path_routing(ps), sub, sp, r);
  EXPECT_EQ(extract_routing(ps, full, sub, sp).fractions, r.fractions);
  EXPECT_TRUE(is_valid_routing(ps, full));
}

namespace {

// A -> B -> C and A -> C on links AB = 0, BC = 1, AC = 2.
PathSet two_path_demand() { return PathSet(3, {{0, 2}}, {{{0, 1}, {2}}}); }

}  // namespace

TEST(Aggregation, TwoPathExample) {
  const AggregationMaps maps(two_path_demand());
  const Matrix agg = aggregate_routing(maps, RoutingConfig{Vector{{0.7, 0.3}}});
  EXPECT_DOUBLE_EQ(agg(0, 0), 0.7);
  EXPECT_DOUBLE_EQ(agg(0, 1), 0.7);
  EXPECT_DOUBLE_EQ(agg(0, 2), 0.3);
  const Matrix ind = aggregate_routing(maps, RoutingConfig{Vector{{1.0, 0.0}}});
  EXPECT_EQ(ind, (Matrix{{1.0, 1.0, 0.0}}));
}

TEST(Aggregation, MatchesPathWalkOnGeant) {
  const Topology g = geant();
  const PathSet ps = PathSet::build(g, 4);
  const PathSet el = ps.restrict({5, 27, 60, 111, 200, 301, 402, 455});
  const AggregationMaps maps(el);
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const RoutingConfig r = random_routing(el, rng);
    const Matrix agg = aggregate_routing(maps, r);
    Matrix expect = Matrix::Zero(el.demand_count(), g.edge_count());
    for (int d = 0; d < el.demand_count(); ++d) {
      for (int j = 0; j < el.path_count(d); ++j) {
        for (int e : el.path(d, j)) expect(d, e) += r.fractions[el.offset(d) + j];
      }
    }
    EXPECT_LT((agg - expect).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_GE(agg.minCoeff(), 0.0);
    EXPECT_LE(agg.maxCoeff(), 1.0 + 1e-12);
    const Matrix stacked = Matrix(maps.stacked());
    EXPECT_LT((stacked * r.fractions - agg.reshaped()).norm(), 1e-12);
  }
}

TEST(Disaggregation, RecoversExample) {
  const AggregationMaps maps(two_path_demand());
  const Disaggregation d = disaggregate_routing(maps, aggregate_routing(maps, RoutingConfig{Vector{{0.7, 0.3}}}));
  EXPECT_EQ(d.status, DisaggregationStatus::kUnique);
  EXPECT_NEAR(d.routing.fractions[0], 0.7, 1e-12);
  EXPECT_NEAR(d.routing.fractions[1], 0.3, 1e-12);
  EXPECT_LE(d.residual, 1e-8);
}

TEST(Disaggregation, IdenticalPathsAreAmbiguous) {
  const AggregationMaps maps(PathSet(2, {{0, 1}}, {{{0, 1}, {0, 1}}}));
  const Disaggregation d = disaggregate_routing(maps, aggregate_routing(maps, RoutingConfig{Vector{{0.5, 0.5}}}));
  EXPECT_EQ(d.status, DisaggregationStatus::kAmbiguous);
  EXPECT_EQ(d.column_rank, 1);
}

TEST(Disaggregation, InconsistentInputIsInfeasible) {
  const AggregationMaps maps(two_path_demand());
  Matrix agg = aggregate_routing(maps, RoutingConfig{Vector{{0.7, 0.3}}});
  agg(0, 1) += 0.1;
  EXPECT_EQ(disaggregate_routing(maps, agg).status, DisaggregationStatus::kInfeasible);
}

TEST(Disaggregation, RoundTripOnGeantElephants) {
  const PathSet ps = PathSet::build(geant(), 4);
  const PathSet el = ps.restrict({1, 2, 23, 24, 45});
  const AggregationMaps maps(el);
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const RoutingConfig r = random_routing(el, rng);
    const Disaggregation d = disaggregate_routing(maps, aggregate_routing(maps, r));
    if (d.status == DisaggregationStatus::kAmbiguous) {
      EXPECT_LT(d.column_rank, maps.path_count());
      continue;
    }
    ASSERT_EQ(d.status, DisaggregationStatus::kUnique);
    EXPECT_LT((d.routing.fractions - r.fractions).cwiseAbs().maxCoeff(), 1e-8);
  }
}
