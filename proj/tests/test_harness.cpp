#include <gtest/gtest.h>

#include <sstream>

#include "deepte/harness.hpp"
#include "deepte/text_io.hpp"
#include "test_util.hpp"

using namespace deepte;

namespace {

ExperimentConfig ring_config(Method m) {
  ExperimentConfig cfg;
  cfg.method = m;
  cfg.k_paths = 2;
  return cfg;
}

const Scenario& ring_scenario() {
  static const Scenario sc = [] {
    const Topology topo = deepte::testing::ring(6);
    GenParams params;
    params.elephant_count = 3;
    params.seed = 5;
    DemandSeries series = generate_scaled_series(topo, params, 2).series;
    return prepare_scenario(topo, std::move(series), ring_config(Method::kOpt));
  }();
  return sc;
}

const MetricsReport& run(Method m) {
  static std::map<Method, MetricsReport> cache;
  auto it = cache.find(m);
  if (it == cache.end()) it = cache.emplace(m, run_simulation(ring_scenario(), ring_config(m))).first;
  return it->second;
}

}  // namespace

TEST(Simulation, EveryMethodStaysAboveTheOracle) {
  for (Method m : {Method::kDeepte, Method::kOpt, Method::kConst, Method::kTg5, Method::kTg30}) {
    const MetricsReport& r = run(m);
    ASSERT_EQ(r.steps.size(), 288u) << to_string(m);
    for (const StepRecord& s : r.steps) {
      EXPECT_GE(s.pr, 1.0 - 1e-6) << to_string(m) << " step " << s.step;
      EXPECT_GE(s.rc, 0.0);
    }
  }
}

TEST(Simulation, OptIsItsOwnDenominator) {
  for (const StepRecord& s : run(Method::kOpt).steps) EXPECT_NEAR(s.pr, 1.0, 1e-6);
}

TEST(Simulation, ConstNeverReroutes) {
  const MetricsReport& r = run(Method::kConst);
  for (const StepRecord& s : r.steps) EXPECT_EQ(s.rc, 0.0);
  EXPECT_EQ(r.mean_rc, 0.0);
}

TEST(Simulation, DeepteDecidesOncePerInterval) {
  const MetricsReport& r = run(Method::kDeepte);
  EXPECT_EQ(r.decisions, 48);
  for (const StepRecord& s : r.steps) {
    EXPECT_EQ(s.decision, s.step % 6 == 0) << s.step;
    EXPECT_EQ(s.pe_rank >= 0, s.decision);
    // The five samples after a decision carry perturbations.
    if (s.step % 6 != 0) EXPECT_GT(s.rc, 0.0) << s.step;
  }
  EXPECT_LE(r.fallback_fraction(), 0.1);
}

TEST(Simulation, TomogravityIntervalsDifferSixfold) {
  EXPECT_EQ(run(Method::kTg5).decisions, 288);
  EXPECT_EQ(run(Method::kTg30).decisions, 48);
}

TEST(Simulation, DeterministicGivenSeed) {
  const MetricsReport again = run_simulation(ring_scenario(), ring_config(Method::kDeepte));
  std::ostringstream a, b;
  write_steps_csv(run(Method::kDeepte), a);
  write_steps_csv(again, b);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Simulation, LinkLoadConservation) {
  const Scenario& sc = ring_scenario();
  const RoutingConfig r = shortest_path_routing(sc.paths);
  const Vector w = sc.series.at(sc.eval_begin);
  double hops = 0.0;
  for (int d = 0; d < sc.paths.demand_count(); ++d) hops += w[d] * sc.paths.path(d, 0).size();
  EXPECT_NEAR(compute_link_loads(sc.paths, w, r).sum(), hops, 1e-9 * hops);
}

TEST(Metrics, QuantileAndMeanExamples) {
  EXPECT_EQ(quantile({4.0}, 0.5), 4.0);
  EXPECT_EQ(quantile({1.0, 3.0}, 0.5), 2.0);
  EXPECT_EQ(quantile({5.0, 1.0, 3.0, 2.0}, 0.25), 1.75);
  EXPECT_THROW(quantile({}, 0.5), std::invalid_argument);

  MetricsReport one;
  one.steps.push_back(StepRecord{0, 0.0, 2.0, 1.0, 2.0, 0.5});
  finalize_metrics(one);
  EXPECT_EQ(one.mean_pr, 2.0);
  EXPECT_EQ(one.mean_rc, 0.5);

  MetricsReport two;
  two.series = "s";
  two.method = "const";
  two.steps.push_back(StepRecord{0, 0.0, 1.0, 1.0, 1.0, 0.0});
  two.steps.push_back(StepRecord{1, 300.0, 3.0, 1.0, 3.0, 0.0});
  finalize_metrics(two);
  EXPECT_EQ(two.mean_pr, 2.0);
  const SummaryTable t = aggregate_metrics({two});
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0].mean_pr, 2.0);
  EXPECT_EQ(t.quartiles[0].pr_median, 2.0);
}

TEST(Metrics, QuartilesOverSeries) {
  std::vector<MetricsReport> reports;
  for (int i = 0; i < 5; ++i) {
    MetricsReport r;
    r.series = "s" + std::to_string(i);
    r.method = "deepte";
    r.mean_pr = 1.0 + i;
    r.mean_rc = 10.0 - i;
    reports.push_back(r);
  }
  const SummaryTable t = aggregate_metrics(reports);
  ASSERT_EQ(t.quartiles.size(), 1u);
  EXPECT_EQ(t.quartiles[0].series_count, 5);
  EXPECT_EQ(t.quartiles[0].pr_q1, 2.0);
  EXPECT_EQ(t.quartiles[0].pr_median, 3.0);
  EXPECT_EQ(t.quartiles[0].rc_min, 6.0);
  EXPECT_EQ(t.quartiles[0].rc_max, 10.0);
}

TEST(Metrics, SpearmanExamples) {
  EXPECT_DOUBLE_EQ(spearman_correlation({1, 2, 3, 4}, {10, 20, 30, 40}), 1.0);
  EXPECT_DOUBLE_EQ(spearman_correlation({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0);
  // Monotone transforms do not change ranks.
  EXPECT_DOUBLE_EQ(spearman_correlation({1, 2, 3, 4}, {1, 8, 27, 64}), 1.0);
  // Ties share their mean rank: ranks (1.5, 1.5, 3) against (1, 2, 3).
  EXPECT_NEAR(spearman_correlation({1, 1, 2}, {1, 2, 3}), 0.8660254037844386, 1e-12);
}

TEST(Metrics, StepsCsvRoundTrip) {
  const MetricsReport& r = run(Method::kTg30);
  std::ostringstream out;
  write_steps_csv(r, out);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "step,time_s,method,delay,opt_delay,pr,rc,fallback,pe_rank");
  std::istringstream in(out.str());
  const MetricsReport back = read_steps_csv(in, "x");
  ASSERT_EQ(back.steps.size(), r.steps.size());
  for (std::size_t i = 0; i < r.steps.size(); ++i) {
    EXPECT_EQ(back.steps[i].step, r.steps[i].step);
    EXPECT_NEAR(back.steps[i].pr, r.steps[i].pr, 1e-9 * r.steps[i].pr);
    EXPECT_NEAR(back.steps[i].rc, r.steps[i].rc, 1e-9 * (1.0 + r.steps[i].rc));
  }
  EXPECT_NEAR(back.mean_pr, r.mean_pr, 1e-9);
}

TEST(Methods, NamesRoundTrip) {
  for (Method m : {Method::kDeepte, Method::kOpt, Method::kConst, Method::kTg5, Method::kTg30}) {
    EXPECT_EQ(parse_method(to_string(m)), m);
  }
  EXPECT_THROW(parse_method("ospf"), std::invalid_argument);
}
