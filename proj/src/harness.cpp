#include "deepte/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <stdexcept>

#include "deepte/predictor.hpp"

namespace deepte {

std::string to_string(Method m) {
  switch (m) {
    case Method::kDeepte:
      return "deepte";
    case Method::kOpt:
      return "opt";
    case Method::kConst:
      return "const";
    case Method::kTg5:
      return "tg5";
    case Method::kTg30:
      return "tg30";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::kDeepte, Method::kOpt, Method::kConst, Method::kTg5, Method::kTg30}) {
    if (to_string(m) == name) return m;
  }
  throw std::invalid_argument("unknown method `" + name + "` (expected deepte, opt, const, tg5 or tg30)");
}

void validate(const ExperimentConfig& cfg) {
  validate(cfg.controller);
  if (cfg.k_paths < 1) throw std::invalid_argument("k_paths must be positive");
  if (cfg.training_days < 1 || cfg.evaluation_days < 1) {
    throw std::invalid_argument("training and evaluation days must be positive");
  }
}

int default_key_nodes(const std::string& topology_name) { return topology_name == "geant" ? 6 : 7; }

ScaleResult generate_scaled_series(const Topology& topo, const GenParams& params, int k_paths, const DelayFunction& f) {
  const PathSet paths = PathSet::build(topo, k_paths);
  const Vector caps = topo.capacities();
  const auto oracle = [&](const Vector& w) { return opt_route(paths, w, f, caps).routing; };
  return scale_series(generate_series(topo, params), topo, paths, params.utilization_target, oracle);
}

Scenario prepare_scenario(Topology topo, DemandSeries series, const ExperimentConfig& cfg) {
  validate(cfg);
  if (series.node_count != topo.node_count()) throw std::invalid_argument("series and topology node counts differ");
  const double per_day = 86400.0 / series.tau;
  if (std::abs(per_day - std::round(per_day)) > 1e-9) throw std::invalid_argument("sample interval must divide a day");
  const int spd = static_cast<int>(std::lround(per_day));
  if (spd % cfg.controller.samples != 0) {
    throw std::invalid_argument("control interval must divide a day");
  }
  const int eval_begin = cfg.training_days * spd;
  const int eval_end = eval_begin + cfg.evaluation_days * spd;
  if (eval_end > series.steps()) throw std::invalid_argument("series is shorter than training plus evaluation days");
  if (series.elephants.empty()) throw std::invalid_argument("series has no elephant flows");

  PathSet paths = PathSet::build(topo, cfg.k_paths);
  if (paths.demand_count() != series.demand_count()) throw std::invalid_argument("series/topology demand mismatch");
  PathSet elephant_paths = paths.restrict(series.elephants);
  const Vector caps = topo.capacities();
  const Vector training_mean = series.values.topRows(eval_begin).colwise().mean().transpose();
  const RoutingSolution cst = const_route(paths, series.elephants, training_mean, cfg.delay, caps);

  Scenario sc{std::move(topo), paths, elephant_paths, series.elephants, std::move(series), caps, cfg.delay,
              spd, eval_begin, eval_end, training_mean, cst.routing, {}, {}};
  for (int s = eval_begin - 1; s < eval_end; ++s) {
    const RoutingSolution opt = opt_route(sc.paths, sc.series.at(s), sc.delay, caps);
    sc.opt_routing.push_back(opt.routing);
    sc.opt_delay.push_back(opt.delay);
  }
  return sc;
}

namespace {

Vector egress_of(const Scenario& sc, const Vector& w) { return node_egress(sc.paths, w, sc.topo.node_count()); }
Vector ingress_of(const Scenario& sc, const Vector& w) { return node_ingress(sc.paths, w, sc.topo.node_count()); }

}  // namespace

MetricsReport run_simulation(const Scenario& sc, const ExperimentConfig& cfg) {
  validate(cfg);
  const auto started = std::chrono::steady_clock::now();
  const ControllerConfig& cc = cfg.controller;
  const int N = cc.samples;
  if (sc.steps_per_day % N != 0) throw std::invalid_argument("control interval must divide a day");

  MetricsReport report;
  report.method = to_string(cfg.method);

  const RoutingConfig mice_base = shortest_path_routing(sc.paths);
  auto full_routing = [&](const RoutingConfig& el) {
    return embed_routing(sc.paths, mice_base, sc.elephants, sc.elephant_paths, el);
  };

  // Optional DeeP-TE machinery.
  std::unique_ptr<Controller> controller;
  if (cfg.method == Method::kDeepte) {
    const Matrix means = control_interval_means(sc.series.values.topRows(sc.eval_begin), N);
    controller = std::make_unique<Controller>(cc, sc.elephant_paths, fit_predictor(means, cc.past, cc.horizon),
                                              sc.delay, sc.capacities);
  }
  const int warmup = cfg.method == Method::kDeepte ? cc.past * N : (cfg.method == Method::kOpt ? 1 : N);
  const int start = sc.eval_begin - warmup;
  if (start < 0) throw std::invalid_argument("not enough history before the evaluation day");

  std::mt19937_64 rng(cfg.seed);
  RoutingConfig base = sc.const_routing;  // elephant decision in force
  RoutingConfig current = base;           // elephant routing applied this step
  RoutingConfig previous_full;
  Vector previous_w, previous_loads;
  RoutingConfig previous_applied;
  std::deque<SampleWindow> windows;
  SampleWindow open;

  for (int s = start; s < sc.eval_end; ++s) {
    const Vector w = sc.series.at(s);
    const int j = s % N;
    StepRecord rec;
    rec.step = s;
    rec.time_s = s * sc.series.tau;
    RoutingConfig full;

    switch (cfg.method) {
      case Method::kOpt:
        full = sc.opt_at(s);
        break;
      case Method::kConst:
        full = full_routing(sc.const_routing);
        break;
      case Method::kTg5:
      case Method::kTg30: {
        const bool decide_now = cfg.method == Method::kTg5 || j == 0;
        if (decide_now && s > start) {
          const TomogravityEstimate est = tomogravity_estimate(sc.paths, full_routing(previous_applied), previous_loads,
                                                               egress_of(sc, previous_w), ingress_of(sc, previous_w));
          current = tg_route(est, sc.paths, sc.elephants, sc.delay, sc.capacities).routing;
          rec.decision = true;
        }
        full = full_routing(current);
        break;
      }
      case Method::kDeepte: {
        if (j == 0) {
          if (static_cast<int>(windows.size()) >= cc.past) {
            const Decision dec = controller->decide(windows, base);
            base = dec.routing;
            rec.decision = true;
            rec.fallback = dec.report.fallback;
            rec.pe_rank = dec.report.excitation.rank;
          }
          current = base;
          open = SampleWindow{s / N, {}};
        } else {
          current = perturb(sc.elephant_paths, current, cc.perturb_fraction, cc.mixing, rng);
        }
        full = full_routing(current);
        break;
      }
    }

    const Vector loads = compute_link_loads(sc.paths, w, full);
    if (cfg.method == Method::kDeepte && j > 0) {
      open.records.push_back(
          SampleRecord{j - N / 2, current, aggregate_routing(controller->maps(), current), loads});
      if (j == N - 1) {
        windows.push_front(open);
        while (static_cast<int>(windows.size()) > cc.past) windows.pop_back();
      }
    }

    if (s >= sc.eval_begin) {
      rec.delay = total_delay(sc.delay, loads, sc.capacities);
      rec.opt_delay = sc.opt_delay_at(s);
      rec.pr = rec.opt_delay > 0.0 ? rec.delay / rec.opt_delay : 1.0;
      rec.rc = (full.fractions - previous_full.fractions).lpNorm<1>();
      if (rec.decision) {
        ++report.decisions;
        if (rec.fallback) ++report.fallbacks;
      }
      report.steps.push_back(rec);
    }
    previous_full = full;
    previous_w = w;
    previous_loads = loads;
    previous_applied = current;
  }
  finalize_metrics(report);
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("quantile of an empty sample");
  std::sort(v.begin(), v.end());
  const double pos = std::clamp(q, 0.0, 1.0) * (v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - lo) * (v[hi] - v[lo]);
}

void finalize_metrics(MetricsReport& r) {
  if (r.steps.empty()) return;
  std::vector<double> pr;
  double rc_sum = 0.0, decision_rc = 0.0;
  int decision_steps = 0;
  for (const StepRecord& s : r.steps) {
    pr.push_back(s.pr);
    rc_sum += s.rc;
    if (s.decision) {
      decision_rc += s.rc;
      ++decision_steps;
    }
  }
  r.mean_pr = std::accumulate(pr.begin(), pr.end(), 0.0) / pr.size();
  r.mean_rc = rc_sum / r.steps.size();
  r.median_pr = quantile(pr, 0.5);
  r.decision_rc = decision_steps > 0 ? decision_rc / decision_steps : 0.0;
}

SummaryTable aggregate_metrics(const std::vector<MetricsReport>& reports) {
  if (reports.empty()) throw std::invalid_argument("aggregate_metrics needs at least one report");
  SummaryTable table;
  std::vector<std::string> order;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_method;
  for (const MetricsReport& r : reports) {
    table.rows.push_back({r.series, r.method, r.mean_pr, r.mean_rc, r.median_pr, r.fallback_fraction()});
    if (!by_method.count(r.method)) order.push_back(r.method);
    by_method[r.method].first.push_back(r.mean_pr);
    by_method[r.method].second.push_back(r.mean_rc);
  }
  for (const std::string& m : order) {
    const auto& [pr, rc] = by_method[m];
    table.quartiles.push_back({m, static_cast<int>(pr.size()), quantile(pr, 0.25), quantile(pr, 0.5),
                               quantile(pr, 0.75), quantile(rc, 0.0), quantile(rc, 0.25), quantile(rc, 0.5),
                               quantile(rc, 0.75), quantile(rc, 1.0)});
  }
  return table;
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<int> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * (i + j) + 1.0;  // ties share the mean rank
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman_correlation(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("spearman: need two equal-length samples");
  const auto ra = ranks(a), rb = ranks(b);
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / ra.size();
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / rb.size();
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::nan("");
  return sab / std::sqrt(saa * sbb);
}

}  // namespace deepte
