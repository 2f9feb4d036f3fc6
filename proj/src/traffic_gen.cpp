#include "deepte/traffic_gen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <queue>
#include <random>
#include <stdexcept>

namespace deepte {

void validate(const GenParams& p) {
  if (p.days < 1) throw std::invalid_argument("days must be positive");
  if (!(p.tau > 0.0)) throw std::invalid_argument("sample interval must be positive");
  const double per_day = 86400.0 / p.tau;
  if (std::abs(per_day - std::round(per_day)) > 1e-9) {
    throw std::invalid_argument("sample interval must divide one day");
  }
  if (!(p.background_share > 0.0 && p.background_share < 1.0)) {
    throw std::invalid_argument("background share must lie in (0, 1)");
  }
  if (p.elephant_count < 0) throw std::invalid_argument("elephant count must be nonnegative");
  if (!(p.diurnal_period > 0.0)) throw std::invalid_argument("diurnal period must be positive");
  if (p.noise_level < 0.0 || p.amplitude < 0.0) throw std::invalid_argument("noise and amplitude must be nonnegative");
  if (p.key_nodes < 0) throw std::invalid_argument("key node count must be nonnegative");
  if (!(p.total_volume > 0.0)) throw std::invalid_argument("total volume must be positive");
}

std::vector<std::vector<int>> hop_distances(const Topology& topo) {
  const int n = topo.node_count();
  std::vector<std::vector<int>> dist(n, std::vector<int>(n, -1));
  for (int s = 0; s < n; ++s) {
    std::queue<int> frontier;
    dist[s][s] = 0;
    frontier.push(s);
    while (!frontier.empty()) {
      const int u = frontier.front();
      frontier.pop();
      for (int e : topo.out_edges(u)) {
        const int v = topo.edge(e).dst;
        if (dist[s][v] < 0) {
          dist[s][v] = dist[s][u] + 1;
          frontier.push(v);
        }
      }
    }
  }
  return dist;
}

namespace {

std::vector<int> foreground_candidates(const Topology& topo, const std::vector<Demand>& demands, int key_nodes) {
  std::vector<int> out;
  if (key_nodes == 0) {
    const auto dist = hop_distances(topo);
    for (std::size_t d = 0; d < demands.size(); ++d) {
      if (dist[demands[d].src][demands[d].dst] >= 2) out.push_back(static_cast<int>(d));
    }
    return out;
  }
  std::vector<int> nodes(topo.node_count());
  std::iota(nodes.begin(), nodes.end(), 0);
  std::stable_sort(nodes.begin(), nodes.end(), [&](int a, int b) {
    return topo.out_degree(a) + topo.in_degree(a) > topo.out_degree(b) + topo.in_degree(b);
  });
  nodes.resize(std::min<std::size_t>(nodes.size(), key_nodes));
  std::vector<char> key(topo.node_count(), 0);
  for (int v : nodes) key[v] = 1;
  for (std::size_t d = 0; d < demands.size(); ++d) {
    if (key[demands[d].src] && key[demands[d].dst]) out.push_back(static_cast<int>(d));
  }
  return out;
}

}  // namespace

DemandSeries generate_series(const Topology& topo, const GenParams& params) {
  validate(params);
  const int n = topo.node_count();
  const auto demands = all_demands(n);
  const int n_w = static_cast<int>(demands.size());
  const int steps = params.days * static_cast<int>(std::lround(86400.0 / params.tau));

  std::vector<int> candidates = foreground_candidates(topo, demands, params.key_nodes);
  if (params.elephant_count > static_cast<int>(candidates.size())) {
    throw std::invalid_argument("elephant count exceeds the available node pairs");
  }

  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::exponential_distribution<double> mass(1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  // Partial Fisher-Yates draw of the foreground pairs.
  for (int i = 0; i < params.elephant_count; ++i) {
    std::uniform_int_distribution<int> pick(i, static_cast<int>(candidates.size()) - 1);
    std::swap(candidates[i], candidates[pick(rng)]);
  }
  std::vector<int> elephants(candidates.begin(), candidates.begin() + params.elephant_count);
  std::sort(elephants.begin(), elephants.end());

  Vector out_mass(n), in_mass(n);
  for (int v = 0; v < n; ++v) out_mass[v] = mass(rng);
  for (int v = 0; v < n; ++v) in_mass[v] = mass(rng);

  const double share = n_w == params.elephant_count || params.elephant_count == 0 ? 1.0 : params.background_share;
  Vector base(n_w);
  for (int d = 0; d < n_w; ++d) base[d] = out_mass[demands[d].src] * in_mass[demands[d].dst];
  base *= share * params.total_volume / base.sum();
  if (params.elephant_count > 0) {
    Vector fg(params.elephant_count);
    for (int i = 0; i < params.elephant_count; ++i) fg[i] = 0.5 + unit(rng);
    fg *= (1.0 - share) * params.total_volume / fg.sum();
    for (int i = 0; i < params.elephant_count; ++i) base[elephants[i]] = fg[i];
  }

  Vector phase(n_w);
  for (int d = 0; d < n_w; ++d) phase[d] = 2.0 * std::numbers::pi * unit(rng);

  DemandSeries series;
  series.values.resize(steps, n_w);
  series.tau = params.tau;
  series.node_count = n;
  series.elephants = elephants;
  series.seed = params.seed;
  const double omega = 2.0 * std::numbers::pi / params.diurnal_period;
  for (int s = 0; s < steps; ++s) {
    const double t = s * params.tau;
    for (int d = 0; d < n_w; ++d) {
      const double noise = params.noise_level > 0.0 ? params.noise_level * gauss(rng) : 0.0;
      const double v = base[d] * (1.0 + params.amplitude * std::sin(omega * t + phase[d])) * (1.0 + noise);
      series.values(s, d) = std::max(0.0, v);
    }
  }
  return series;
}

DemandSeries interval_polynomial_fit(const DemandSeries& series, int samples, int degree) {
  if (samples < 1 || series.steps() % samples != 0) throw std::invalid_argument("samples must divide the series length");
  if (degree < 0 || degree >= samples) throw std::invalid_argument("polynomial degree out of range");
  Matrix vander(samples, degree + 1);
  for (int t = 0; t < samples; ++t) {
    const double o = t - 0.5 * (samples - 1);
    for (int j = 0; j <= degree; ++j) vander(t, j) = std::pow(o, j);
  }
  // Orthogonal projector onto the polynomial span.
  const Eigen::HouseholderQR<Matrix> qr(vander);
  const Matrix q = qr.householderQ() * Matrix::Identity(samples, degree + 1);
  const Matrix proj = q * q.transpose();
  DemandSeries out = series;
  for (int b = 0; b < series.steps(); b += samples) {
    out.values.middleRows(b, samples) = (proj * series.values.middleRows(b, samples)).cwiseMax(0.0);
  }
  return out;
}

DemandSeries add_noise(const DemandSeries& series, double level, std::uint64_t seed) {
  if (level < 0.0) throw std::invalid_argument("noise level must be nonnegative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  DemandSeries out = series;
  for (int s = 0; s < out.steps(); ++s) {
    for (int d = 0; d < out.demand_count(); ++d) out.values(s, d) = std::max(0.0, out.values(s, d) * (1.0 + level * gauss(rng)));
  }
  return out;
}

std::vector<int> select_elephants(const Vector& tm, int count) {
  if (count < 0 || count > tm.size()) throw std::invalid_argument("select_elephants: count out of range");
  std::vector<int> order(tm.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return tm[a] > tm[b]; });
  order.resize(count);
  std::sort(order.begin(), order.end());
  return order;
}

std::vector<int> select_elephants(const Matrix& values, int count) {
  return select_elephants(Vector(values.colwise().mean().transpose()), count);
}

ScaleResult scale_series(const DemandSeries& series, const Topology& topo, const PathSet& pathset,
                         double target, const RoutingOracle& oracle, int probe_steps, double max_utilization) {
  if (!(target > 0.0)) throw std::invalid_argument("target utilization must be positive");
  if (series.steps() == 0 || series.values.maxCoeff() <= 0.0) {
    throw std::invalid_argument("cannot scale an all-zero series");
  }
  if (pathset.demand_count() != series.demand_count()) throw std::invalid_argument("series/path set mismatch");
  const Vector mean_tm = series.values.colwise().mean().transpose();
  for (int d = 0; d < pathset.demand_count(); ++d) {
    if (pathset.path_count(d) == 0 && mean_tm[d] > 0.0) {
      throw std::invalid_argument("demand " + std::to_string(d) + " carries traffic but has no path");
    }
  }

  probe_steps = std::clamp(probe_steps, 1, series.steps());
  std::vector<int> probes;
  for (int i = 0; i < probe_steps; ++i) {
    probes.push_back(static_cast<int>((i + 0.5) * series.steps() / probe_steps));
  }
  const Vector caps = topo.capacities();

  struct Level {
    double mean = 0.0, max = 0.0;
  };
  auto measure = [&](double gamma) {
    Level level;
    for (int s : probes) {
      const Vector w = gamma * series.at(s);
      const Vector u = compute_link_loads(pathset, w, oracle(w)).cwiseQuotient(caps);
      level.mean += u.mean() / probes.size();
      level.max = std::max(level.max, u.maxCoeff());
    }
    return level;
  };
  auto below = [&](const Level& l) { return l.mean < target && l.max < max_utilization; };

  const Level at_one = measure(1.0);
  double lo = 0.0, hi = target / std::max(at_one.mean, 1e-300);
  while (below(measure(hi))) {
    lo = hi;
    hi *= 2.0;
  }
  for (int iter = 0; iter < 40 && hi - lo > 1e-6 * hi; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (below(measure(mid))) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  // hi is the smallest probed gamma meeting the target or the ceiling.
  ScaleResult out;
  out.gamma = hi;
  out.series = series;
  out.series.values *= hi;
  const Level final_level = measure(hi);
  out.mean_utilization = final_level.mean;
  out.max_utilization = final_level.max;
  return out;
}

}  // namespace deepte
