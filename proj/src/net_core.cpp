#include "deepte/net_core.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <queue>
#include <set>
#include <sstream>

namespace deepte {

Topology::Topology(int node_count, std::vector<Edge> edges)
    : node_count_(node_count), edges_(std::move(edges)) {
  if (node_count_ <= 0) throw TopologyError("topology needs at least one node");
  out_edges_.resize(node_count_);
  in_degree_.assign(node_count_, 0);
  std::set<std::pair<int, int>> seen;
  for (int i = 0; i < edge_count(); ++i) {
    const Edge& e = edges_[i];
    if (e.src < 0 || e.src >= node_count_ || e.dst < 0 || e.dst >= node_count_) {
      throw TopologyError("edge " + std::to_string(i) + " references an unknown node");
    }
    if (e.src == e.dst) throw TopologyError("self-loop at node " + std::to_string(e.src));
    if (!(e.capacity > 0.0) || !std::isfinite(e.capacity)) {
      throw TopologyError("nonpositive capacity on edge " + std::to_string(e.src) + "->" +
                          std::to_string(e.dst));
    }
    if (!seen.emplace(e.src, e.dst).second) {
      throw TopologyError("duplicate edge " + std::to_string(e.src) + "->" + std::to_string(e.dst));
    }
    out_edges_[e.src].push_back(i);
    ++in_degree_[e.dst];
  }
}

std::optional<int> Topology::edge_index(int src, int dst) const {
  if (src < 0 || src >= node_count_) return std::nullopt;
  for (int e : out_edges_[src]) {
    if (edges_[e].dst == dst) return e;
  }
  return std::nullopt;
}

Vector Topology::capacities() const {
  Vector c(edge_count());
  for (int i = 0; i < edge_count(); ++i) c[i] = edges_[i].capacity;
  return c;
}

Topology parse_topology(std::istream& in, const std::string& source_name) {
  auto fail = [&](int line_no, const std::string& what) {
    throw TopologyError(source_name + ":" + std::to_string(line_no) + ": " + what);
  };

  std::optional<int> node_count;
  std::vector<Edge> edges;
  std::set<std::pair<int, int>> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string first;
    if (!(fields >> first)) continue;

    if (first == "nodes") {
      if (node_count) fail(line_no, "repeated nodes header");
      int n = 0;
      std::string extra;
      if (!(fields >> n) || n <= 0 || (fields >> extra)) fail(line_no, "expected `nodes <n>` with n > 0");
      node_count = n;
      continue;
    }
    if (!node_count) fail(line_no, "edge record before `nodes <n>` header");

    Edge e;
    std::string extra;
    try {
      std::size_t used = 0;
      e.src = std::stoi(first, &used);
      if (used != first.size()) throw std::invalid_argument(first);
    } catch (const std::exception&) {
      fail(line_no, "malformed source node `" + first + "`");
    }
    if (!(fields >> e.dst >> e.capacity) || (fields >> extra)) {
      fail(line_no, "expected `src dst capacity`");
    }
    if (e.src < 0 || e.src >= *node_count || e.dst < 0 || e.dst >= *node_count) {
      fail(line_no, "node id out of range");
    }
    if (e.src == e.dst) fail(line_no, "self-loop");
    if (!(e.capacity > 0.0) || !std::isfinite(e.capacity)) fail(line_no, "nonpositive capacity");
    if (!seen.emplace(e.src, e.dst).second) fail(line_no, "duplicate edge");
    edges.push_back(e);
  }
  if (!node_count) throw TopologyError(source_name + ": missing `nodes <n>` header");
  return Topology(*node_count, std::move(edges));
}

Topology load_topology(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TopologyError("cannot open topology file " + path.string());
  return parse_topology(in, path.string());
}

std::vector<Demand> all_demands(int node_count) {
  std::vector<Demand> out;
  out.reserve(static_cast<std::size_t>(node_count) * (node_count - 1));
  for (int s = 0; s < node_count; ++s) {
    for (int t = 0; t < node_count; ++t) {
      if (s != t) out.push_back({s, t});
    }
  }
  return out;
}

std::vector<int> path_nodes(const Topology& topo, const Path& path) {
  std::vector<int> nodes;
  if (path.empty()) return nodes;
  nodes.push_back(topo.edge(path.front()).src);
  for (int e : path) nodes.push_back(topo.edge(e).dst);
  return nodes;
}

namespace {

// Hop distance from every node to `target` along directed edges.
std::vector<int> hops_to(const Topology& topo, int target) {
  constexpr int kUnreachable = std::numeric_limits<int>::max();
  std::vector<std::vector<int>> in_edges(topo.node_count());
  for (int i = 0; i < topo.edge_count(); ++i) in_edges[topo.edge(i).dst].push_back(i);
  std::vector<int> dist(topo.node_count(), kUnreachable);
  std::queue<int> frontier;
  dist[target] = 0;
  frontier.push(target);
  while (!frontier.empty()) {
    int v = frontier.front();
    frontier.pop();
    for (int e : in_edges[v]) {
      int u = topo.edge(e).src;
      if (dist[u] == kUnreachable) {
        dist[u] = dist[v] + 1;
        frontier.push(u);
      }
    }
  }
  return dist;
}

struct PathSearch {
  const Topology& topo;
  const std::vector<int>& dist;
  int target;
  std::vector<char> on_path;
  std::vector<int> nodes;
  Path edges;
  std::vector<std::pair<std::vector<int>, Path>> found;

  // Simple paths with exactly `remaining` more hops; `dist` prunes branches
  // that cannot reach the target in time.
  void extend(int node, int remaining) {
    if (node == target) {
      if (remaining == 0) found.emplace_back(nodes, edges);
      return;
    }
    if (remaining == 0 || dist[node] > remaining) return;
    for (int e : topo.out_edges(node)) {
      int next = topo.edge(e).dst;
      if (on_path[next]) continue;
      on_path[next] = 1;
      nodes.push_back(next);
      edges.push_back(e);
      extend(next, remaining - 1);
      edges.pop_back();
      nodes.pop_back();
      on_path[next] = 0;
    }
  }
};

}  // namespace

std::vector<Path> k_shortest_paths(const Topology& topo, Demand demand, int k) {
  if (demand.src == demand.dst) throw TopologyError("demand source equals destination");
  if (demand.src < 0 || demand.src >= topo.node_count() || demand.dst < 0 ||
      demand.dst >= topo.node_count()) {
    throw TopologyError("demand endpoint out of range");
  }
  std::vector<Path> out;
  if (k <= 0) return out;
  const std::vector<int> dist = hops_to(topo, demand.dst);
  if (dist[demand.src] == std::numeric_limits<int>::max()) return out;

  PathSearch search{topo, dist, demand.dst, std::vector<char>(topo.node_count(), 0), {}, {}, {}};
  search.on_path[demand.src] = 1;
  search.nodes.push_back(demand.src);
  // Iterative deepening over the hop count; each layer is sorted by node
  // sequence before it is appended.
  for (int hops = dist[demand.src]; hops < topo.node_count() && static_cast<int>(out.size()) < k; ++hops) {
    search.found.clear();
    search.extend(demand.src, hops);
    std::sort(search.found.begin(), search.found.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& [nodes, edges] : search.found) {
      if (static_cast<int>(out.size()) == k) break;
      out.push_back(std::move(edges));
    }
  }
  return out;
}

PathSet::PathSet(int link_count, std::vector<Demand> demands, std::vector<std::vector<Path>> paths)
    : link_count_(link_count), demands_(std::move(demands)), paths_(std::move(paths)) {
  if (demands_.size() != paths_.size()) throw TopologyError("path list does not match demand list");
  offsets_.assign(1, 0);
  for (const auto& list : paths_) {
    for (const Path& p : list) {
      for (int e : p) {
        if (e < 0 || e >= link_count_) throw TopologyError("path references an unknown link");
      }
    }
    offsets_.push_back(offsets_.back() + static_cast<int>(list.size()));
  }
}

PathSet PathSet::build(const Topology& topo, int k) {
  std::vector<Demand> demands = all_demands(topo.node_count());
  std::vector<std::vector<Path>> paths;
  paths.reserve(demands.size());
  for (const Demand& d : demands) paths.push_back(k_shortest_paths(topo, d, k));
  return PathSet(topo.edge_count(), std::move(demands), std::move(paths));
}

SparseMatrix PathSet::incidence(int d) const {
  std::vector<Eigen::Triplet<double>> trips;
  for (int j = 0; j < path_count(d); ++j) {
    for (int e : paths_[d][j]) trips.emplace_back(e, j, 1.0);
  }
  SparseMatrix m(link_count_, path_count(d));
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

SparseMatrix PathSet::incidence() const { return load_operator(Vector::Ones(demand_count())); }

SparseMatrix PathSet::load_operator(const Vector& w) const {
  if (w.size() != demand_count()) throw std::invalid_argument("demand vector has wrong length");
  std::vector<Eigen::Triplet<double>> trips;
  for (int d = 0; d < demand_count(); ++d) {
    if (w[d] == 0.0) continue;
    for (int j = 0; j < path_count(d); ++j) {
      for (int e : paths_[d][j]) trips.emplace_back(e, offsets_[d] + j, w[d]);
    }
  }
  SparseMatrix m(link_count_, path_count());
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

PathSet PathSet::restrict(const std::vector<int>& demand_indices) const {
  std::vector<Demand> demands;
  std::vector<std::vector<Path>> paths;
  for (int d : demand_indices) {
    demands.push_back(demands_.at(d));
    paths.push_back(paths_.at(d));
  }
  return PathSet(link_count_, std::move(demands), std::move(paths));
}

RoutingConfig shortest_path_routing(const PathSet& ps) {
  RoutingConfig r{Vector::Zero(ps.path_count())};
  for (int d = 0; d < ps.demand_count(); ++d) {
    if (ps.path_count(d) > 0) r.fractions[ps.offset(d)] = 1.0;
  }
  return r;
}

RoutingConfig even_split_routing(const PathSet& ps) {
  RoutingConfig r{Vector::Zero(ps.path_count())};
  for (int d = 0; d < ps.demand_count(); ++d) {
    if (int n = ps.path_count(d); n > 0) r.split(ps, d).setConstant(1.0 / n);
  }
  return r;
}

bool is_valid_routing(const PathSet& ps, const RoutingConfig& r, double tol) {
  if (r.fractions.size() != ps.path_count()) return false;
  for (int d = 0; d < ps.demand_count(); ++d) {
    if (ps.path_count(d) == 0) continue;
    auto split = r.split(ps, d);
    if (split.minCoeff() < -tol || split.maxCoeff() > 1.0 + tol) return false;
    if (std::abs(split.sum() - 1.0) > tol) return false;
  }
  return true;
}

RoutingConfig project_to_simplex(const PathSet& ps, RoutingConfig r) {
  for (int d = 0; d < ps.demand_count(); ++d) {
    if (ps.path_count(d) == 0) continue;
    auto split = r.split(ps, d);
    split = split.cwiseMax(0.0).cwiseMin(1.0);
    double total = split.sum();
    if (total > 0.0) {
      split /= total;
    } else {
      split.setConstant(1.0 / ps.path_count(d));
    }
  }
  return r;
}

RoutingConfig embed_routing(const PathSet& full, const RoutingConfig& base,
                            const std::vector<int>& demand_indices, const PathSet& sub,
                            const RoutingConfig& sub_routing) {
  RoutingConfig out = base;
  for (std::size_t i = 0; i < demand_indices.size(); ++i) {
    out.split(full, demand_indices[i]) = sub_routing.split(sub, static_cast<int>(i));
  }
  return out;
}

RoutingConfig extract_routing(const PathSet& full, const RoutingConfig& r,
                              const std::vector<int>& demand_indices, const PathSet& sub) {
  RoutingConfig out{Vector::Zero(sub.path_count())};
  for (std::size_t i = 0; i < demand_indices.size(); ++i) {
    out.split(sub, static_cast<int>(i)) = r.split(full, demand_indices[i]);
  }
  return out;
}

Vector compute_link_loads(const PathSet& ps, const Vector& w, const RoutingConfig& r) {
  if (w.size() != ps.demand_count() || r.fractions.size() != ps.path_count()) {
    throw std::invalid_argument("compute_link_loads: dimension mismatch");
  }
  Vector y = Vector::Zero(ps.link_count());
  for (int d = 0; d < ps.demand_count(); ++d) {
    if (w[d] == 0.0) continue;
    for (int j = 0; j < ps.path_count(d); ++j) {
      const double flow = w[d] * r.fractions[ps.offset(d) + j];
      if (flow == 0.0) continue;
      for (int e : ps.path(d, j)) y[e] += flow;
    }
  }
  return y;
}

AggregationMaps::AggregationMaps(const PathSet& elephants)
    : demand_count_(elephants.demand_count()), path_count_(elephants.path_count()) {
  const int n_links = elephants.link_count();
  std::vector<std::vector<Eigen::Triplet<double>>> per_link(n_links);
  for (int d = 0; d < demand_count_; ++d) {
    for (int j = 0; j < elephants.path_count(d); ++j) {
      for (int e : elephants.path(d, j)) per_link[e].emplace_back(d, elephants.offset(d) + j, 1.0);
    }
  }
  std::vector<Eigen::Triplet<double>> stacked;
  link_maps_.reserve(n_links);
  for (int l = 0; l < n_links; ++l) {
    SparseMatrix m(demand_count_, path_count_);
    m.setFromTriplets(per_link[l].begin(), per_link[l].end());
    link_maps_.push_back(std::move(m));
    for (const auto& t : per_link[l]) stacked.emplace_back(l * demand_count_ + t.row(), t.col(), 1.0);
  }
  stacked_.resize(n_links * demand_count_, path_count_);
  stacked_.setFromTriplets(stacked.begin(), stacked.end());
}

Matrix aggregate_routing(const AggregationMaps& maps, const RoutingConfig& r_prime) {
  if (r_prime.fractions.size() != maps.path_count()) {
    throw std::invalid_argument("aggregate_routing: routing length does not match maps");
  }
  Matrix out(maps.demand_count(), maps.link_count());
  for (int l = 0; l < maps.link_count(); ++l) out.col(l) = maps.link_map(l) * r_prime.fractions;
  return out;
}

Disaggregation disaggregate_routing(const AggregationMaps& maps, const Matrix& r_agg) {
  if (r_agg.rows() != maps.demand_count() || r_agg.cols() != maps.link_count()) {
    throw std::invalid_argument("disaggregate_routing: r_agg has wrong shape");
  }
  const Matrix stacked = Matrix(maps.stacked());
  const Vector target = r_agg.reshaped();

  Eigen::ColPivHouseholderQR<Matrix> qr(stacked);
  qr.setThreshold(1e-10);
  Disaggregation out;
  out.column_rank = static_cast<int>(qr.rank());
  if (out.column_rank < maps.path_count()) {
    out.status = DisaggregationStatus::kAmbiguous;
    return out;
  }
  out.routing.fractions = qr.solve(target);
  out.residual = (stacked * out.routing.fractions - target).norm();
  out.status = out.residual > 1e-6 ? DisaggregationStatus::kInfeasible : DisaggregationStatus::kUnique;
  return out;
}

std::string to_string(DisaggregationStatus status) {
  switch (status) {
    case DisaggregationStatus::kUnique:
      return "unique";
    case DisaggregationStatus::kAmbiguous:
      return "ambiguous";
    case DisaggregationStatus::kInfeasible:
      return "infeasible";
  }
  return "unknown";
}

}  // namespace deepte
