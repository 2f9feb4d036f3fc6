#ifndef DEEPTE_NET_CORE_HPP_
#define DEEPTE_NET_CORE_HPP_

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace deepte {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

class TopologyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Edge {
  int src = 0;
  int dst = 0;
  double capacity = 0.0;  // Mbps
};

// Directed capacitated graph. Edge indices are dense and follow insertion
// order, so they are stable for the lifetime of the object.
class Topology {
 public:
  Topology(int node_count, std::vector<Edge> edges);

  int node_count() const { return node_count_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const Edge& edge(int index) const { return edges_.at(index); }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<int>& out_edges(int node) const { return out_edges_.at(node); }
  std::optional<int> edge_index(int src, int dst) const;
  Vector capacities() const;
  int out_degree(int node) const { return static_cast<int>(out_edges_.at(node).size()); }
  int in_degree(int node) const { return in_degree_.at(node); }

 private:
  int node_count_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> out_edges_;
  std::vector<int> in_degree_;
};

// Reads the `nodes <n>` header followed by `src dst capacity` records.
// Blank lines and `#` comments are ignored. Errors carry the line number.
Topology parse_topology(std::istream& in, const std::string& source_name = "<stream>");
Topology load_topology(const std::filesystem::path& path);

struct Demand {
  int src = 0;
  int dst = 0;
  friend bool operator==(const Demand&, const Demand&) = default;
};

// All ordered pairs (s, t), s != t, in row-major order: index = s*(n-1) + t - (t > s).
std::vector<Demand> all_demands(int node_count);

// A path is the sequence of edge indices it traverses.
using Path = std::vector<int>;

std::vector<int> path_nodes(const Topology& topo, const Path& path);

// Up to k loop-free paths ordered by hop count, ties broken by the
// lexicographic order of the node sequence. Empty when dst is unreachable.
std::vector<Path> k_shortest_paths(const Topology& topo, Demand demand, int k);

// Candidate paths for a list of demands. Routing vectors index paths
// demand by demand: r = [r_[0]; r_[1]; ...].
class PathSet {
 public:
  PathSet(int link_count, std::vector<Demand> demands, std::vector<std::vector<Path>> paths);

  // Every ordered pair of the topology with its k shortest paths.
  static PathSet build(const Topology& topo, int k);

  int link_count() const { return link_count_; }
  int demand_count() const { return static_cast<int>(demands_.size()); }
  int path_count() const { return offsets_.back(); }
  int path_count(int d) const { return offsets_[d + 1] - offsets_[d]; }
  int offset(int d) const { return offsets_[d]; }
  const Demand& demand(int d) const { return demands_[d]; }
  const std::vector<Demand>& demands() const { return demands_; }
  const std::vector<Path>& paths(int d) const { return paths_[d]; }
  const Path& path(int d, int j) const { return paths_[d][j]; }

  // P_d: link_count x path_count(d), entry 1 where the path uses the link.
  SparseMatrix incidence(int d) const;

  // Path-link incidence for all paths, link_count x path_count().
  SparseMatrix incidence() const;

  // D(w) = [w_1 P_1, ..., w_n P_n], so that loads = D(w) r.
  SparseMatrix load_operator(const Vector& w) const;

  // Sub-problem over the listed demands (e.g. the elephant flows).
  PathSet restrict(const std::vector<int>& demand_indices) const;

 private:
  int link_count_;
  std::vector<Demand> demands_;
  std::vector<std::vector<Path>> paths_;
  std::vector<int> offsets_;
};

// Split fractions per (demand, candidate path).
struct RoutingConfig {
  Vector fractions;

  auto split(const PathSet& ps, int d) const { return fractions.segment(ps.offset(d), ps.path_count(d)); }
  auto split(const PathSet& ps, int d) { return fractions.segment(ps.offset(d), ps.path_count(d)); }
};

// Everything on the first (shortest) candidate path.
RoutingConfig shortest_path_routing(const PathSet& ps);
RoutingConfig even_split_routing(const PathSet& ps);

// Box and per-demand simplex check. Demands without paths are skipped.
bool is_valid_routing(const PathSet& ps, const RoutingConfig& r, double tol = 1e-9);

// Clamps to [0, 1] and renormalizes each demand onto its simplex.
RoutingConfig project_to_simplex(const PathSet& ps, RoutingConfig r);

// Writes the elephant sub-routing back into a full routing vector.
RoutingConfig embed_routing(const PathSet& full, const RoutingConfig& base,
                            const std::vector<int>& demand_indices, const PathSet& sub,
                            const RoutingConfig& sub_routing);
RoutingConfig extract_routing(const PathSet& full, const RoutingConfig& r,
                              const std::vector<int>& demand_indices, const PathSet& sub);

// y = sum_d P_d w_d r_[d]
Vector compute_link_loads(const PathSet& ps, const Vector& w, const RoutingConfig& r);

// Per-link aggregation of elephant routing: M_l[d, p] = 1 iff demand d may
// use path p and p traverses link l.
class AggregationMaps {
 public:
  explicit AggregationMaps(const PathSet& elephants);

  int demand_count() const { return demand_count_; }
  int path_count() const { return path_count_; }
  int link_count() const { return static_cast<int>(link_maps_.size()); }
  const SparseMatrix& link_map(int l) const { return link_maps_.at(l); }
  // Vertical stack of the link maps in edge-index order.
  const SparseMatrix& stacked() const { return stacked_; }

 private:
  int demand_count_;
  int path_count_;
  std::vector<SparseMatrix> link_maps_;
  SparseMatrix stacked_;
};

// Column l of the result is M_l r'.
Matrix aggregate_routing(const AggregationMaps& maps, const RoutingConfig& r_prime);

enum class DisaggregationStatus { kUnique, kAmbiguous, kInfeasible };

struct Disaggregation {
  DisaggregationStatus status = DisaggregationStatus::kInfeasible;
  RoutingConfig routing;
  double residual = 0.0;
  int column_rank = 0;
};

// Recovers r' from r^agg by least squares, with an explicit column-rank check
// on the stacked map. The routing is only meaningful when status is kUnique.
Disaggregation disaggregate_routing(const AggregationMaps& maps, const Matrix& r_agg);

std::string to_string(DisaggregationStatus status);

}  // namespace deepte

#endif  // DEEPTE_NET_CORE_HPP_
