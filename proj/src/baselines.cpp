#include "deepte/baselines.hpp"

#include <stdexcept>

#include <Eigen/QR>

namespace deepte {

RoutingSolution optimize_routing(const PathSet& ps, const Vector& w, const Vector& background,
                                 const DelayFunction& f, const Vector& caps, const SolverOptions& options) {
  const int n_l = ps.link_count();
  if (w.size() != ps.demand_count() || background.size() != n_l || caps.size() != n_l) {
    throw std::invalid_argument("optimize_routing: dimension mismatch");
  }
  ConvexProgram prog;
  const int r0 = prog.add_variables(ps.path_count(), 0.0, 1.0);
  const int y0 = prog.add_variables(n_l, -kInfinity, kInfinity);
  const int c0 = prog.add_variables(n_l, -kInfinity, kInfinity, 1.0);

  std::vector<int> load_row(n_l);
  for (int l = 0; l < n_l; ++l) {
    load_row[l] = prog.add_equality({{y0 + l, 1.0}}, background[l]);
  }
  RoutingConfig fallback = shortest_path_routing(ps);
  for (int d = 0; d < ps.demand_count(); ++d) {
    const int np = ps.path_count(d);
    if (np == 0) continue;
    if (w[d] <= 0.0) {
      // Idle demands keep their shortest path.
      for (int j = 0; j < np; ++j) {
        const double v = fallback.fractions[ps.offset(d) + j];
        prog.set_bounds(r0 + ps.offset(d) + j, v, v);
      }
      continue;
    }
    const int row = prog.add_equality_row(1.0);
    for (int j = 0; j < np; ++j) {
      const int var = r0 + ps.offset(d) + j;
      prog.add_coefficient(row, var, 1.0);
      for (int l : ps.path(d, j)) prog.add_coefficient(load_row[l], var, -w[d]);
    }
  }
  for (int l = 0; l < n_l; ++l) {
    for (const EpigraphTerm& t : epigraph_terms(f, l, caps[l])) {
      const int s = prog.add_variable(0.0, kInfinity);
      prog.add_equality({{c0 + l, 1.0}, {y0 + l, -t.load_coefficient}, {s, -1.0}}, t.constant);
    }
  }
  const SolveReport report = solve(prog, options);
  RoutingSolution out;
  out.status = report.status;
  RoutingConfig r{report.solution.segment(r0, ps.path_count())};
  out.routing = project_to_simplex(ps, r);
  out.delay = total_delay(f, background + compute_link_loads(ps, w, out.routing), caps);
  return out;
}

RoutingSolution opt_route(const PathSet& ps, const Vector& w, const DelayFunction& f, const Vector& caps) {
  return optimize_routing(ps, w, Vector::Zero(ps.link_count()), f, caps);
}

RoutingSolution route_elephants(const PathSet& full, const std::vector<int>& elephants, const Vector& w,
                                const DelayFunction& f, const Vector& caps) {
  if (w.size() != full.demand_count()) throw std::invalid_argument("route_elephants: dimension mismatch");
  Vector mice = w;
  Vector w_el(elephants.size());
  for (std::size_t i = 0; i < elephants.size(); ++i) {
    w_el[i] = w[elephants[i]];
    mice[elephants[i]] = 0.0;
  }
  const Vector background = compute_link_loads(full, mice, shortest_path_routing(full));
  return optimize_routing(full.restrict(elephants), w_el, background, f, caps);
}

RoutingSolution const_route(const PathSet& full, const std::vector<int>& elephants, const Vector& training_mean,
                            const DelayFunction& f, const Vector& caps) {
  return route_elephants(full, elephants, training_mean, f, caps);
}

Matrix routing_load_map(const PathSet& ps, const RoutingConfig& r) {
  Matrix a = Matrix::Zero(ps.link_count(), ps.demand_count());
  for (int d = 0; d < ps.demand_count(); ++d) {
    for (int j = 0; j < ps.path_count(d); ++j) {
      for (int l : ps.path(d, j)) a(l, d) += r.fractions[ps.offset(d) + j];
    }
  }
  return a;
}

Vector node_egress(const PathSet& ps, const Vector& w, int node_count) {
  Vector out = Vector::Zero(node_count);
  for (int d = 0; d < ps.demand_count(); ++d) out[ps.demand(d).src] += w[d];
  return out;
}

Vector node_ingress(const PathSet& ps, const Vector& w, int node_count) {
  Vector out = Vector::Zero(node_count);
  for (int d = 0; d < ps.demand_count(); ++d) out[ps.demand(d).dst] += w[d];
  return out;
}

namespace {

// Smallest-norm correction of `start` that fits a x = m in least squares.
Vector fit_from(const Matrix& a, const Vector& m, const Vector& start) {
  if (a.cols() == 0) return start;
  return start + a.completeOrthogonalDecomposition().solve(m - a * start);
}

}  // namespace

TomogravityEstimate tomogravity_estimate(const PathSet& ps, const RoutingConfig& routing, const Vector& loads,
                                         const Vector& egress, const Vector& ingress) {
  const int n_w = ps.demand_count();
  const int n = static_cast<int>(egress.size());
  if (loads.size() != ps.link_count() || ingress.size() != n) {
    throw std::invalid_argument("tomogravity_estimate: dimension mismatch");
  }
  for (int d = 0; d < n_w; ++d) {
    if (ps.demand(d).src >= n || ps.demand(d).dst >= n) {
      throw std::invalid_argument("tomogravity_estimate: node totals do not cover the demands");
    }
  }
  const int n_l = ps.link_count();
  Matrix a(n_l + 2 * n, n_w);
  a.topRows(n_l) = routing_load_map(ps, routing);
  a.bottomRows(2 * n).setZero();
  for (int d = 0; d < n_w; ++d) {
    a(n_l + ps.demand(d).src, d) = 1.0;
    a(n_l + n + ps.demand(d).dst, d) = 1.0;
  }
  Vector m(n_l + 2 * n);
  m << loads, egress, ingress;

  TomogravityEstimate out;
  out.prior = Vector::Zero(n_w);
  double norm = 0.0;
  for (int d = 0; d < n_w; ++d) norm += egress[ps.demand(d).src] * ingress[ps.demand(d).dst];
  if (norm > 0.0) {
    const double total = egress.sum();
    for (int d = 0; d < n_w; ++d) {
      out.prior[d] = total * egress[ps.demand(d).src] * ingress[ps.demand(d).dst] / norm;
    }
  }

  Vector w = fit_from(a, m, out.prior).cwiseMax(0.0);
  std::vector<int> support;
  for (int d = 0; d < n_w; ++d) {
    if (w[d] > 0.0) support.push_back(d);
  }
  if (static_cast<int>(support.size()) < n_w) {
    Matrix a_s(a.rows(), support.size());
    Vector g_s(support.size());
    for (std::size_t i = 0; i < support.size(); ++i) {
      a_s.col(i) = a.col(support[i]);
      g_s[i] = out.prior[support[i]];
    }
    const Vector refit = fit_from(a_s, m, g_s).cwiseMax(0.0);
    w.setZero();
    for (std::size_t i = 0; i < support.size(); ++i) w[support[i]] = refit[i];
  }
  out.estimate = w;
  out.residual = (a * w - m).norm();
  return out;
}

RoutingSolution tg_route(const TomogravityEstimate& estimate, const PathSet& full, const std::vector<int>& elephants,
                         const DelayFunction& f, const Vector& caps) {
  return route_elephants(full, elephants, estimate.estimate, f, caps);
}

}  // namespace deepte
