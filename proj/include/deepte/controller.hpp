#ifndef DEEPTE_CONTROLLER_HPP_
#define DEEPTE_CONTROLLER_HPP_

#include <cstdint>
#include <deque>
#include <random>
#include <vector>

#include "deepte/convex_solver.hpp"
#include "deepte/delay_model.hpp"
#include "deepte/net_core.hpp"
#include "deepte/predictor.hpp"

namespace deepte {

// Zero-mean basis functions on the intra-interval offsets
// -N/2 + 1, ..., N/2 - 1: phi_1(o) = o, phi_2(o) = o^2 - mean(o^2).
class BasisSet {
 public:
  BasisSet(int samples_per_interval, int count);

  int count() const { return count_; }
  int samples_per_interval() const { return n_; }
  const std::vector<int>& offsets() const { return offsets_; }
  double value(int i, int offset) const;  // i is 0-based

  // Vertical stack of diag(phi_i(offsets) ⊗ 1_{n_l}), (count * n_g) x n_g
  // with n_g = (N - 1) n_l and columns ordered sample-major.
  Matrix s_matrix(int link_count) const;

 private:
  int n_;
  int count_;
  std::vector<int> offsets_;
};

struct SampleRecord {
  int offset = 0;          // position within the control interval, -N/2 + 1 ... N/2 - 1
  RoutingConfig r_prime;   // elephant routing in effect
  Matrix r_agg;            // n'_w x n_l
  Vector loads;            // measured link loads
};

struct SampleWindow {
  int interval = 0;
  std::vector<SampleRecord> records;
};

enum class RegularizerForm { kSquaredNorm, kNorm };

struct ControllerConfig {
  double alpha1 = 1000.0;
  double alpha2 = 1.0;
  // Weight of the squared misfit allowed on the input rows of the data
  // equations; 0 makes them hard equalities.
  double data_slack = 1e3;
  RegularizerForm regularizer = RegularizerForm::kSquaredNorm;
  int past = 3;            // L
  int horizon = 2;         // H
  int samples = 6;         // N
  int basis_count = 2;     // n_phi
  double discount = 0.9;
  double perturb_fraction = 0.05;
  double mixing = 0.05;
  SolverOptions solver;
};

void validate(const ControllerConfig& cfg);

// Mixes a flat Dirichlet draw into ceil(fraction * n'_w) (at least one)
// uniformly chosen demands: r <- (1 - mixing) r + mixing r_hat.
RoutingConfig perturb(const PathSet& elephants, const RoutingConfig& r, double fraction, double mixing,
                      std::mt19937_64& rng);

// Data matrix of the per-link model, one column per (sample, link):
// [r_agg_l(s); phi_i(s) r_agg_l(s) ...; e_l; phi_i(s) e_l ...; y_l(s)].
// The last row carries the loads; the rest is the input part.
Matrix window_data_matrix(const SampleWindow& window, const BasisSet& basis);

struct ExcitationReport {
  bool full_rank = false;
  int rank = 0;
  int required = 0;  // (n'_w + n_l)(1 + n_phi)
};

// Numerical row rank of the input part of window_data_matrix.
ExcitationReport check_persistent_excitation(const SampleWindow& window, const BasisSet& basis,
                                             double relative_tolerance = 1e-9);

// Minimum-norm solution of the data equations for one candidate routing:
// the load each link would carry if r_prime were applied to the window's
// interval-mean traffic.
Vector dummy_loads(const SampleWindow& window, const BasisSet& basis, const AggregationMaps& maps,
                   const RoutingConfig& r_prime);

// Variable layout of the program produced by build_program.
struct ProgramLayout {
  int past = 0, horizon = 0, link_count = 0, elephant_count = 0, path_count = 0, g_size = 0;
  std::vector<int> r_prime;  // per h, first index of n'_p entries
  std::vector<int> r_agg;    // per h, (l * n'_w + d)
  std::vector<int> loads;    // per h, n_l entries
  std::vector<int> dummy;    // per (p - 1) * H + h, n_l entries
  std::vector<int> g;        // per ((p - 1) * H + h) * n_l + l, g_size entries

  int dummy_index(int p, int h, int l) const { return dummy[(p - 1) * horizon + h] + l; }
  int g_index(int p, int h, int l) const { return g[((p - 1) * horizon + h) * link_count + l]; }
};

struct DeepteProgram {
  ConvexProgram program;
  ProgramLayout layout;
};

// windows[p - 1] holds the samples of interval k - p.
DeepteProgram build_program(const std::vector<SampleWindow>& windows, const PredictorModel& model,
                            const RoutingConfig& r_prev, const ControllerConfig& cfg, const BasisSet& basis,
                            const AggregationMaps& maps, const PathSet& elephants, const DelayFunction& f,
                            const Vector& capacities);

struct DecisionReport {
  SolveStatus status = SolveStatus::kIterationLimit;
  bool fallback = false;
  double objective = 0.0;
  int iterations = 0;
  ExcitationReport excitation;  // of the most recent window
};

struct Decision {
  RoutingConfig routing;
  DecisionReport report;
};

class Controller {
 public:
  Controller(ControllerConfig cfg, PathSet elephants, PredictorModel model, DelayFunction f, Vector capacities);

  const ControllerConfig& config() const { return cfg_; }
  const BasisSet& basis() const { return basis_; }
  const AggregationMaps& maps() const { return maps_; }
  const PathSet& elephants() const { return elephants_; }

  // windows.front() is the most recent completed interval. Falls back to
  // r_prev when the program is not solved to optimality.
  Decision decide(const std::deque<SampleWindow>& windows, const RoutingConfig& r_prev) const;

 private:
  ControllerConfig cfg_;
  PathSet elephants_;
  PredictorModel model_;
  DelayFunction f_;
  Vector capacities_;
  BasisSet basis_;
  AggregationMaps maps_;
};

}  // namespace deepte

#endif  // DEEPTE_CONTROLLER_HPP_
