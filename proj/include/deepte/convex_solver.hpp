#ifndef DEEPTE_CONVEX_SOLVER_HPP_
#define DEEPTE_CONVEX_SOLVER_HPP_

#include <iosfwd>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "deepte/net_core.hpp"

namespace deepte {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// minimize   c'x + 1/2 sum_j q_j x_j^2
// subject to A x = b,  lo <= x <= hi
//
// q is the diagonal of a PSD quadratic term. Piecewise-linear and L1 terms
// are lowered by the caller (epigraph variables, variable splitting).
class ConvexProgram {
 public:
  ConvexProgram() = default;

  // Returns the index of the first new variable.
  int add_variables(int count, double lo, double hi, double linear = 0.0, double quadratic = 0.0);
  int add_variable(double lo, double hi, double linear = 0.0, double quadratic = 0.0) {
    return add_variables(1, lo, hi, linear, quadratic);
  }
  void set_linear(int var, double value) { linear_.at(var) = value; }
  void add_linear(int var, double value) { linear_.at(var) += value; }
  void set_quadratic(int var, double value);
  void set_bounds(int var, double lo, double hi);

  // Returns the new row index. Coefficients for repeated variables add up.
  int add_equality(const std::vector<std::pair<int, double>>& terms, double rhs);
  int add_equality_row(double rhs);
  void add_coefficient(int row, int var, double value);

  int variable_count() const { return static_cast<int>(lower_.size()); }
  int equality_count() const { return static_cast<int>(rhs_.size()); }
  std::size_t nonzero_count() const { return triplets_.size(); }

  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }
  const std::vector<double>& linear() const { return linear_; }
  const std::vector<double>& quadratic() const { return quadratic_; }
  const std::vector<double>& rhs() const { return rhs_; }
  const std::vector<Eigen::Triplet<double>>& triplets() const { return triplets_; }

  SparseMatrix equality_matrix() const;

  double objective(const Vector& x) const;
  // Largest absolute violation of A x = b.
  double equality_residual(const Vector& x) const;
  // Largest violation of the box bounds.
  double bound_violation(const Vector& x) const;

  // Throws std::invalid_argument on inconsistent bounds, negative or
  // non-finite quadratic entries, or out-of-range coefficients.
  void validate() const;

  // Plain-text dump for cross-checking with an external solver.
  void dump(std::ostream& out) const;
  static ConvexProgram parse(std::istream& in);

 private:
  std::vector<double> lower_, upper_, linear_, quadratic_;
  std::vector<double> rhs_;
  std::vector<Eigen::Triplet<double>> triplets_;
};

enum class SolveStatus { kOptimal, kInfeasible, kIterationLimit };

std::string to_string(SolveStatus status);

struct SolverOptions {
  // Relative tolerance on primal residual, dual residual and duality gap.
  double tolerance = 1e-8;
  int max_iterations = 200;
};

struct SolveReport {
  SolveStatus status = SolveStatus::kIterationLimit;
  Vector solution;
  double objective = 0.0;
  double max_residual = 0.0;
  int iterations = 0;
};

// Primal-dual interior point (Mehrotra predictor-corrector) on the augmented
// system, after a presolve that eliminates blocks of free variables which
// carry a positive quadratic weight and appear only in their own equality
// rows. Identical inputs give identical reports.
SolveReport solve(const ConvexProgram& program, const SolverOptions& options = {});
SolveReport solve(const ConvexProgram& program, double tolerance, int max_iterations);

struct FeasibilityReport {
  bool feasible = false;
  // Smallest achievable L1 violation of the equalities within the bounds.
  double residual = 0.0;
};

// Phase-1 solve: minimizes the L1 equality violation subject to the bounds.
FeasibilityReport check_feasibility(const ConvexProgram& program, double tolerance = 1e-6);

}  // namespace deepte

#endif  // DEEPTE_CONVEX_SOLVER_HPP_
