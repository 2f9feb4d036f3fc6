#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "deepte/convex_solver.hpp"
#include "solver_oracle.hpp"

using namespace deepte;
using deepte::testing::DenseProblem;
using deepte::testing::random_problem;

TEST(ConvexSolver, SingleVariableExamples) {
  ConvexProgram p;
  const int x = p.add_variable(0.0, kInfinity, 1.0);
  p.add_equality({{x, 1.0}}, 3.0);
  const SolveReport r = solve(p);
  ASSERT_EQ(r.status, SolveStatus::kOptimal);
  EXPECT_NEAR(r.solution[0], 3.0, 1e-7);
  EXPECT_NEAR(r.objective, 3.0, 1e-7);

  ConvexProgram q;
  q.add_variable(-kInfinity, kInfinity, -1.0, 1.0);
  const SolveReport s = solve(q);
  ASSERT_EQ(s.status, SolveStatus::kOptimal);
  EXPECT_NEAR(s.solution[0], 1.0, 1e-7);
  EXPECT_NEAR(s.objective, -0.5, 1e-7);
}

TEST(ConvexSolver, InfeasibleEquality) {
  ConvexProgram p;
  const int x = p.add_variable(0.0, 1.0, 1.0);
  p.add_equality({{x, 1.0}}, 3.0);
  EXPECT_NE(solve(p).status, SolveStatus::kOptimal);
  const FeasibilityReport f = check_feasibility(p);
  EXPECT_FALSE(f.feasible);
  EXPECT_NEAR(f.residual, 2.0, 1e-6);
}

TEST(ConvexSolver, FeasibilityOfConsistentSystem) {
  std::mt19937_64 rng(3);
  const DenseProblem d = random_problem(6, 3, false, rng);
  const FeasibilityReport f = check_feasibility(d.program());
  EXPECT_TRUE(f.feasible);
  EXPECT_LT(f.residual, 1e-6);
  EXPECT_TRUE(check_feasibility(ConvexProgram{}).feasible);
}

TEST(ConvexSolver, RandomLpsMatchVertexEnumeration) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + trial % 7;
    const int m = trial % std::min(n, 4);
    const DenseProblem d = random_problem(n, m, false, rng);
    const auto ref = deepte::testing::lp_vertex_enumeration(d);
    ASSERT_TRUE(ref.has_value());
    const SolveReport r = solve(d.program());
    ASSERT_EQ(r.status, SolveStatus::kOptimal) << trial;
    EXPECT_NEAR(r.objective, d.objective(*ref), 1e-6) << trial;
    EXPECT_LT(d.program().equality_residual(r.solution), 1e-7);
    EXPECT_LT(d.program().bound_violation(r.solution), 1e-9);
  }
}

TEST(ConvexSolver, RandomDiagonalQpsMatchActiveSetEnumeration) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + trial % 6;
    const int m = trial % std::min(n, 3);
    const DenseProblem d = random_problem(n, m, true, rng);
    const auto ref = deepte::testing::qp_active_set_enumeration(d);
    ASSERT_TRUE(ref.has_value());
    const SolveReport r = solve(d.program());
    ASSERT_EQ(r.status, SolveStatus::kOptimal) << trial;
    EXPECT_NEAR(r.objective, d.objective(*ref), 1e-6) << trial;
    EXPECT_LT((r.solution - *ref).cwiseAbs().maxCoeff(), 1e-5) << trial;
  }
}

TEST(ConvexSolver, NoFeasibleDirectionImproves) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const DenseProblem d = random_problem(7, 2, trial % 2 == 0, rng);
    const SolveReport r = solve(d.program());
    ASSERT_EQ(r.status, SolveStatus::kOptimal);
    const Matrix null = Eigen::FullPivLU<Matrix>(d.A).kernel();
    for (int k = 0; k < 200; ++k) {
      Vector dir = null * Vector::NullaryExpr(null.cols(), [&] { return z(rng); });
      // Largest step that stays inside the box.
      double t = 1e-3;
      for (int j = 0; j < 7; ++j) {
        if (dir[j] > 0) t = std::min(t, (d.hi[j] - r.solution[j]) / dir[j]);
        if (dir[j] < 0) t = std::min(t, (d.lo[j] - r.solution[j]) / dir[j]);
      }
      if (t <= 0) continue;
      EXPECT_GE(d.objective(r.solution + t * dir), r.objective - 1e-7);
    }
  }
}

TEST(ConvexSolver, LinearCostScalingKeepsMinimizer) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 10; ++trial) {
    DenseProblem d = random_problem(6, 2, false, rng);
    const SolveReport a = solve(d.program());
    d.c *= 7.5;
    const SolveReport b = solve(d.program());
    ASSERT_EQ(a.status, SolveStatus::kOptimal);
    ASSERT_EQ(b.status, SolveStatus::kOptimal);
    EXPECT_LT((a.solution - b.solution).cwiseAbs().maxCoeff(), 1e-5);
    EXPECT_NEAR(b.objective, 7.5 * a.objective, 1e-5);
  }
}

TEST(ConvexSolver, Deterministic) {
  std::mt19937_64 rng(15);
  const DenseProblem d = random_problem(8, 3, true, rng);
  const SolveReport a = solve(d.program());
  const SolveReport b = solve(d.program());
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_EQ(a.objective, b.objective);
  for (Eigen::Index j = 0; j < a.solution.size(); ++j) EXPECT_EQ(a.solution[j], b.solution[j]);
}

// Minimum-norm solution of an underdetermined system: the free quadratic
// block is eliminated by the presolve and must still give the pseudo-inverse.
TEST(ConvexSolver, EliminatedFreeBlockGivesMinimumNorm) {
  std::mt19937_64 rng(16);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int m = 4, n = 9;
  Matrix a(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = u(rng);
  Vector t(m);
  for (int i = 0; i < m; ++i) t[i] = u(rng);
  // Rows: a g - s = t with s boxed to zero width, so s = 0.
  ConvexProgram p;
  const int g0 = p.add_variables(n, -kInfinity, kInfinity, 0.0, 2.0);
  const int s0 = p.add_variables(m, 0.0, 0.0);
  for (int i = 0; i < m; ++i) {
    const int row = p.add_equality_row(t[i]);
    for (int j = 0; j < n; ++j) p.add_coefficient(row, g0 + j, a(i, j));
    p.add_coefficient(row, s0 + i, -1.0);
  }
  const SolveReport r = solve(p);
  ASSERT_EQ(r.status, SolveStatus::kOptimal);
  const Vector expect = a.completeOrthogonalDecomposition().solve(t);
  EXPECT_LT((r.solution.head(n) - expect).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(ConvexProgram, DumpParseRoundTrip) {
  std::mt19937_64 rng(17);
  DenseProblem d = random_problem(5, 2, true, rng);
  d.hi[1] = kInfinity;
  d.lo[2] = -kInfinity;
  const ConvexProgram p = d.program();
  std::stringstream s;
  p.dump(s);
  const ConvexProgram q = ConvexProgram::parse(s);
  EXPECT_EQ(q.lower(), p.lower());
  EXPECT_EQ(q.upper(), p.upper());
  EXPECT_EQ(q.linear(), p.linear());
  EXPECT_EQ(q.quadratic(), p.quadratic());
  EXPECT_EQ(q.rhs(), p.rhs());
  EXPECT_EQ(q.nonzero_count(), p.nonzero_count());
  EXPECT_EQ(solve(q).objective, solve(p).objective);

  std::istringstream truncated("program 2 0 0\nvar 0 0 1 0 0\n");
  EXPECT_THROW(ConvexProgram::parse(truncated), std::invalid_argument);
}

TEST(ConvexProgram, ValidateRejectsBadInput) {
  ConvexProgram p;
  p.add_variable(1.0, 0.0);
  EXPECT_THROW(p.validate(), std::invalid_argument);
  ConvexProgram q;
  q.add_variable(0.0, 1.0, 0.0, -1.0);
  EXPECT_THROW(q.validate(), std::invalid_argument);
  ConvexProgram r;
  r.add_variable(0.0, 1.0);
  r.add_equality_row(0.0);
  EXPECT_THROW(r.add_coefficient(0, 3, 1.0), std::out_of_range);
}
