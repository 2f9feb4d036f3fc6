#include "deepte/convex_solver.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <memory>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <Eigen/SVD>
#include <Eigen/SparseCholesky>

namespace deepte {

int ConvexProgram::add_variables(int count, double lo, double hi, double linear, double quadratic) {
  if (count < 0) throw std::invalid_argument("add_variables: negative count");
  const int first = variable_count();
  lower_.insert(lower_.end(), count, lo);
  upper_.insert(upper_.end(), count, hi);
  linear_.insert(linear_.end(), count, linear);
  quadratic_.insert(quadratic_.end(), count, quadratic);
  return first;
}

void ConvexProgram::set_quadratic(int var, double value) { quadratic_.at(var) = value; }

void ConvexProgram::set_bounds(int var, double lo, double hi) {
  lower_.at(var) = lo;
  upper_.at(var) = hi;
}

int ConvexProgram::add_equality(const std::vector<std::pair<int, double>>& terms, double rhs) {
  const int row = add_equality_row(rhs);
  for (const auto& [var, value] : terms) add_coefficient(row, var, value);
  return row;
}

int ConvexProgram::add_equality_row(double rhs) {
  rhs_.push_back(rhs);
  return equality_count() - 1;
}

void ConvexProgram::add_coefficient(int row, int var, double value) {
  if (row < 0 || row >= equality_count() || var < 0 || var >= variable_count()) {
    throw std::out_of_range("add_coefficient: index out of range");
  }
  if (value != 0.0) triplets_.emplace_back(row, var, value);
}

SparseMatrix ConvexProgram::equality_matrix() const {
  SparseMatrix a(equality_count(), variable_count());
  a.setFromTriplets(triplets_.begin(), triplets_.end());
  return a;
}

double ConvexProgram::objective(const Vector& x) const {
  double value = 0.0;
  for (int j = 0; j < variable_count(); ++j) {
    value += linear_[j] * x[j] + 0.5 * quadratic_[j] * x[j] * x[j];
  }
  return value;
}

double ConvexProgram::equality_residual(const Vector& x) const {
  Vector r = -Eigen::Map<const Vector>(rhs_.data(), equality_count());
  for (const auto& t : triplets_) r[t.row()] += t.value() * x[t.col()];
  return r.size() == 0 ? 0.0 : r.cwiseAbs().maxCoeff();
}

double ConvexProgram::bound_violation(const Vector& x) const {
  double worst = 0.0;
  for (int j = 0; j < variable_count(); ++j) {
    worst = std::max({worst, lower_[j] - x[j], x[j] - upper_[j]});
  }
  return worst;
}

void ConvexProgram::validate() const {
  for (int j = 0; j < variable_count(); ++j) {
    if (std::isnan(lower_[j]) || std::isnan(upper_[j]) || lower_[j] > upper_[j]) {
      throw std::invalid_argument("variable " + std::to_string(j) + " has inconsistent bounds");
    }
    if (lower_[j] == kInfinity || upper_[j] == -kInfinity) {
      throw std::invalid_argument("variable " + std::to_string(j) + " has an infinite fixed bound");
    }
    if (!std::isfinite(linear_[j])) throw std::invalid_argument("non-finite linear cost");
    if (!std::isfinite(quadratic_[j]) || quadratic_[j] < 0.0) {
      throw std::invalid_argument("quadratic diagonal must be finite and nonnegative");
    }
  }
  for (double v : rhs_) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite equality right-hand side");
  }
  for (const auto& t : triplets_) {
    if (!std::isfinite(t.value())) throw std::invalid_argument("non-finite constraint coefficient");
  }
}

void ConvexProgram::dump(std::ostream& out) const {
  out << std::setprecision(17);
  out << "program " << variable_count() << ' ' << equality_count() << ' ' << triplets_.size() << '\n';
  for (int j = 0; j < variable_count(); ++j) {
    out << "var " << j << ' ' << lower_[j] << ' ' << upper_[j] << ' ' << linear_[j] << ' '
        << quadratic_[j] << '\n';
  }
  for (int i = 0; i < equality_count(); ++i) out << "eq " << i << ' ' << rhs_[i] << '\n';
  for (const auto& t : triplets_) out << "coef " << t.row() << ' ' << t.col() << ' ' << t.value() << '\n';
}

ConvexProgram ConvexProgram::parse(std::istream& in) {
  auto number = [](const std::string& token) {
    if (token == "inf") return kInfinity;
    if (token == "-inf") return -kInfinity;
    return std::stod(token);
  };
  ConvexProgram prog;
  std::string line;
  std::size_t vars = 0, rows = 0;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string tag;
    if (!(fields >> tag)) continue;
    if (tag == "program") {
      std::size_t nnz = 0;
      fields >> vars >> rows >> nnz;
      prog.triplets_.reserve(nnz);
    } else if (tag == "var") {
      std::string idx, lo, hi, c, q;
      fields >> idx >> lo >> hi >> c >> q;
      prog.add_variable(number(lo), number(hi), number(c), number(q));
    } else if (tag == "eq") {
      std::string idx, rhs;
      fields >> idx >> rhs;
      prog.add_equality_row(number(rhs));
    } else if (tag == "coef") {
      int row = 0, col = 0;
      std::string value;
      fields >> row >> col >> value;
      prog.add_coefficient(row, col, number(value));
    } else {
      throw std::invalid_argument("unknown program record `" + tag + "`");
    }
  }
  if (static_cast<std::size_t>(prog.variable_count()) != vars ||
      static_cast<std::size_t>(prog.equality_count()) != rows) {
    throw std::invalid_argument("program dump is truncated");
  }
  return prog;
}

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kOptimal:
      return "optimal";
    case SolveStatus::kInfeasible:
      return "infeasible";
    case SolveStatus::kIterationLimit:
      return "iteration-limit";
  }
  return "unknown";
}

namespace {

// Internal form: 1/2 x'Px + q'x + constant, A x = b, lo <= x <= hi.
// P is stored with both triangles.
struct QpProblem {
  SparseMatrix P;
  Vector q;
  double constant = 0.0;
  SparseMatrix A;
  Vector b, lo, hi;

  int n() const { return static_cast<int>(q.size()); }
  int m() const { return static_cast<int>(b.size()); }
};

// Thin factorization of one eliminated block, A_RG Q_G^{-1/2} = U S V'.
struct BlockFactor {
  Matrix u_range;
  Vector sigma;
  Matrix v_range;
  Matrix u_null;
};

struct EliminatedBlock {
  std::vector<int> cols;  // eliminated variables
  std::vector<int> kept;  // reduced indices of free-to-move variables in the block rows
  std::shared_ptr<const BlockFactor> factor;
  Matrix a_kept;          // |R| x |kept|
  Vector b_shifted;       // b_R minus fixed-variable contributions
  Vector inv_sqrt_q;
};

struct Presolved {
  QpProblem qp;
  bool infeasible = false;
  int original_vars = 0;
  std::vector<int> reduced_index;  // -1 when fixed or eliminated
  std::vector<double> fixed_value;
  std::vector<EliminatedBlock> blocks;

  Vector recover(const Vector& x_reduced) const {
    Vector x = Vector::Zero(original_vars);
    for (int j = 0; j < original_vars; ++j) {
      if (reduced_index[j] >= 0) {
        x[j] = x_reduced[reduced_index[j]];
      } else if (!std::isnan(fixed_value[j])) {
        x[j] = fixed_value[j];
      }
    }
    for (const EliminatedBlock& blk : blocks) {
      Vector v = blk.b_shifted;
      for (std::size_t k = 0; k < blk.kept.size(); ++k) v -= blk.a_kept.col(k) * x_reduced[blk.kept[k]];
      const BlockFactor& f = *blk.factor;
      Vector coeff = (f.u_range.transpose() * v).cwiseQuotient(f.sigma);
      Vector g = (f.v_range * coeff).cwiseProduct(blk.inv_sqrt_q);
      for (std::size_t k = 0; k < blk.cols.size(); ++k) x[blk.cols[k]] = g[k];
    }
    return x;
  }
};

class DisjointSets {
 public:
  explicit DisjointSets(int n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  int find(int v) {
    while (parent_[v] != v) {
      parent_[v] = parent_[parent_[v]];
      v = parent_[v];
    }
    return v;
  }
  void join(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<int> parent_;
};

constexpr int kMaxBlockDimension = 2500;
constexpr double kRankTolerance = 1e-9;

std::shared_ptr<const BlockFactor> factor_block(const Matrix& scaled) {
  Eigen::BDCSVD<Matrix> svd(scaled, Eigen::ComputeFullU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double cutoff = s.size() > 0 ? kRankTolerance * s[0] : 0.0;
  int rank = 0;
  while (rank < s.size() && s[rank] > cutoff && s[rank] > 0.0) ++rank;
  auto f = std::make_shared<BlockFactor>();
  f->u_range = svd.matrixU().leftCols(rank);
  f->sigma = s.head(rank);
  f->v_range = svd.matrixV().leftCols(rank);
  f->u_null = svd.matrixU().rightCols(scaled.rows() - rank);
  return f;
}

// Row-compressed copy of the equality system with duplicate entries summed.
struct RowStore {
  std::vector<std::vector<std::pair<int, double>>> rows;
  explicit RowStore(const ConvexProgram& prog) : rows(prog.equality_count()) {
    SparseMatrix a = prog.equality_matrix();
    Eigen::SparseMatrix<double, Eigen::RowMajor> ar = a;
    for (int i = 0; i < ar.outerSize(); ++i) {
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(ar, i); it; ++it) {
        if (it.value() != 0.0) rows[i].emplace_back(static_cast<int>(it.col()), it.value());
      }
    }
  }
};

Presolved presolve(const ConvexProgram& prog, bool eliminate_blocks) {
  Presolved out;
  const int n = prog.variable_count();
  const int m = prog.equality_count();
  out.original_vars = n;
  out.fixed_value.assign(n, std::nan(""));
  const RowStore store(prog);

  enum class Role { kKeep, kFixed, kEliminate };
  std::vector<Role> role(n, Role::kKeep);
  std::vector<int> row_count(n, 0);
  for (const auto& row : store.rows) {
    for (const auto& [j, v] : row) ++row_count[j];
  }
  for (int j = 0; j < n; ++j) {
    const double lo = prog.lower()[j], hi = prog.upper()[j];
    if (lo == hi) {
      role[j] = Role::kFixed;
      out.fixed_value[j] = lo;
    } else if (eliminate_blocks && lo == -kInfinity && hi == kInfinity && prog.linear()[j] == 0.0 &&
               prog.quadratic()[j] > 0.0 && row_count[j] > 0) {
      role[j] = Role::kEliminate;
    }
  }

  // Group eliminable variables that share rows.
  DisjointSets sets(n);
  for (const auto& row : store.rows) {
    int first = -1;
    for (const auto& [j, v] : row) {
      if (role[j] != Role::kEliminate) continue;
      if (first < 0) {
        first = j;
      } else {
        sets.join(first, j);
      }
    }
  }
  std::map<int, int> component_of_root;
  std::vector<std::vector<int>> comp_cols, comp_rows;
  for (int j = 0; j < n; ++j) {
    if (role[j] != Role::kEliminate) continue;
    auto [it, inserted] = component_of_root.emplace(sets.find(j), static_cast<int>(comp_cols.size()));
    if (inserted) {
      comp_cols.emplace_back();
      comp_rows.emplace_back();
    }
    comp_cols[it->second].push_back(j);
  }
  std::vector<int> row_component(m, -1);
  for (int i = 0; i < m; ++i) {
    for (const auto& [j, v] : store.rows[i]) {
      if (role[j] == Role::kEliminate) {
        row_component[i] = component_of_root.at(sets.find(j));
        break;
      }
    }
    if (row_component[i] >= 0) comp_rows[row_component[i]].push_back(i);
  }
  for (std::size_t c = 0; c < comp_cols.size(); ++c) {
    if (static_cast<int>(comp_cols[c].size()) > kMaxBlockDimension ||
        static_cast<int>(comp_rows[c].size()) > kMaxBlockDimension) {
      for (int j : comp_cols[c]) role[j] = Role::kKeep;
      for (int i : comp_rows[c]) row_component[i] = -1;
      comp_cols[c].clear();
      comp_rows[c].clear();
    }
  }

  out.reduced_index.assign(n, -1);
  int n_red = 0;
  for (int j = 0; j < n; ++j) {
    if (role[j] == Role::kKeep) out.reduced_index[j] = n_red++;
  }

  std::vector<Eigen::Triplet<double>> a_trips, p_trips;
  std::vector<double> b_red;
  Vector q_red = Vector::Zero(n_red);
  double constant = 0.0;
  const double b_scale = std::max(1.0, prog.rhs().empty()
                                           ? 0.0
                                           : std::abs(*std::max_element(prog.rhs().begin(), prog.rhs().end(),
                                                                        [](double a, double b) {
                                                                          return std::abs(a) < std::abs(b);
                                                                        })));

  for (int j = 0; j < n; ++j) {
    const double c = prog.linear()[j], qd = prog.quadratic()[j];
    if (role[j] == Role::kKeep) {
      q_red[out.reduced_index[j]] = c;
      if (qd > 0.0) p_trips.emplace_back(out.reduced_index[j], out.reduced_index[j], qd);
    } else if (role[j] == Role::kFixed) {
      constant += c * out.fixed_value[j] + 0.5 * qd * out.fixed_value[j] * out.fixed_value[j];
    }
  }

  // Rows outside eliminated blocks pass through with fixed variables moved
  // to the right-hand side.
  for (int i = 0; i < m; ++i) {
    if (row_component[i] >= 0) continue;
    double rhs = prog.rhs()[i];
    std::vector<std::pair<int, double>> kept;
    for (const auto& [j, v] : store.rows[i]) {
      if (role[j] == Role::kFixed) {
        rhs -= v * out.fixed_value[j];
      } else {
        kept.emplace_back(out.reduced_index[j], v);
      }
    }
    if (kept.empty()) {
      if (std::abs(rhs) > 1e-9 * b_scale) out.infeasible = true;
      continue;
    }
    const int r = static_cast<int>(b_red.size());
    for (const auto& [jr, v] : kept) a_trips.emplace_back(r, jr, v);
    b_red.push_back(rhs);
  }

  // Eliminated blocks: the minimum of 1/2 g'Q g over {g : A_RG g = v} is
  // 1/2 v' (A Q^-1 A')^+ v when v lies in the range, so the block becomes
  // a quadratic penalty on the kept variables plus the range condition.
  std::map<std::vector<double>, std::shared_ptr<const BlockFactor>> factor_cache;
  for (std::size_t c = 0; c < comp_cols.size(); ++c) {
    if (comp_cols[c].empty()) continue;
    const auto& cols = comp_cols[c];
    const auto& rows = comp_rows[c];
    const int nr = static_cast<int>(rows.size());
    const int ng = static_cast<int>(cols.size());
    std::map<int, int> local_col;
    for (int k = 0; k < ng; ++k) local_col[cols[k]] = k;

    EliminatedBlock blk;
    blk.cols = cols;
    blk.inv_sqrt_q.resize(ng);
    for (int k = 0; k < ng; ++k) blk.inv_sqrt_q[k] = 1.0 / std::sqrt(prog.quadratic()[cols[k]]);

    Matrix scaled = Matrix::Zero(nr, ng);
    std::map<int, int> kept_local;
    std::vector<std::tuple<int, int, double>> kept_entries;
    blk.b_shifted.resize(nr);
    for (int r = 0; r < nr; ++r) {
      const int i = rows[r];
      double rhs = prog.rhs()[i];
      for (const auto& [j, v] : store.rows[i]) {
        if (role[j] == Role::kEliminate) {
          const int k = local_col.at(j);
          scaled(r, k) += v * blk.inv_sqrt_q[k];
        } else if (role[j] == Role::kFixed) {
          rhs -= v * out.fixed_value[j];
        } else {
          auto [it, inserted] = kept_local.emplace(out.reduced_index[j], static_cast<int>(kept_local.size()));
          kept_entries.emplace_back(r, it->second, v);
        }
      }
      blk.b_shifted[r] = rhs;
    }
    blk.kept.resize(kept_local.size());
    for (const auto& [jr, k] : kept_local) blk.kept[k] = jr;
    blk.a_kept = Matrix::Zero(nr, static_cast<int>(blk.kept.size()));
    for (const auto& [r, k, v] : kept_entries) blk.a_kept(r, k) += v;

    // Blocks with identical local data share a factorization.
    std::vector<double> key;
    key.reserve(2 + scaled.size());
    key.push_back(nr);
    key.push_back(ng);
    key.insert(key.end(), scaled.data(), scaled.data() + scaled.size());
    auto& cached = factor_cache[key];
    if (!cached) cached = factor_block(scaled);
    blk.factor = cached;
    const BlockFactor& f = *cached;

    const int nk = static_cast<int>(blk.kept.size());
    if (f.u_null.cols() > 0) {
      const Matrix b_null_map = f.u_null.transpose() * blk.a_kept;
      const Vector beta = f.u_null.transpose() * blk.b_shifted;
      int t = 0;
      Matrix rows_out;
      Vector rhs_out;
      Vector leftover = beta;
      if (nk > 0) {
        Eigen::BDCSVD<Matrix> svd(b_null_map, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Vector& s = svd.singularValues();
        const double cutoff = s.size() > 0 ? kRankTolerance * std::max(1.0, s[0]) : 0.0;
        while (t < s.size() && s[t] > cutoff) ++t;
        const Matrix pu = svd.matrixU().leftCols(t);
        rows_out = svd.matrixV().leftCols(t).transpose();
        rhs_out = (pu.transpose() * beta).cwiseQuotient(s.head(t));
        leftover = beta - pu * (pu.transpose() * beta);
      }
      if (leftover.size() > 0 && leftover.cwiseAbs().maxCoeff() > 1e-8 * std::max(1.0, blk.b_shifted.cwiseAbs().maxCoeff())) {
        out.infeasible = true;
      }
      for (int r = 0; r < t; ++r) {
        const int row = static_cast<int>(b_red.size());
        for (int k = 0; k < nk; ++k) {
          if (rows_out(r, k) != 0.0) a_trips.emplace_back(row, blk.kept[k], rows_out(r, k));
        }
        b_red.push_back(rhs_out[r]);
      }
    }

    if (f.sigma.size() > 0) {
      const Matrix mk = f.sigma.cwiseInverse().asDiagonal() * (f.u_range.transpose() * blk.a_kept);
      const Vector mb = f.sigma.cwiseInverse().asDiagonal() * (f.u_range.transpose() * blk.b_shifted);
      const Matrix pk = mk.transpose() * mk;
      const Vector qk = -mk.transpose() * mb;
      for (int a = 0; a < nk; ++a) {
        q_red[blk.kept[a]] += qk[a];
        for (int b2 = 0; b2 < nk; ++b2) {
          if (pk(a, b2) != 0.0) p_trips.emplace_back(blk.kept[a], blk.kept[b2], pk(a, b2));
        }
      }
      constant += 0.5 * mb.squaredNorm();
    }
    out.blocks.push_back(std::move(blk));
  }

  QpProblem& qp = out.qp;
  qp.q = q_red;
  qp.constant = constant;
  qp.P.resize(n_red, n_red);
  qp.P.setFromTriplets(p_trips.begin(), p_trips.end());
  qp.P.prune(0.0);
  qp.b = Eigen::Map<Vector>(b_red.data(), static_cast<Eigen::Index>(b_red.size()));
  qp.A.resize(static_cast<Eigen::Index>(b_red.size()), n_red);
  qp.A.setFromTriplets(a_trips.begin(), a_trips.end());
  qp.lo.resize(n_red);
  qp.hi.resize(n_red);
  for (int j = 0; j < n; ++j) {
    if (out.reduced_index[j] >= 0) {
      qp.lo[out.reduced_index[j]] = prog.lower()[j];
      qp.hi[out.reduced_index[j]] = prog.upper()[j];
    }
  }
  return out;
}

// Ruiz equilibration of [P A'; A 0] plus a scalar cost scaling.
struct Scaling {
  Vector col;  // x = col .* x_scaled
  Vector row;  // scaled rows = row .* A rows
  double cost = 1.0;
};

Scaling equilibrate(QpProblem& qp) {
  const int n = qp.n(), m = qp.m();
  Scaling sc{Vector::Ones(n), Vector::Ones(m), 1.0};
  for (int pass = 0; pass < 15; ++pass) {
    Vector col_norm = Vector::Zero(n), row_norm = Vector::Zero(m);
    for (int k = 0; k < qp.P.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(qp.P, k); it; ++it) {
        col_norm[it.col()] = std::max(col_norm[it.col()], std::abs(it.value()));
      }
    }
    for (int k = 0; k < qp.A.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(qp.A, k); it; ++it) {
        const double a = std::abs(it.value());
        col_norm[it.col()] = std::max(col_norm[it.col()], a);
        row_norm[it.row()] = std::max(row_norm[it.row()], a);
      }
    }
    Vector d(n), e(m);
    for (int j = 0; j < n; ++j) d[j] = col_norm[j] > 0.0 ? 1.0 / std::sqrt(col_norm[j]) : 1.0;
    for (int i = 0; i < m; ++i) e[i] = row_norm[i] > 0.0 ? 1.0 / std::sqrt(row_norm[i]) : 1.0;
    qp.P = d.asDiagonal() * qp.P * d.asDiagonal();
    qp.A = e.asDiagonal() * qp.A * d.asDiagonal();
    sc.col = sc.col.cwiseProduct(d);
    sc.row = sc.row.cwiseProduct(e);
  }
  qp.q = qp.q.cwiseProduct(sc.col);
  qp.b = qp.b.cwiseProduct(sc.row);
  qp.lo = qp.lo.cwiseQuotient(sc.col);
  qp.hi = qp.hi.cwiseQuotient(sc.col);

  double p_norm = 0.0;
  for (int k = 0; k < qp.P.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(qp.P, k); it; ++it) p_norm = std::max(p_norm, std::abs(it.value()));
  }
  const double q_norm = qp.q.size() > 0 ? qp.q.cwiseAbs().maxCoeff() : 0.0;
  const double scale = std::max(p_norm, q_norm);
  sc.cost = scale > 0.0 ? std::clamp(1.0 / scale, 1e-6, 1e6) : 1.0;
  qp.P *= sc.cost;
  qp.q *= sc.cost;
  return sc;
}

struct IpmResult {
  Vector x;
  int iterations = 0;
  bool converged = false;
};

IpmResult interior_point(const QpProblem& original, const SolverOptions& options) {
  // Presolve may leave nothing to optimize; the remaining rows are then empty.
  if (original.n() == 0) return IpmResult{Vector(), 0, original.m() == 0};
  QpProblem qp = original;
  const Scaling sc = equilibrate(qp);
  const int n = qp.n(), m = qp.m();
  const double tol = options.tolerance;

  std::vector<char> has_lo(n), has_hi(n);
  int n_bounds = 0;
  for (int j = 0; j < n; ++j) {
    has_lo[j] = std::isfinite(qp.lo[j]);
    has_hi[j] = std::isfinite(qp.hi[j]);
    n_bounds += has_lo[j] + has_hi[j];
  }

  Vector p_diag = Vector::Zero(n);
  bool has_quadratic = false;
  for (int k = 0; k < qp.P.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(qp.P, k); it; ++it) {
      has_quadratic = true;
      if (it.row() == it.col()) p_diag[it.row()] += it.value();
    }
  }

  // Lower triangle of [P + Sigma, A'; A, -delta I] with an explicit diagonal.
  std::vector<Eigen::Triplet<double>> trips;
  for (int j = 0; j < n; ++j) trips.emplace_back(j, j, 0.0);
  for (int k = 0; k < qp.P.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(qp.P, k); it; ++it) {
      if (it.row() > it.col()) trips.emplace_back(it.row(), it.col(), it.value());
    }
  }
  for (int k = 0; k < qp.A.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(qp.A, k); it; ++it) trips.emplace_back(n + it.row(), it.col(), it.value());
  }
  for (int i = 0; i < m; ++i) trips.emplace_back(n + i, n + i, 0.0);
  SparseMatrix kkt(n + m, n + m);
  kkt.setFromTriplets(trips.begin(), trips.end());
  kkt.makeCompressed();
  std::vector<double*> diag(n + m, nullptr);
  for (int k = 0; k < kkt.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(kkt, k); it; ++it) {
      if (it.row() == it.col()) diag[k] = &it.valueRef();
    }
  }
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt;
  ldlt.analyzePattern(kkt);
  const SparseMatrix at = qp.A.transpose();

  double reg_primal = 1e-9, reg_dual = 1e-9;
  const double b_norm = m > 0 ? qp.b.cwiseAbs().maxCoeff() : 0.0;
  const double q_norm = n > 0 ? qp.q.cwiseAbs().maxCoeff() : 0.0;

  IpmResult result;
  Vector sigma(n);
  Vector x = Vector::Zero(n), y = Vector::Zero(m), zl = Vector::Zero(n), zu = Vector::Zero(n);
  // Bound slacks are carried as state: recomputing hi - x loses them to
  // cancellation once x is within rounding of a bound.
  Vector sl = Vector::Zero(n), su = Vector::Zero(n);

  auto solve_kkt = [&](const Vector& r1, const Vector& r2, Vector& dx, Vector& dy) {
    Vector rhs(n + m);
    rhs << r1, r2;
    Vector sol = ldlt.solve(rhs);
    // Refine against the unregularized system.
    double best = kInfinity;
    Vector best_sol = sol;
    for (int pass = 0; pass < 4; ++pass) {
      const Vector sx = sol.head(n), sw = sol.tail(m);
      Vector res(n + m);
      res.head(n) = r1 - (qp.P * sx + sigma.cwiseProduct(sx) + at * sw);
      res.tail(m) = r2 - qp.A * sx;
      const double norm = res.size() > 0 ? res.cwiseAbs().maxCoeff() : 0.0;
      if (norm < best) {
        best = norm;
        best_sol = sol;
      } else {
        break;
      }
      if (norm < 1e-14 * (1.0 + rhs.cwiseAbs().maxCoeff())) break;
      sol += ldlt.solve(res);
    }
    dx = best_sol.head(n);
    dy = -best_sol.tail(m);
  };

  auto step_to_boundary = [&](const Vector& dx, const Vector& dzl, const Vector& dzu, double& ap, double& ad) {
    ap = 1.0;
    ad = 1.0;
    for (int j = 0; j < n; ++j) {
      if (has_lo[j]) {
        if (dx[j] < 0.0) ap = std::min(ap, -sl[j] / dx[j]);
        if (dzl[j] < 0.0) ad = std::min(ad, -zl[j] / dzl[j]);
      }
      if (has_hi[j]) {
        if (dx[j] > 0.0) ap = std::min(ap, su[j] / dx[j]);
        if (dzu[j] < 0.0) ad = std::min(ad, -zu[j] / dzu[j]);
      }
    }
  };

  // Starting point: least-squares solution of the KKT system with unit
  // barrier weights, then pushed into the interior of the bounds.
  sigma.setOnes();
  for (int j = 0; j < n; ++j) *diag[j] = p_diag[j] + 1.0;
  for (int i = 0; i < m; ++i) *diag[n + i] = -reg_dual;
  ldlt.factorize(kkt);
  if (ldlt.info() == Eigen::Success) {
    solve_kkt(-qp.q, qp.b, x, y);
    if (!x.allFinite() || !y.allFinite()) {
      x.setZero();
      y.setZero();
    }
  }
  {
    // Mehrotra's shift: move one-sided slacks and all duals by a common
    // amount so that they are positive and their products roughly balanced.
    // Two-sided bounds are clamped into their interior instead.
    const Vector g = qp.P * x + qp.q - at * y;
    double min_s = kInfinity, min_z = kInfinity;
    for (int j = 0; j < n; ++j) {
      if (has_lo[j] && has_hi[j]) {
        const double margin = 0.1 * std::min(1.0, qp.hi[j] - qp.lo[j]);
        x[j] = std::clamp(x[j], qp.lo[j] + margin, qp.hi[j] - margin);
        zl[j] = std::max(g[j], 0.0);
        zu[j] = std::max(-g[j], 0.0);
      } else if (has_lo[j]) {
        min_s = std::min(min_s, x[j] - qp.lo[j]);
        zl[j] = g[j];
      } else if (has_hi[j]) {
        min_s = std::min(min_s, qp.hi[j] - x[j]);
        zu[j] = -g[j];
      }
      if (has_lo[j]) min_z = std::min(min_z, zl[j]);
      if (has_hi[j]) min_z = std::min(min_z, zu[j]);
    }
    const double ds = std::isfinite(min_s) ? std::max(-1.5 * min_s, 0.0) : 0.0;
    const double dz = std::isfinite(min_z) ? std::max(-1.5 * min_z, 0.0) : 0.0;
    auto shift_x = [&](double amount) {
      for (int j = 0; j < n; ++j) {
        if (has_lo[j] && !has_hi[j]) x[j] += amount;
        if (has_hi[j] && !has_lo[j]) x[j] -= amount;
      }
    };
    auto shift_z = [&](double amount) {
      for (int j = 0; j < n; ++j) {
        if (has_lo[j]) zl[j] += amount;
        if (has_hi[j]) zu[j] += amount;
      }
    };
    shift_x(ds);
    shift_z(dz);
    double sz = 0.0, s_sum = 0.0, z_sum = 0.0;
    for (int j = 0; j < n; ++j) {
      if (has_lo[j]) {
        sz += (x[j] - qp.lo[j]) * zl[j];
        s_sum += x[j] - qp.lo[j];
        z_sum += zl[j];
      }
      if (has_hi[j]) {
        sz += (qp.hi[j] - x[j]) * zu[j];
        s_sum += qp.hi[j] - x[j];
        z_sum += zu[j];
      }
    }
    const double floor = 1e-2;
    const double ds2 = z_sum > 0.0 ? 0.5 * sz / z_sum : 0.0;
    const double dz2 = s_sum > 0.0 ? 0.5 * sz / s_sum : 0.0;
    shift_x(std::max(ds2, floor));
    shift_z(std::max(dz2, floor));
  }

  for (int j = 0; j < n; ++j) {
    if (has_lo[j]) sl[j] = x[j] - qp.lo[j];
    if (has_hi[j]) su[j] = qp.hi[j] - x[j];
  }
  int stalled = 0;
  for (int iter = 0; iter <= options.max_iterations; ++iter) {
    result.iterations = iter;
    const Vector px = qp.P * x;
    const Vector rd = px + qp.q - at * y - zl + zu;
    const Vector rp = qp.A * x - qp.b;
    const double gap = sl.dot(zl) + su.dot(zu);
    const double mu = n_bounds > 0 ? gap / n_bounds : 0.0;
    const double pobj = 0.5 * x.dot(px) + qp.q.dot(x);
    const double rp_norm = m > 0 ? rp.cwiseAbs().maxCoeff() : 0.0;
    const double rd_norm = n > 0 ? rd.cwiseAbs().maxCoeff() : 0.0;
    if (rp_norm <= tol * (1.0 + b_norm) && rd_norm <= tol * (1.0 + q_norm) && gap <= tol * (1.0 + std::abs(pobj))) {
      result.converged = true;
      break;
    }
    if (iter == options.max_iterations) break;
    if (!std::isfinite(pobj) || (m > 0 && y.cwiseAbs().maxCoeff() > 1e13) ||
        (n > 0 && std::max(zl.maxCoeff(), zu.maxCoeff()) > 1e13)) {
      break;
    }

    for (int j = 0; j < n; ++j) {
      sigma[j] = (has_lo[j] ? zl[j] / sl[j] : 0.0) + (has_hi[j] ? zu[j] / su[j] : 0.0);
      *diag[j] = p_diag[j] + sigma[j] + reg_primal;
    }
    for (int i = 0; i < m; ++i) *diag[n + i] = -reg_dual;
    ldlt.factorize(kkt);
    if (ldlt.info() != Eigen::Success) {
      reg_primal *= 100.0;
      reg_dual *= 100.0;
      if (reg_primal > 1e-2) break;
      continue;
    }

    // Predictor.
    Vector rcl = -sl.cwiseProduct(zl), rcu = -su.cwiseProduct(zu);
    auto assemble = [&](const Vector& cl, const Vector& cu) {
      Vector r1 = -rd;
      for (int j = 0; j < n; ++j) {
        if (has_lo[j]) r1[j] += cl[j] / sl[j];
        if (has_hi[j]) r1[j] -= cu[j] / su[j];
      }
      return r1;
    };
    auto dual_steps = [&](const Vector& dx, const Vector& cl, const Vector& cu, Vector& dzl, Vector& dzu) {
      dzl.setZero(n);
      dzu.setZero(n);
      for (int j = 0; j < n; ++j) {
        if (has_lo[j]) dzl[j] = (cl[j] - zl[j] * dx[j]) / sl[j];
        if (has_hi[j]) dzu[j] = (cu[j] + zu[j] * dx[j]) / su[j];
      }
    };
    Vector dx, dy, dzl, dzu;
    solve_kkt(assemble(rcl, rcu), -rp, dx, dy);
    dual_steps(dx, rcl, rcu, dzl, dzu);
    double ap = 1.0, ad = 1.0;
    step_to_boundary(dx, dzl, dzu, ap, ad);

    if (n_bounds > 0) {
      double mu_aff = 0.0;
      for (int j = 0; j < n; ++j) {
        if (has_lo[j]) mu_aff += (sl[j] + ap * dx[j]) * (zl[j] + ad * dzl[j]);
        if (has_hi[j]) mu_aff += (su[j] - ap * dx[j]) * (zu[j] + ad * dzu[j]);
      }
      mu_aff /= n_bounds;
      const double centering = std::pow(std::max(0.0, mu_aff) / mu, 3.0);
      // Corrector with the second-order term of the affine step. When the
      // affine step is badly blocked that term can stall the iteration, so a
      // plain centering step is tried as well and the longer step wins.
      Vector ccl = rcl, ccu = rcu, pcl = rcl, pcu = rcu;
      const double sigma_plain = std::max(centering, 0.1);
      for (int j = 0; j < n; ++j) {
        if (has_lo[j]) {
          ccl[j] = centering * mu - sl[j] * zl[j] - dx[j] * dzl[j];
          pcl[j] = sigma_plain * mu - sl[j] * zl[j];
        }
        if (has_hi[j]) {
          ccu[j] = centering * mu - su[j] * zu[j] + dx[j] * dzu[j];
          pcu[j] = sigma_plain * mu - su[j] * zu[j];
        }
      }
      solve_kkt(assemble(ccl, ccu), -rp, dx, dy);
      dual_steps(dx, ccl, ccu, dzl, dzu);
      step_to_boundary(dx, dzl, dzu, ap, ad);
      if (std::min(ap, ad) < 0.1) {
        Vector dx2, dy2, dzl2, dzu2;
        double ap2 = 1.0, ad2 = 1.0;
        solve_kkt(assemble(pcl, pcu), -rp, dx2, dy2);
        dual_steps(dx2, pcl, pcu, dzl2, dzu2);
        step_to_boundary(dx2, dzl2, dzu2, ap2, ad2);
        if (std::min(ap2, ad2) > std::min(ap, ad)) {
          dx = dx2;
          dy = dy2;
          dzl = dzl2;
          dzu = dzu2;
          ap = ap2;
          ad = ad2;
        }
      }
    }

    const double eta = std::clamp(1.0 - 10.0 * mu, 0.9, 0.9995);
    ap = std::min(1.0, eta * ap);
    ad = std::min(1.0, eta * ad);
    if (has_quadratic) ap = ad = std::min(ap, ad);
    stalled = (ap < 1e-10 && ad < 1e-10) ? stalled + 1 : 0;
    if (stalled > 5) break;
    if (!dx.allFinite() || !dy.allFinite() || !dzl.allFinite() || !dzu.allFinite()) {
      break;
    }
    x += ap * dx;
    y += ad * dy;
    zl += ad * dzl;
    zu += ad * dzu;
    for (int j = 0; j < n; ++j) {
      if (has_lo[j]) sl[j] = std::max(sl[j] + ap * dx[j], 1e-300);
      if (has_hi[j]) su[j] = std::max(su[j] - ap * dx[j], 1e-300);
    }
    // Keep iterates strictly interior despite round-off.
    for (int j = 0; j < n; ++j) {
      if (has_lo[j]) zl[j] = std::max(zl[j], 1e-300);
      if (has_hi[j]) zu[j] = std::max(zu[j], 1e-300);
    }
  }
  result.x = x.cwiseMax(qp.lo).cwiseMin(qp.hi).cwiseProduct(sc.col);
  return result;
}

double rhs_scale(const ConvexProgram& prog) {
  double s = 1.0;
  for (double v : prog.rhs()) s = std::max(s, std::abs(v));
  return s;
}

// Phase-1 on the presolved system: minimize sum(e+ + e-) with A x + e+ - e- = b.
Vector phase_one(const QpProblem& qp, const SolverOptions& options) {
  const int n = qp.n(), m = qp.m();
  QpProblem p1;
  p1.q = Vector::Zero(n + 2 * m);
  p1.q.tail(2 * m).setOnes();
  p1.P.resize(n + 2 * m, n + 2 * m);
  p1.lo = Vector::Zero(n + 2 * m);
  p1.hi = Vector::Constant(n + 2 * m, kInfinity);
  p1.lo.head(n) = qp.lo;
  p1.hi.head(n) = qp.hi;
  std::vector<Eigen::Triplet<double>> trips;
  for (int k = 0; k < qp.A.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(qp.A, k); it; ++it) trips.emplace_back(it.row(), it.col(), it.value());
  }
  for (int i = 0; i < m; ++i) {
    trips.emplace_back(i, n + i, 1.0);
    trips.emplace_back(i, n + m + i, -1.0);
  }
  p1.A.resize(m, n + 2 * m);
  p1.A.setFromTriplets(trips.begin(), trips.end());
  p1.b = qp.b;
  IpmResult r = interior_point(p1, options);
  return r.x.head(n);
}

}  // namespace

SolveReport solve(const ConvexProgram& program, const SolverOptions& options) {
  program.validate();
  const Presolved pre = presolve(program, true);
  SolveReport report;
  const double feas_tol = std::max(options.tolerance, 1e-9) * rhs_scale(program);

  if (pre.infeasible) {
    report.status = SolveStatus::kInfeasible;
    report.solution = pre.recover(Vector::Zero(pre.qp.n()));
  } else {
    const IpmResult ipm = interior_point(pre.qp, options);
    report.iterations = ipm.iterations;
    report.solution = pre.recover(ipm.x);
    const double residual = program.equality_residual(report.solution);
    if (ipm.converged && residual <= 100.0 * feas_tol) {
      report.status = SolveStatus::kOptimal;
    } else {
      const Vector x1 = pre.recover(phase_one(pre.qp, options));
      const bool feasible = program.equality_residual(x1) <= 1e-6 * rhs_scale(program);
      report.status = feasible ? SolveStatus::kIterationLimit : SolveStatus::kInfeasible;
    }
  }
  report.objective = program.objective(report.solution);
  report.max_residual = program.equality_residual(report.solution);
  return report;
}

SolveReport solve(const ConvexProgram& program, double tolerance, int max_iterations) {
  return solve(program, SolverOptions{tolerance, max_iterations});
}

FeasibilityReport check_feasibility(const ConvexProgram& program, double tolerance) {
  program.validate();
  const Presolved pre = presolve(program, true);
  FeasibilityReport report;
  if (pre.infeasible) {
    report.feasible = false;
    report.residual = program.equality_residual(pre.recover(Vector::Zero(pre.qp.n())));
    return report;
  }
  if (pre.qp.m() == 0) {
    report.feasible = true;
    report.residual = 0.0;
    return report;
  }
  const Vector x = pre.recover(phase_one(pre.qp, SolverOptions{1e-10, 200}));
  report.residual = program.equality_residual(x);
  report.feasible = report.residual <= tolerance * rhs_scale(program);
  return report;
}

}  // namespace deepte
