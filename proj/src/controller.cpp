#include "deepte/controller.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/QR>
#include <Eigen/SVD>

namespace deepte {

BasisSet::BasisSet(int samples_per_interval, int count) : n_(samples_per_interval), count_(count) {
  if (n_ < 2 || n_ % 2 != 0) {
    throw std::invalid_argument("samples per control interval must be even and at least 2");
  }
  if (count_ < 0 || count_ > 2) throw std::invalid_argument("basis count must be 0, 1 or 2");
  for (int o = -n_ / 2 + 1; o <= n_ / 2 - 1; ++o) offsets_.push_back(o);
}

double BasisSet::value(int i, int offset) const {
  if (i == 0) return offset;
  if (i == 1) {
    double mean_sq = 0.0;
    for (int o : offsets_) mean_sq += static_cast<double>(o) * o;
    mean_sq /= static_cast<double>(offsets_.size());
    return static_cast<double>(offset) * offset - mean_sq;
  }
  throw std::out_of_range("basis index out of range");
}

Matrix BasisSet::s_matrix(int link_count) const {
  const int n_g = static_cast<int>(offsets_.size()) * link_count;
  Matrix s = Matrix::Zero(static_cast<Eigen::Index>(count_) * n_g, n_g);
  for (int i = 0; i < count_; ++i) {
    for (std::size_t k = 0; k < offsets_.size(); ++k) {
      for (int l = 0; l < link_count; ++l) {
        const int c = static_cast<int>(k) * link_count + l;
        s(i * n_g + c, c) = value(i, offsets_[k]);
      }
    }
  }
  return s;
}

void validate(const ControllerConfig& cfg) {
  if (cfg.alpha1 < 0.0 || cfg.alpha2 < 0.0 || cfg.data_slack < 0.0) {
    throw std::invalid_argument("penalty weights must be nonnegative");
  }
  if (cfg.past < 1 || cfg.horizon < 1) throw std::invalid_argument("horizons must be positive");
  if (cfg.samples < 2 || cfg.samples % 2 != 0) {
    throw std::invalid_argument("samples per control interval must be even and at least 2");
  }
  if (cfg.basis_count < 0 || cfg.basis_count > 2) throw std::invalid_argument("basis count must be 0, 1 or 2");
  if (!(cfg.discount > 0.0)) throw std::invalid_argument("discount must be positive");
  if (!(cfg.perturb_fraction >= 0.0 && cfg.perturb_fraction <= 1.0)) {
    throw std::invalid_argument("perturbation fraction must lie in [0, 1]");
  }
  if (!(cfg.mixing >= 0.0 && cfg.mixing <= 1.0)) throw std::invalid_argument("mixing weight must lie in [0, 1]");
}

RoutingConfig perturb(const PathSet& elephants, const RoutingConfig& r, double fraction, double mixing,
                      std::mt19937_64& rng) {
  const int n = elephants.demand_count();
  RoutingConfig out = r;
  if (n == 0) return out;
  // The small slack keeps e.g. 0.05 * 20 from rounding up to 2.
  const int count = std::clamp(static_cast<int>(std::ceil(fraction * n - 1e-9)), 1, n);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  for (int i = 0; i < count; ++i) {
    std::uniform_int_distribution<int> pick(i, n - 1);
    std::swap(order[i], order[pick(rng)]);
  }
  std::exponential_distribution<double> gamma1(1.0);
  for (int i = 0; i < count; ++i) {
    const int d = order[i];
    const int np = elephants.path_count(d);
    if (np == 0) continue;
    Vector draw(np);
    for (int j = 0; j < np; ++j) draw[j] = gamma1(rng);
    draw /= draw.sum();
    auto split = out.split(elephants, d);
    split = (1.0 - mixing) * split + mixing * draw;
  }
  return out;
}

namespace {

struct RowLayout {
  int n_w, n_l, n_phi;
  int agg(int i, int d) const { return i * n_w + d; }                             // i = 0 is unscaled
  int ind(int i, int l) const { return (1 + n_phi) * n_w + i * n_l + l; }
  int load() const { return (1 + n_phi) * (n_w + n_l); }
  int rows() const { return load() + 1; }
};

}  // namespace

Matrix window_data_matrix(const SampleWindow& window, const BasisSet& basis) {
  if (window.records.empty()) throw std::invalid_argument("window has no samples");
  const auto& first = window.records.front();
  const RowLayout rl{static_cast<int>(first.r_agg.rows()), static_cast<int>(first.r_agg.cols()), basis.count()};
  const int cols = static_cast<int>(window.records.size()) * rl.n_l;
  Matrix data = Matrix::Zero(rl.rows(), cols);
  for (std::size_t k = 0; k < window.records.size(); ++k) {
    const SampleRecord& rec = window.records[k];
    if (rec.r_agg.rows() != rl.n_w || rec.r_agg.cols() != rl.n_l || rec.loads.size() != rl.n_l) {
      throw std::invalid_argument("window records have inconsistent dimensions");
    }
    for (int l = 0; l < rl.n_l; ++l) {
      const int c = static_cast<int>(k) * rl.n_l + l;
      for (int i = 0; i <= rl.n_phi; ++i) {
        const double scale = i == 0 ? 1.0 : basis.value(i - 1, rec.offset);
        for (int d = 0; d < rl.n_w; ++d) data(rl.agg(i, d), c) = scale * rec.r_agg(d, l);
        data(rl.ind(i, l), c) = scale;
      }
      data(rl.load(), c) = rec.loads[l];
    }
  }
  return data;
}

ExcitationReport check_persistent_excitation(const SampleWindow& window, const BasisSet& basis,
                                             double relative_tolerance) {
  const Matrix data = window_data_matrix(window, basis);
  const Matrix input = data.topRows(data.rows() - 1);
  ExcitationReport report;
  report.required = static_cast<int>(input.rows());
  Eigen::BDCSVD<Matrix> svd(input);
  const Vector& s = svd.singularValues();
  const double cutoff = s.size() > 0 ? relative_tolerance * s[0] : 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s[i] > cutoff) ++report.rank;
  }
  report.full_rank = report.rank == report.required;
  return report;
}

Vector dummy_loads(const SampleWindow& window, const BasisSet& basis, const AggregationMaps& maps,
                   const RoutingConfig& r_prime) {
  const Matrix data = window_data_matrix(window, basis);
  const Matrix input = data.topRows(data.rows() - 1);
  const Vector y = data.row(data.rows() - 1).transpose();
  const Matrix r_agg = aggregate_routing(maps, r_prime);
  const RowLayout rl{static_cast<int>(r_agg.rows()), static_cast<int>(r_agg.cols()), basis.count()};
  const auto cod = input.completeOrthogonalDecomposition();
  Vector out(rl.n_l);
  for (int l = 0; l < rl.n_l; ++l) {
    Vector target = Vector::Zero(input.rows());
    target.head(rl.n_w) = r_agg.col(l);
    target[rl.ind(0, l)] = 1.0;
    out[l] = y.dot(cod.solve(target));
  }
  return out;
}

DeepteProgram build_program(const std::vector<SampleWindow>& windows, const PredictorModel& model,
                            const RoutingConfig& r_prev, const ControllerConfig& cfg, const BasisSet& basis,
                            const AggregationMaps& maps, const PathSet& elephants, const DelayFunction& f,
                            const Vector& caps) {
  validate(cfg);
  if (cfg.regularizer != RegularizerForm::kSquaredNorm) {
    throw std::invalid_argument("the reference solver supports only the squared-norm regularizer");
  }
  const int L = cfg.past, H = cfg.horizon;
  const int n_l = maps.link_count();
  const int n_w = maps.demand_count();
  const int n_p = maps.path_count();
  if (model.past() != L || model.horizon() != H) throw std::invalid_argument("predictor horizons differ from config");
  if (static_cast<int>(windows.size()) < L) throw std::invalid_argument("not enough completed sample windows");
  if (basis.samples_per_interval() != cfg.samples || basis.count() != cfg.basis_count) {
    throw std::invalid_argument("basis set does not match the config");
  }
  if (caps.size() != n_l || r_prev.fractions.size() != n_p || elephants.path_count() != n_p) {
    throw std::invalid_argument("build_program: dimension mismatch");
  }
  for (int p = 0; p < L; ++p) {
    if (static_cast<int>(windows[p].records.size()) != cfg.samples - 1) {
      throw std::invalid_argument("sample window " + std::to_string(p + 1) + " is incomplete");
    }
  }

  DeepteProgram out;
  ConvexProgram& prog = out.program;
  ProgramLayout& lay = out.layout;
  lay.past = L;
  lay.horizon = H;
  lay.link_count = n_l;
  lay.elephant_count = n_w;
  lay.path_count = n_p;
  lay.g_size = (cfg.samples - 1) * n_l;

  for (int h = 0; h < H; ++h) {
    lay.r_prime.push_back(prog.add_variables(n_p, 0.0, 1.0));
    lay.r_agg.push_back(prog.add_variables(n_w * n_l, -kInfinity, kInfinity));
    lay.loads.push_back(prog.add_variables(n_l, -kInfinity, kInfinity));
  }
  for (int p = 1; p <= L; ++p) {
    for (int h = 0; h < H; ++h) lay.dummy.push_back(prog.add_variables(n_l, -kInfinity, kInfinity));
  }
  for (int p = 1; p <= L; ++p) {
    for (int h = 0; h < H; ++h) {
      for (int l = 0; l < n_l; ++l) {
        lay.g.push_back(prog.add_variables(lay.g_size, -kInfinity, kInfinity, 0.0, 2.0 * cfg.alpha2));
      }
    }
  }

  // Data equations. The load row is divided by its largest entry so that
  // all rows of a block have comparable scale.
  const RowLayout rl{n_w, n_l, cfg.basis_count};
  for (int p = 1; p <= L; ++p) {
    Matrix data = window_data_matrix(windows[p - 1], basis);
    const double y_scale = std::max(1.0, data.row(rl.load()).cwiseAbs().maxCoeff());
    data.row(rl.load()) /= y_scale;
    std::vector<std::vector<std::pair<int, double>>> nonzeros(rl.rows());
    for (int i = 0; i < rl.rows(); ++i) {
      for (int c = 0; c < data.cols(); ++c) {
        if (data(i, c) != 0.0) nonzeros[i].emplace_back(c, data(i, c));
      }
    }
    for (int h = 0; h < H; ++h) {
      for (int l = 0; l < n_l; ++l) {
        const int g0 = lay.g_index(p, h, l);
        for (int i = 0; i < rl.rows(); ++i) {
          double rhs = 0.0;
          if (i >= rl.ind(0, 0) && i < rl.ind(0, 0) + n_l && i - rl.ind(0, 0) == l) rhs = 1.0;
          const int row = prog.add_equality_row(rhs);
          for (const auto& [c, v] : nonzeros[i]) prog.add_coefficient(row, g0 + c, v);
          if (cfg.data_slack > 0.0 && i != rl.load()) {
            prog.add_coefficient(row, prog.add_variable(-kInfinity, kInfinity, 0.0, 2.0 * cfg.data_slack), 1.0);
          }
          if (i < n_w) prog.add_coefficient(row, lay.r_agg[h] + l * n_w + i, -1.0);
          if (i == rl.load()) prog.add_coefficient(row, lay.dummy_index(p, h, l), -1.0 / y_scale);
        }
      }
    }
  }

  // Predicted loads from the dummy loads.
  for (int h = 0; h < H; ++h) {
    for (int l = 0; l < n_l; ++l) {
      const int row = prog.add_equality_row(0.0);
      prog.add_coefficient(row, lay.loads[h] + l, 1.0);
      for (int p = 1; p <= L; ++p) prog.add_coefficient(row, lay.dummy_index(p, h, l), -model.coefficient(p, h));
    }
  }

  // Aggregation and simplex constraints.
  for (int h = 0; h < H; ++h) {
    for (int l = 0; l < n_l; ++l) {
      const SparseMatrix& m = maps.link_map(l);
      std::vector<std::vector<std::pair<int, double>>> rows(n_w);
      for (int k = 0; k < m.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
          rows[it.row()].emplace_back(lay.r_prime[h] + static_cast<int>(it.col()), -it.value());
        }
      }
      for (int d = 0; d < n_w; ++d) {
        rows[d].emplace_back(lay.r_agg[h] + l * n_w + d, 1.0);
        prog.add_equality(rows[d], 0.0);
      }
    }
    for (int d = 0; d < n_w; ++d) {
      std::vector<std::pair<int, double>> terms;
      for (int j = 0; j < elephants.path_count(d); ++j) terms.emplace_back(lay.r_prime[h] + elephants.offset(d) + j, 1.0);
      if (!terms.empty()) prog.add_equality(terms, 1.0);
    }
  }

  // Discounted delay epigraph and route-change penalty.
  double weight = 1.0;
  for (int h = 0; h < H; ++h, weight *= cfg.discount) {
    const int cost0 = prog.add_variables(n_l, -kInfinity, kInfinity, weight);
    for (int l = 0; l < n_l; ++l) {
      for (const EpigraphTerm& t : epigraph_terms(f, l, caps[l])) {
        const int s = prog.add_variable(0.0, kInfinity);
        prog.add_equality({{cost0 + l, 1.0}, {lay.loads[h] + l, -t.load_coefficient}, {s, -1.0}}, t.constant);
      }
    }
    const int up = prog.add_variables(n_p, 0.0, kInfinity, weight * cfg.alpha1);
    const int down = prog.add_variables(n_p, 0.0, kInfinity, weight * cfg.alpha1);
    for (int j = 0; j < n_p; ++j) {
      std::vector<std::pair<int, double>> terms{{lay.r_prime[h] + j, 1.0}, {up + j, -1.0}, {down + j, 1.0}};
      double rhs = 0.0;
      if (h == 0) {
        rhs = r_prev.fractions[j];
      } else {
        terms.emplace_back(lay.r_prime[h - 1] + j, -1.0);
      }
      prog.add_equality(terms, rhs);
    }
  }
  return out;
}

Controller::Controller(ControllerConfig cfg, PathSet elephants, PredictorModel model, DelayFunction f,
                       Vector capacities)
    : cfg_(std::move(cfg)),
      elephants_(std::move(elephants)),
      model_(std::move(model)),
      f_(std::move(f)),
      capacities_(std::move(capacities)),
      basis_(cfg_.samples, cfg_.basis_count),
      maps_(elephants_) {
  validate(cfg_);
}

Decision Controller::decide(const std::deque<SampleWindow>& windows, const RoutingConfig& r_prev) const {
  Decision out;
  out.routing = r_prev;
  out.report.fallback = true;
  if (static_cast<int>(windows.size()) < cfg_.past) return out;
  out.report.excitation = check_persistent_excitation(windows.front(), basis_);

  const std::vector<SampleWindow> recent(windows.begin(), windows.begin() + cfg_.past);
  const DeepteProgram dp =
      build_program(recent, model_, r_prev, cfg_, basis_, maps_, elephants_, f_, capacities_);
  const SolveReport report = solve(dp.program, cfg_.solver);
  out.report.status = report.status;
  out.report.objective = report.objective;
  out.report.iterations = report.iterations;
  if (report.status == SolveStatus::kOptimal) {
    RoutingConfig r{report.solution.segment(dp.layout.r_prime[0], dp.layout.path_count)};
    out.routing = project_to_simplex(elephants_, r);
    out.report.fallback = false;
  }
  return out;
}

}  // namespace deepte
