#include "deepte/predictor.hpp"

#include <stdexcept>
#include <string>

namespace deepte {

Matrix control_interval_means(const Matrix& values, int n) {
  if (n <= 0) throw std::invalid_argument("samples per interval must be positive");
  if (values.rows() % n != 0) {
    throw std::invalid_argument("series length " + std::to_string(values.rows()) +
                                " is not a multiple of " + std::to_string(n));
  }
  const Eigen::Index k = values.rows() / n;
  Matrix means(k, values.cols());
  for (Eigen::Index i = 0; i < k; ++i) means.row(i) = values.middleRows(i * n, n).colwise().mean();
  return means;
}

PredictorModel fit_predictor(const Matrix& means, int past, int horizon, double ridge) {
  if (past < 1 || horizon < 1) throw std::invalid_argument("horizons must be positive");
  if (ridge < 0.0) throw std::invalid_argument("ridge weight must be nonnegative");
  const int intervals = static_cast<int>(means.rows());
  const int windows = intervals - past - horizon + 1;
  if (windows < 1) {
    throw std::invalid_argument("need at least " + std::to_string(past + horizon) + " training intervals, got " +
                                std::to_string(intervals));
  }
  const Eigen::Index n_w = means.cols();
  Matrix history(windows * n_w, past), future(windows * n_w, horizon);
  for (int i = 0; i < windows; ++i) {
    const int k = i + past;  // first predicted interval
    for (int p = 1; p <= past; ++p) history.block(i * n_w, p - 1, n_w, 1) = means.row(k - p).transpose();
    for (int h = 0; h < horizon; ++h) future.block(i * n_w, h, n_w, 1) = means.row(k + h).transpose();
  }
  Matrix gram = history.transpose() * history;
  gram.diagonal().array() += ridge;
  PredictorModel model;
  model.X = gram.ldlt().solve(history.transpose() * future);
  return model;
}

std::vector<Vector> predict_means(const PredictorModel& model, const std::vector<Vector>& recent) {
  if (static_cast<int>(recent.size()) != model.past()) {
    throw std::invalid_argument("predict_means: expected " + std::to_string(model.past()) + " recent means");
  }
  std::vector<Vector> out;
  for (int h = 0; h < model.horizon(); ++h) {
    Vector w = Vector::Zero(recent.front().size());
    for (int p = 1; p <= model.past(); ++p) {
      if (recent[p - 1].size() != w.size()) throw std::invalid_argument("predict_means: dimension mismatch");
      w += model.coefficient(p, h) * recent[p - 1];
    }
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace deepte
