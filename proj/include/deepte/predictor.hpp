#ifndef DEEPTE_PREDICTOR_HPP_
#define DEEPTE_PREDICTOR_HPP_

#include <vector>

#include "deepte/net_core.hpp"

namespace deepte {

// Row k is the mean of rows [N k, N (k + 1)) of `values`.
Matrix control_interval_means(const Matrix& values, int samples_per_interval);

// Scalar coefficients shared by all demands: X(p - 1, h) = X_{p,h}, so that
// w_hat(k + h) = sum_p X_{p,h} w_bar(k - p).
struct PredictorModel {
  Matrix X;

  int past() const { return static_cast<int>(X.rows()); }
  int horizon() const { return static_cast<int>(X.cols()); }
  double coefficient(int p, int h) const { return X(p - 1, h); }
};

// Ridge least squares over every (interval, demand) pair of the training
// means: minimize ||W_future - W_history X||^2 + ridge ||X||^2.
PredictorModel fit_predictor(const Matrix& means, int past, int horizon, double ridge = 1e-6);

// recent[p - 1] = w_bar(k - p). Returns w_hat(k), ..., w_hat(k + H - 1).
std::vector<Vector> predict_means(const PredictorModel& model, const std::vector<Vector>& recent);

}  // namespace deepte

#endif  // DEEPTE_PREDICTOR_HPP_
