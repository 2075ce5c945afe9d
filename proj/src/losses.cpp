#include "n2a/losses.hpp"

#include <cmath>
#include <string>

namespace n2a {

const char* to_string(ClassLoss l) {
  return l == ClassLoss::CrossEntropy ? "cross_entropy" : "mse_softmax";
}

ClassLoss class_loss_from_string(const std::string& s) {
  if (s == "cross_entropy") return ClassLoss::CrossEntropy;
  if (s == "mse_softmax") return ClassLoss::MseSoftmax;
  throw ConfigError("unknown class loss: " + s);
}

void check_labels(const std::vector<int>& y, std::size_t n_rows, std::size_t classes) {
  if (y.size() != n_rows)
    throw DataError("label count " + std::to_string(y.size()) + " != sample count " +
                    std::to_string(n_rows));
  for (std::size_t i = 0; i < y.size(); ++i)
    if (y[i] < 0 || std::size_t(y[i]) >= classes)
      throw DataError("label " + std::to_string(y[i]) + " at row " + std::to_string(i) +
                      " out of range [0," + std::to_string(classes) + ")");
}

double cross_entropy_mean(const Matrix& probs, const std::vector<int>& y) {
  check_labels(y, probs.rows(), probs.cols());
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    const double p = std::max(probs(i, std::size_t(y[i])), 1e-12);
    acc -= std::log(p);
  }
  return acc / double(probs.rows());
}

double mse_softmax_mean(const Matrix& probs, const std::vector<int>& y) {
  check_labels(y, probs.rows(), probs.cols());
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    for (std::size_t c = 0; c < probs.cols(); ++c) {
      const double t = std::size_t(y[i]) == c ? 1.0 : 0.0;
      const double d = probs(i, c) - t;
      acc += 0.5 * d * d;
    }
  }
  return acc / double(probs.rows());
}

Matrix class_loss_dlogits(ClassLoss loss, const Matrix& probs, const std::vector<int>& y) {
  check_labels(y, probs.rows(), probs.cols());
  const double inv_n = 1.0 / double(probs.rows());
  Matrix d(probs.rows(), probs.cols());
  if (loss == ClassLoss::CrossEntropy) {
    for (std::size_t i = 0; i < probs.rows(); ++i)
      for (std::size_t c = 0; c < probs.cols(); ++c)
        d(i, c) = (probs(i, c) - (std::size_t(y[i]) == c ? 1.0 : 0.0)) * inv_n;
    return d;
  }
  // MSE on softmax: dJ/dz_k = p_k * (e_k - e.p) with e = (p - t)/N.
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    double edotp = 0.0;
    for (std::size_t c = 0; c < probs.cols(); ++c) {
      const double e = (probs(i, c) - (std::size_t(y[i]) == c ? 1.0 : 0.0)) * inv_n;
      d(i, c) = e;
      edotp += e * probs(i, c);
    }
    for (std::size_t c = 0; c < probs.cols(); ++c)
      d(i, c) = probs(i, c) * (d(i, c) - edotp);
  }
  return d;
}

}  // namespace n2a
