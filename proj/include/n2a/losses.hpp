#pragma once

#include <vector>

#include "n2a/matrix.hpp"

namespace n2a {

enum class ClassLoss { CrossEntropy, MseSoftmax };

const char* to_string(ClassLoss l);
ClassLoss class_loss_from_string(const std::string& s);

// Mean over the batch of -log p(true class); probabilities floored at 1e-12.
double cross_entropy_mean(const Matrix& probs, const std::vector<int>& y);

// Mean over the batch of 0.5 * ||p - onehot(y)||^2.
double mse_softmax_mean(const Matrix& probs, const std::vector<int>& y);

// dJ/dlogits for either loss, softmax Jacobian included.
Matrix class_loss_dlogits(ClassLoss loss, const Matrix& probs, const std::vector<int>& y);

void check_labels(const std::vector<int>& y, std::size_t n_rows, std::size_t classes);

}  // namespace n2a
