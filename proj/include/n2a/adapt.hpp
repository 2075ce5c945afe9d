#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "n2a/losses.hpp"
#include "n2a/mmd.hpp"
#include "n2a/nn.hpp"

namespace n2a {

enum class LrRule { BoldDriver, Fixed };

const char* to_string(LrRule r);
LrRule lr_rule_from_string(const std::string& s);

struct AdaptConfig {
  double lambda_mmd = 1.0;
  std::size_t iterations = 50;
  double eta0 = 0.1;
  LrRule lr_rule = LrRule::BoldDriver;
  // Empty kernel means: resolve the rbf bandwidth once at the start of
  // fine_tune with the median heuristic on the initial h-level features,
  // then keep it fixed for the whole run.
  std::optional<KernelSpec> kernel;
  ClassLoss class_loss = ClassLoss::CrossEntropy;
  std::uint64_t seed = 0;

  void validate() const;
};

struct IterRecord {
  std::size_t iter = 0;
  double loss_total = 0.0;
  double loss_class = 0.0;
  double loss_mmd = 0.0;
  double eta = 0.0;
};

struct EvalMetrics {
  double accuracy = 0.0;
  std::vector<double> per_class_accuracy;
  std::vector<std::vector<std::size_t>> confusion;  // confusion[true][pred]
};

struct AdaptReport {
  IterRecord initial;              // losses at the starting parameters
  std::vector<IterRecord> iters;   // one record per training iteration
  KernelSpec kernel;               // the kernel actually used
  EvalMetrics final_metrics;       // on the labeled target training split

  std::string to_csv() const;      // iter,loss_total,loss_class,loss_mmd,eta
  void save_csv(const std::string& path) const;
};

// Thrown when the bold-driver learning rate underflows; carries what was
// recorded up to that point.
struct ConvergenceError : Error {
  ConvergenceError(const std::string& msg, AdaptReport partial_report)
      : Error(msg), report(std::move(partial_report)) {}
  AdaptReport report;
};

// Mean cross-entropy of the traced batch (Eq. of the C-class softmax loss).
double cross_entropy_loss(const ForwardTrace& trace, const std::vector<int>& y);

struct JointLoss {
  double total = 0.0;
  double class_term = 0.0;  // classification loss on the source batch
  double mmd_term = 0.0;    // class-wise squared MMD on h-level features
};

// total = class_term + lambda_mmd * mmd_term, computed with the given
// (already resolved) kernel when cfg.kernel is set; otherwise the caller
// must resolve it first (fine_tune does).
JointLoss joint_loss(const Network& net, const Matrix& Xs, const std::vector<int>& ys,
                     const Matrix& Xt, const std::vector<int>& yt,
                     const AdaptConfig& cfg);

// Gradients of the joint objective. The feature-extractor part receives the
// classification gradient plus lambda times the MMD gradient backpropagated
// through the h-level features of both domains; the classifier part receives
// the classification gradient only.
NetGrads joint_grad(const Network& net, const Matrix& Xs, const std::vector<int>& ys,
                    const Matrix& Xt, const std::vector<int>& yt,
                    const AdaptConfig& cfg);

// Full-batch gradient descent on the joint objective. Bold-driver rule:
// after an improving step eta grows by 1.05; after a worsening step the step
// is rolled back, eta halves and the step is retried once from the same
// point. Deterministic for fixed inputs and seed.
std::pair<Network, AdaptReport> fine_tune(const Network& net, const Matrix& Xs,
                                          const std::vector<int>& ys,
                                          const Matrix& Xt_train,
                                          const std::vector<int>& yt_train,
                                          const AdaptConfig& cfg);

EvalMetrics evaluate(const Network& net, const Matrix& X, const std::vector<int>& y);

}  // namespace n2a
