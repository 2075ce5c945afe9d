#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "n2a/losses.hpp"
#include "n2a/nn.hpp"

namespace n2a {

struct SaeHyperParams {
  double lambda_decay = 0.05;  // weight-decay strength (weights only, no biases)
  double rho = 0.1;            // target mean activation of each hidden unit
  double beta = 0.8;           // weight of the KL sparsity penalty
  std::size_t epochs = 200;    // full-batch gradient steps per autoencoder
  double learning_rate = 0.5;

  void validate() const;
};

// Untied encoder/decoder pair; decoder maps back to the encoder's input width.
struct Autoencoder {
  Layer encoder;
  Layer decoder;

  friend bool operator==(const Autoencoder&, const Autoencoder&) = default;
};

// KL(Bernoulli(rho) || Bernoulli(rho_hat)); rho_hat is clamped to
// [1e-8, 1-1e-8] before evaluation, rho must lie strictly inside (0,1).
double bernoulli_kl(double rho, double rho_hat);

struct AeGrads {
  Matrix encoder_w;
  std::vector<double> encoder_b;
  Matrix decoder_w;
  std::vector<double> decoder_b;
};

struct AeLoss {
  double total = 0.0;
  double reconstruction = 0.0;  // mean over samples of 0.5*||recon - x||^2
  double decay = 0.0;           // (lambda/2) * sum of squared weights
  double sparsity = 0.0;        // beta * sum_j KL(rho || rho_hat_j)
};

struct AeEval {
  AeLoss loss;
  AeGrads grads;
};

AeLoss ae_loss(const Autoencoder& ae, const Matrix& X, const SaeHyperParams& hp);

// Loss plus exact full-batch gradients, including the coupling of the
// sparsity term through the batch-mean activations.
AeEval ae_loss_and_grad(const Autoencoder& ae, const Matrix& X, const SaeHyperParams& hp);

struct TrainLog {
  std::vector<double> loss;
};

// Gradient descent on the sparse-autoencoder cost. Sigmoid units by default
// (the KL sparsity target presumes activations in [0,1]); relu is offered as
// an explicit mode for nets meant to pass through exact deepen transforms,
// in which case the decoder is linear and beta is best left at zero.
Autoencoder train_autoencoder(const Matrix& X, std::size_t hidden_size,
                              const SaeHyperParams& hp, std::uint64_t seed,
                              TrainLog* log = nullptr,
                              Activation activation = Activation::Sigmoid);

// Greedy layer-wise pretraining followed by supervised fine-tuning of the
// stacked net (default loss: MSE between one-hot labels and softmax output).
// Class count is inferred as max(y)+1. MSE-through-softmax gradients are an
// order of magnitude smaller than cross-entropy ones, so the fine-tune phase
// takes its own step size (<= 0 means: reuse hp.learning_rate).
Network train_teacher(const Matrix& X, const std::vector<int>& y,
                      const std::vector<std::size_t>& hidden_widths,
                      const SaeHyperParams& hp, std::size_t ft_epochs,
                      std::uint64_t seed,
                      ClassLoss ft_loss = ClassLoss::MseSoftmax,
                      double ft_learning_rate = -1.0,
                      TrainLog* ft_log = nullptr,
                      std::vector<TrainLog>* pretrain_logs = nullptr,
                      Activation activation = Activation::Sigmoid);

}  // namespace n2a
