#include "n2a/sae.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace n2a {

namespace {

constexpr double kRhoHatEps = 1e-8;

Matrix activate(Matrix z, Activation a) {
  if (a != Activation::Identity)
    for (double& v : z.values()) v = apply_activation_scalar(a, v);
  return z;
}

Matrix derivative_from_output(const Matrix& out, Activation a) {
  Matrix d(out.rows(), out.cols(), 1.0);
  if (a == Activation::Sigmoid)
    for (std::size_t i = 0; i < out.size(); ++i)
      d.data()[i] = out.data()[i] * (1.0 - out.data()[i]);
  else if (a == Activation::Relu)
    for (std::size_t i = 0; i < out.size(); ++i)
      d.data()[i] = out.data()[i] > 0.0 ? 1.0 : 0.0;
  return d;
}

Layer random_layer(std::size_t n_out, std::size_t n_in, Activation act,
                   std::mt19937_64& gen) {
  Layer l;
  l.weights = Matrix(n_out, n_in);
  l.bias.assign(n_out, 0.0);
  l.activation = act;
  std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(double(n_in)));
  for (double& w : l.weights.values()) w = dist(gen);
  return l;
}

}  // namespace

void SaeHyperParams::validate() const {
  if (!(rho > 0.0 && rho < 1.0))
    throw DomainError("sparsity target rho must lie strictly inside (0,1)");
  if (lambda_decay < 0.0) throw ConfigError("lambda_decay must be >= 0");
  if (beta < 0.0) throw ConfigError("beta must be >= 0");
  if (learning_rate <= 0.0) throw ConfigError("learning_rate must be > 0");
}

double bernoulli_kl(double rho, double rho_hat) {
  if (!(rho > 0.0 && rho < 1.0))
    throw DomainError("bernoulli_kl: rho must lie strictly inside (0,1)");
  const double r = std::clamp(rho_hat, kRhoHatEps, 1.0 - kRhoHatEps);
  return rho * std::log(rho / r) + (1.0 - rho) * std::log((1.0 - rho) / (1.0 - r));
}

namespace {

struct AePass {
  Matrix hidden;   // N x h
  Matrix recon;    // N x d
  std::vector<double> rho_hat;  // clamped batch-mean hidden activation
};

AePass ae_forward(const Autoencoder& ae, const Matrix& X) {
  AePass p;
  p.hidden = activate(affine_nt(X, ae.encoder.weights, ae.encoder.bias),
                      ae.encoder.activation);
  p.recon = activate(affine_nt(p.hidden, ae.decoder.weights, ae.decoder.bias),
                     ae.decoder.activation);
  p.rho_hat = column_sums(p.hidden);
  for (double& r : p.rho_hat)
    r = std::clamp(r / double(X.rows()), kRhoHatEps, 1.0 - kRhoHatEps);
  return p;
}

AeLoss ae_loss_from_pass(const Autoencoder& ae, const Matrix& X, const AePass& p,
                         const SaeHyperParams& hp) {
  const auto& k = kernels::active();
  AeLoss loss;
  for (std::size_t s = 0; s < X.rows(); ++s)
    loss.reconstruction += 0.5 * k.sqdist(p.recon.row(s), X.row(s), X.cols());
  loss.reconstruction /= double(X.rows());
  loss.decay = 0.5 * hp.lambda_decay *
               (k.sumsq(ae.encoder.weights.data(), ae.encoder.weights.size()) +
                k.sumsq(ae.decoder.weights.data(), ae.decoder.weights.size()));
  for (double r : p.rho_hat) loss.sparsity += bernoulli_kl(hp.rho, r);
  loss.sparsity *= hp.beta;
  loss.total = loss.reconstruction + loss.decay + loss.sparsity;

  if (!std::isfinite(loss.reconstruction))
    throw NumericError("autoencoder loss: reconstruction term is non-finite");
  if (!std::isfinite(loss.decay))
    throw NumericError("autoencoder loss: weight-decay term is non-finite");
  if (!std::isfinite(loss.sparsity))
    throw NumericError("autoencoder loss: sparsity term is non-finite");
  return loss;
}

}  // namespace

AeLoss ae_loss(const Autoencoder& ae, const Matrix& X, const SaeHyperParams& hp) {
  hp.validate();
  if (X.rows() == 0) throw DataError("autoencoder loss needs at least one sample");
  return ae_loss_from_pass(ae, X, ae_forward(ae, X), hp);
}

AeEval ae_loss_and_grad(const Autoencoder& ae, const Matrix& X, const SaeHyperParams& hp) {
  hp.validate();
  if (X.rows() == 0) throw DataError("autoencoder loss needs at least one sample");
  if (X.cols() != ae.encoder.in_dim())
    throw ShapeError("autoencoder input width mismatch");
  if (ae.decoder.out_dim() != ae.encoder.in_dim())
    throw ShapeError("decoder output width != encoder input width");

  const auto& k = kernels::active();
  const std::size_t n = X.rows();
  const double inv_n = 1.0 / double(n);

  AePass p = ae_forward(ae, X);
  AeEval ev;
  ev.loss = ae_loss_from_pass(ae, X, p, hp);

  // delta at the decoder output: (recon - x)/N through phi'.
  Matrix d3 = derivative_from_output(p.recon, ae.decoder.activation);
  for (std::size_t s = 0; s < n; ++s) {
    const double* x = X.row(s);
    const double* r = p.recon.row(s);
    double* d = d3.row(s);
    for (std::size_t j = 0; j < X.cols(); ++j) d[j] *= (r[j] - x[j]) * inv_n;
  }

  // delta at the hidden layer: decoder backprop plus the sparsity pathway,
  // whose rho_hat dependence spreads 1/N to every sample uniformly.
  std::vector<double> sparsity_grad(p.rho_hat.size());
  for (std::size_t j = 0; j < p.rho_hat.size(); ++j) {
    const double r = p.rho_hat[j];
    sparsity_grad[j] = hp.beta * inv_n * (-hp.rho / r + (1.0 - hp.rho) / (1.0 - r));
  }
  Matrix d2 = matmul_nn(d3, ae.decoder.weights);
  for (std::size_t s = 0; s < n; ++s)
    k.axpy(1.0, sparsity_grad.data(), d2.row(s), d2.cols());
  const Matrix phi2 = derivative_from_output(p.hidden, ae.encoder.activation);
  for (std::size_t i = 0; i < d2.size(); ++i) d2.data()[i] *= phi2.data()[i];

  ev.grads.decoder_w = Matrix(ae.decoder.out_dim(), ae.decoder.in_dim());
  accumulate_outer(d3, p.hidden, ev.grads.decoder_w);
  k.axpy(hp.lambda_decay, ae.decoder.weights.data(), ev.grads.decoder_w.data(),
         ev.grads.decoder_w.size());
  ev.grads.decoder_b = column_sums(d3);

  ev.grads.encoder_w = Matrix(ae.encoder.out_dim(), ae.encoder.in_dim());
  accumulate_outer(d2, X, ev.grads.encoder_w);
  k.axpy(hp.lambda_decay, ae.encoder.weights.data(), ev.grads.encoder_w.data(),
         ev.grads.encoder_w.size());
  ev.grads.encoder_b = column_sums(d2);
  return ev;
}

Autoencoder train_autoencoder(const Matrix& X, std::size_t hidden_size,
                              const SaeHyperParams& hp, std::uint64_t seed,
                              TrainLog* log, Activation activation) {
  hp.validate();
  if (hidden_size == 0) throw ConfigError("hidden_size must be >= 1");
  if (X.rows() == 0) throw DataError("training set is empty");

  std::mt19937_64 gen(seed);
  const Activation dec_act =
      activation == Activation::Sigmoid ? Activation::Sigmoid : Activation::Identity;
  Autoencoder ae;
  ae.encoder = random_layer(hidden_size, X.cols(), activation, gen);
  ae.decoder = random_layer(X.cols(), hidden_size, dec_act, gen);

  const auto& k = kernels::active();
  for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
    AeEval ev = ae_loss_and_grad(ae, X, hp);
    if (!std::isfinite(ev.loss.total))
      throw TrainingError("autoencoder training diverged at epoch " + std::to_string(epoch));
    if (log) log->loss.push_back(ev.loss.total);
    k.axpy(-hp.learning_rate, ev.grads.encoder_w.data(), ae.encoder.weights.data(),
           ae.encoder.weights.size());
    k.axpy(-hp.learning_rate, ev.grads.encoder_b.data(), ae.encoder.bias.data(),
           ae.encoder.bias.size());
    k.axpy(-hp.learning_rate, ev.grads.decoder_w.data(), ae.decoder.weights.data(),
           ae.decoder.weights.size());
    k.axpy(-hp.learning_rate, ev.grads.decoder_b.data(), ae.decoder.bias.data(),
           ae.decoder.bias.size());
  }
  return ae;
}

Network train_teacher(const Matrix& X, const std::vector<int>& y,
                      const std::vector<std::size_t>& hidden_widths,
                      const SaeHyperParams& hp, std::size_t ft_epochs,
                      std::uint64_t seed, ClassLoss ft_loss, double ft_learning_rate,
                      TrainLog* ft_log, std::vector<TrainLog>* pretrain_logs,
                      Activation activation) {
  hp.validate();
  if (hidden_widths.empty()) throw ConfigError("teacher needs at least one hidden layer");
  if (X.rows() == 0) throw DataError("training set is empty");
  int max_label = 0;
  for (int label : y) {
    if (label < 0) throw DataError("negative class label");
    max_label = std::max(max_label, label);
  }
  const std::size_t classes = std::size_t(max_label) + 1;
  check_labels(y, X.rows(), classes);

  std::mt19937_64 master(seed);

  // Greedy phase: each autoencoder learns to reconstruct the previous
  // hidden representation; its encoder becomes the next stacked layer.
  Network net;
  net.input_dim = X.cols();
  Matrix rep = X;
  for (std::size_t width : hidden_widths) {
    const std::uint64_t ae_seed = master();
    TrainLog* log = nullptr;
    if (pretrain_logs) {
      pretrain_logs->emplace_back();
      log = &pretrain_logs->back();
    }
    Autoencoder ae = train_autoencoder(rep, width, hp, ae_seed, log, activation);
    rep = activate(affine_nt(rep, ae.encoder.weights, ae.encoder.bias),
                   ae.encoder.activation);
    net.hidden.push_back(std::move(ae.encoder));
  }
  net.classifier = random_layer(classes, hidden_widths.back(), Activation::Identity, master);
  net.validate();

  // Supervised fine-tuning of the whole stack.
  const double ft_lr = ft_learning_rate > 0.0 ? ft_learning_rate : hp.learning_rate;
  for (std::size_t epoch = 0; epoch < ft_epochs; ++epoch) {
    ForwardTrace trace = forward(net, X);
    const double loss = ft_loss == ClassLoss::MseSoftmax
                            ? mse_softmax_mean(trace.probabilities, y)
                            : cross_entropy_mean(trace.probabilities, y);
    if (!std::isfinite(loss))
      throw TrainingError("teacher fine-tuning diverged at epoch " + std::to_string(epoch));
    if (ft_log) ft_log->loss.push_back(loss);
    Matrix d_logits = class_loss_dlogits(ft_loss, trace.probabilities, y);
    NetGrads grads = NetGrads::zeros_like(net);
    backprop_accumulate(net, trace, &d_logits, nullptr, grads);
    apply_update(net, grads, ft_lr);
  }
  return net;
}

}  // namespace n2a
