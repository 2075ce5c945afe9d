#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "n2a/matrix.hpp"

namespace n2a {

enum class Activation { Sigmoid, Relu, Identity };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& s);

double apply_activation_scalar(Activation a, double z);

// One dense layer: out = act(W x + b), W is (n_out x n_in).
struct Layer {
  Matrix weights;
  std::vector<double> bias;
  Activation activation = Activation::Sigmoid;

  std::size_t in_dim() const { return weights.cols(); }
  std::size_t out_dim() const { return weights.rows(); }

  friend bool operator==(const Layer&, const Layer&) = default;
};

// Feed-forward net: hidden stack plus a linear classifier head whose logits
// go through softmax. The classifier is the psi_c parameter block; everything
// in `hidden` is psi_f.
struct Network {
  std::size_t input_dim = 0;
  std::vector<Layer> hidden;
  Layer classifier;

  std::size_t classes() const { return classifier.out_dim(); }
  std::vector<std::size_t> hidden_widths() const;
  // Full width chain: input_dim, hidden widths..., classes.
  std::vector<std::size_t> arch() const;
  // Checks the dimension chain and finiteness; throws ValidationError.
  void validate() const;

  friend bool operator==(const Network&, const Network&) = default;
};

struct ForwardTrace {
  // activations[0] is the input batch, then one matrix per hidden layer.
  std::vector<Matrix> activations;
  Matrix logits;
  Matrix probabilities;

  // h-level features: output of the last hidden layer.
  const Matrix& features() const { return activations.back(); }
};

// Row-wise stabilized softmax (max subtraction), total on finite input.
Matrix softmax(const Matrix& logits);

ForwardTrace forward(const Network& net, const Matrix& X);

// arch = {input_dim, hidden widths..., classes}; needs at least 3 entries.
// Weights ~ N(0, 1/fan_in), biases zero; deterministic per seed.
Network init_random(const std::vector<std::size_t>& arch, Activation activation,
                    std::uint64_t seed);

// Model file: single JSON document with fields input_dim, layers
// (rows/cols/activation/weights/bias per layer) and classifier.
void save_model(const Network& net, const std::string& path);
Network load_model(const std::string& path);
std::string model_to_json_string(const Network& net);
Network model_from_json_string(const std::string& text);

// Per-parameter gradient (or update) buffers matching a Network's shape.
struct NetGrads {
  std::vector<Matrix> hidden_w;
  std::vector<std::vector<double>> hidden_b;
  Matrix classifier_w;
  std::vector<double> classifier_b;

  static NetGrads zeros_like(const Network& net);
};

// Backpropagates through net given a forward trace. d_logits is dJ/dlogits
// (may be null when no classification loss flows through this batch);
// d_features is an extra gradient injected at the last hidden output (may be
// null). Classifier gradients accumulate only from d_logits.
void backprop_accumulate(const Network& net, const ForwardTrace& trace,
                         const Matrix* d_logits, const Matrix* d_features,
                         NetGrads& grads);

// net -= step * grads on every parameter.
void apply_update(Network& net, const NetGrads& grads, double step);

}  // namespace n2a
