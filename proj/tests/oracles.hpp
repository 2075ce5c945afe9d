#pragma once

// Independent reference implementations for the test suites. Everything here
// is written with plain element loops on purpose: these oracles must not
// share any code path with the library kernels they check.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "n2a/nn.hpp"
#include "n2a/sae.hpp"

namespace oracle {

// Triple-loop forward pass: per sample, per node, per input.
inline n2a::Matrix naive_forward_probs(const n2a::Network& net, const n2a::Matrix& X) {
  auto act = [](n2a::Activation a, double z) {
    switch (a) {
      case n2a::Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-z));
      case n2a::Activation::Relu: return z > 0.0 ? z : 0.0;
      default: return z;
    }
  };
  const std::size_t n = X.rows();
  std::vector<std::vector<double>> cur(n);
  for (std::size_t s = 0; s < n; ++s)
    cur[s].assign(X.row(s), X.row(s) + X.cols());
  for (const auto& layer : net.hidden) {
    std::vector<std::vector<double>> next(n);
    for (std::size_t s = 0; s < n; ++s) {
      next[s].assign(layer.out_dim(), 0.0);
      for (std::size_t o = 0; o < layer.out_dim(); ++o) {
        double z = layer.bias[o];
        for (std::size_t i = 0; i < layer.in_dim(); ++i) z += layer.weights(o, i) * cur[s][i];
        next[s][o] = act(layer.activation, z);
      }
    }
    cur = std::move(next);
  }
  n2a::Matrix probs(n, net.classifier.out_dim());
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<double> z(net.classifier.out_dim());
    for (std::size_t o = 0; o < net.classifier.out_dim(); ++o) {
      z[o] = net.classifier.bias[o];
      for (std::size_t i = 0; i < net.classifier.in_dim(); ++i)
        z[o] += net.classifier.weights(o, i) * cur[s][i];
    }
    double zmax = z[0];
    for (double v : z) zmax = std::max(zmax, v);
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - zmax);
    for (std::size_t o = 0; o < z.size(); ++o) probs(s, o) = std::exp(z[o] - zmax) / sum;
  }
  return probs;
}

// Same walk but stopping at the last hidden layer (h-level features).
inline n2a::Matrix naive_forward_features(const n2a::Network& net, const n2a::Matrix& X) {
  auto act = [](n2a::Activation a, double z) {
    switch (a) {
      case n2a::Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-z));
      case n2a::Activation::Relu: return z > 0.0 ? z : 0.0;
      default: return z;
    }
  };
  const std::size_t n = X.rows();
  std::vector<std::vector<double>> cur(n);
  for (std::size_t s = 0; s < n; ++s)
    cur[s].assign(X.row(s), X.row(s) + X.cols());
  for (const auto& layer : net.hidden) {
    std::vector<std::vector<double>> next(n);
    for (std::size_t s = 0; s < n; ++s) {
      next[s].assign(layer.out_dim(), 0.0);
      for (std::size_t o = 0; o < layer.out_dim(); ++o) {
        double z = layer.bias[o];
        for (std::size_t i = 0; i < layer.in_dim(); ++i) z += layer.weights(o, i) * cur[s][i];
        next[s][o] = act(layer.activation, z);
      }
    }
    cur = std::move(next);
  }
  n2a::Matrix out(n, cur[0].size());
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t j = 0; j < cur[s].size(); ++j) out(s, j) = cur[s][j];
  return out;
}

// O(n^2) kernel-sum MMD^2 with its own scalar rbf.
inline double brute_mmd2(const n2a::Matrix& A, const n2a::Matrix& B, double sigma) {
  auto k = [&](const double* a, const double* b, std::size_t d) {
    double sq = 0.0;
    for (std::size_t i = 0; i < d; ++i) sq += (a[i] - b[i]) * (a[i] - b[i]);
    return std::exp(-sq / (2.0 * sigma * sigma));
  };
  const std::size_t na = A.rows(), nb = B.rows(), d = A.cols();
  double aa = 0.0, bb = 0.0, ab = 0.0;
  for (std::size_t i = 0; i < na; ++i)
    for (std::size_t j = 0; j < na; ++j) aa += k(A.row(i), A.row(j), d);
  for (std::size_t i = 0; i < nb; ++i)
    for (std::size_t j = 0; j < nb; ++j) bb += k(B.row(i), B.row(j), d);
  for (std::size_t i = 0; i < na; ++i)
    for (std::size_t j = 0; j < nb; ++j) ab += k(A.row(i), B.row(j), d);
  return aa / double(na * na) + bb / double(nb * nb) - 2.0 * ab / double(na * nb);
}

// Parameter enumeration for finite-difference checks; the order matches the
// flatten_grads overloads below.
inline std::vector<double*> all_params(n2a::Network& net) {
  std::vector<double*> p;
  for (auto& l : net.hidden) {
    for (std::size_t i = 0; i < l.weights.size(); ++i) p.push_back(l.weights.data() + i);
    for (auto& b : l.bias) p.push_back(&b);
  }
  for (std::size_t i = 0; i < net.classifier.weights.size(); ++i)
    p.push_back(net.classifier.weights.data() + i);
  for (auto& b : net.classifier.bias) p.push_back(&b);
  return p;
}

inline std::vector<double> flatten_grads(const n2a::NetGrads& g) {
  std::vector<double> out;
  for (std::size_t l = 0; l < g.hidden_w.size(); ++l) {
    out.insert(out.end(), g.hidden_w[l].values().begin(), g.hidden_w[l].values().end());
    out.insert(out.end(), g.hidden_b[l].begin(), g.hidden_b[l].end());
  }
  out.insert(out.end(), g.classifier_w.values().begin(), g.classifier_w.values().end());
  out.insert(out.end(), g.classifier_b.begin(), g.classifier_b.end());
  return out;
}

inline std::vector<double*> all_params(n2a::Autoencoder& ae) {
  std::vector<double*> p;
  for (std::size_t i = 0; i < ae.encoder.weights.size(); ++i)
    p.push_back(ae.encoder.weights.data() + i);
  for (auto& b : ae.encoder.bias) p.push_back(&b);
  for (std::size_t i = 0; i < ae.decoder.weights.size(); ++i)
    p.push_back(ae.decoder.weights.data() + i);
  for (auto& b : ae.decoder.bias) p.push_back(&b);
  return p;
}

inline std::vector<double> flatten_grads(const n2a::AeGrads& g) {
  std::vector<double> out;
  out.insert(out.end(), g.encoder_w.values().begin(), g.encoder_w.values().end());
  out.insert(out.end(), g.encoder_b.begin(), g.encoder_b.end());
  out.insert(out.end(), g.decoder_w.values().begin(), g.decoder_w.values().end());
  out.insert(out.end(), g.decoder_b.begin(), g.decoder_b.end());
  return out;
}

inline double central_diff(const std::function<double()>& f, double* param, double h) {
  const double saved = *param;
  *param = saved + h;
  const double up = f();
  *param = saved - h;
  const double down = f();
  *param = saved;
  return (up - down) / (2.0 * h);
}

// Relative error with a small floor so finite-difference roundoff on
// near-zero entries does not dominate.
inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-3});
}

// Worst elementwise relative error between an analytic gradient vector and
// central differences of `f` over `params`.
inline double max_grad_rel_err(const std::vector<double*>& params,
                               const std::vector<double>& analytic,
                               const std::function<double()>& f, double h = 1e-5) {
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i)
    worst = std::max(worst, rel_err(analytic[i], central_diff(f, params[i], h)));
  return worst;
}

inline n2a::Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                                 double lo = -1.0, double hi = 1.0) {
  n2a::Matrix m(rows, cols);
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  for (double& v : m.values()) v = dist(gen);
  return m;
}

inline double max_abs_diff(const n2a::Matrix& a, const n2a::Matrix& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  return worst;
}

}  // namespace oracle
