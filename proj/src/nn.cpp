#include "n2a/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace n2a {

using nlohmann::json;

const char* to_string(Activation a) {
  switch (a) {
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Relu: return "relu";
    case Activation::Identity: return "identity";
  }
  return "?";
}

Activation activation_from_string(const std::string& s) {
  if (s == "sigmoid") return Activation::Sigmoid;
  if (s == "relu") return Activation::Relu;
  if (s == "identity") return Activation::Identity;
  throw ValidationError("unknown activation tag: " + s);
}

double apply_activation_scalar(Activation a, double z) {
  switch (a) {
    case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-z));
    case Activation::Relu: return z > 0.0 ? z : 0.0;
    case Activation::Identity: return z;
  }
  return z;
}

namespace {

void apply_activation(Matrix& m, Activation a) {
  if (a == Activation::Identity) return;
  for (double& v : m.values()) v = apply_activation_scalar(a, v);
}

// phi'(z) computed from the layer output a (enough for all three kinds).
Matrix activation_derivative(const Matrix& out, Activation a) {
  Matrix d(out.rows(), out.cols(), 1.0);
  switch (a) {
    case Activation::Sigmoid:
      for (std::size_t i = 0; i < out.size(); ++i) {
        const double v = out.data()[i];
        d.data()[i] = v * (1.0 - v);
      }
      break;
    case Activation::Relu:
      for (std::size_t i = 0; i < out.size(); ++i)
        d.data()[i] = out.data()[i] > 0.0 ? 1.0 : 0.0;
      break;
    case Activation::Identity:
      break;
  }
  return d;
}

}  // namespace

std::vector<std::size_t> Network::hidden_widths() const {
  std::vector<std::size_t> w;
  w.reserve(hidden.size());
  for (const auto& l : hidden) w.push_back(l.out_dim());
  return w;
}

std::vector<std::size_t> Network::arch() const {
  std::vector<std::size_t> a{input_dim};
  for (const auto& l : hidden) a.push_back(l.out_dim());
  a.push_back(classifier.out_dim());
  return a;
}

void Network::validate() const {
  if (input_dim == 0) throw ValidationError("network input_dim is zero");
  if (hidden.empty()) throw ValidationError("network has no hidden layers");
  std::size_t prev = input_dim;
  for (std::size_t l = 0; l < hidden.size(); ++l) {
    const Layer& lay = hidden[l];
    if (lay.bias.size() != lay.out_dim())
      throw ValidationError("hidden layer " + std::to_string(l + 1) +
                            ": bias length != weight rows");
    if (lay.in_dim() != prev)
      throw ValidationError("hidden layer " + std::to_string(l + 1) +
                            ": input width " + std::to_string(lay.in_dim()) +
                            " != previous width " + std::to_string(prev));
    if (!lay.weights.all_finite())
      throw ValidationError("hidden layer " + std::to_string(l + 1) + ": non-finite weight");
    prev = lay.out_dim();
  }
  if (classifier.bias.size() != classifier.out_dim())
    throw ValidationError("classifier: bias length != weight rows");
  if (classifier.in_dim() != prev)
    throw ValidationError("classifier input width != last hidden width");
  if (!classifier.weights.all_finite())
    throw ValidationError("classifier: non-finite weight");
}

Matrix softmax(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const double* z = logits.row(i);
    double* out = p.row(i);
    double zmax = z[0];
    for (std::size_t j = 1; j < logits.cols(); ++j) zmax = std::max(zmax, z[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < logits.cols(); ++j) {
      out[j] = std::exp(z[j] - zmax);
      sum += out[j];
    }
    const double inv = 1.0 / sum;
    for (std::size_t j = 0; j < logits.cols(); ++j) out[j] *= inv;
  }
  return p;
}

ForwardTrace forward(const Network& net, const Matrix& X) {
  net.validate();
  if (X.cols() != net.input_dim)
    throw ShapeError("forward: input has " + std::to_string(X.cols()) +
                     " columns, network expects " + std::to_string(net.input_dim));
  if (!X.all_finite()) throw NumericError("forward: non-finite value in input batch");

  ForwardTrace trace;
  trace.activations.reserve(net.hidden.size() + 1);
  trace.activations.push_back(X);
  for (std::size_t l = 0; l < net.hidden.size(); ++l) {
    const Layer& lay = net.hidden[l];
    Matrix z = affine_nt(trace.activations.back(), lay.weights, lay.bias);
    apply_activation(z, lay.activation);
    if (!z.all_finite())
      throw NumericError("forward: non-finite activation in hidden layer " +
                         std::to_string(l + 1));
    trace.activations.push_back(std::move(z));
  }
  trace.logits = affine_nt(trace.activations.back(), net.classifier.weights,
                           net.classifier.bias);
  if (!trace.logits.all_finite()) throw NumericError("forward: non-finite classifier logits");
  trace.probabilities = softmax(trace.logits);
  return trace;
}

Network init_random(const std::vector<std::size_t>& arch, Activation activation,
                    std::uint64_t seed) {
  if (arch.size() < 3)
    throw ConfigError("arch needs at least input, one hidden layer and classes");
  for (std::size_t w : arch)
    if (w == 0) throw ConfigError("arch widths must be positive");

  std::mt19937_64 gen(seed);
  auto make_layer = [&gen](std::size_t n_out, std::size_t n_in, Activation act) {
    Layer lay;
    lay.weights = Matrix(n_out, n_in);
    lay.bias.assign(n_out, 0.0);
    lay.activation = act;
    std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(double(n_in)));
    for (double& w : lay.weights.values()) w = dist(gen);
    return lay;
  };

  Network net;
  net.input_dim = arch.front();
  for (std::size_t l = 1; l + 1 < arch.size(); ++l)
    net.hidden.push_back(make_layer(arch[l], arch[l - 1], activation));
  net.classifier = make_layer(arch.back(), arch[arch.size() - 2], Activation::Identity);
  net.validate();
  return net;
}

namespace {

json layer_to_json(const Layer& l) {
  return json{{"rows", l.out_dim()},
              {"cols", l.in_dim()},
              {"activation", to_string(l.activation)},
              {"weights", l.weights.values()},
              {"bias", l.bias}};
}

Layer layer_from_json(const json& j, const std::string& where) {
  for (const char* field : {"rows", "cols", "activation", "weights", "bias"})
    if (!j.contains(field))
      throw ValidationError(where + ": missing field '" + field + "'");
  Layer l;
  const std::size_t rows = j.at("rows").get<std::size_t>();
  const std::size_t cols = j.at("cols").get<std::size_t>();
  l.activation = activation_from_string(j.at("activation").get<std::string>());
  auto w = j.at("weights").get<std::vector<double>>();
  l.bias = j.at("bias").get<std::vector<double>>();
  if (w.size() != rows * cols)
    throw ValidationError(where + ": weights array has " + std::to_string(w.size()) +
                          " entries, expected rows*cols = " + std::to_string(rows * cols));
  if (l.bias.size() != rows)
    throw ValidationError(where + ": bias length " + std::to_string(l.bias.size()) +
                          " != rows " + std::to_string(rows));
  l.weights = Matrix(rows, cols);
  l.weights.values() = std::move(w);
  return l;
}

}  // namespace

std::string model_to_json_string(const Network& net) {
  json j{{"input_dim", net.input_dim},
         {"layers", json::array()},
         {"classifier", layer_to_json(net.classifier)}};
  for (const auto& l : net.hidden) j["layers"].push_back(layer_to_json(l));
  return j.dump();
}

Network model_from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("model parse error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  try {
    Network net;
    if (!j.contains("input_dim") || !j.contains("layers") || !j.contains("classifier"))
      throw ValidationError("model: missing input_dim/layers/classifier");
    net.input_dim = j.at("input_dim").get<std::size_t>();
    std::size_t idx = 1;
    for (const auto& lj : j.at("layers"))
      net.hidden.push_back(layer_from_json(lj, "layer " + std::to_string(idx++)));
    net.classifier = layer_from_json(j.at("classifier"), "classifier");
    net.validate();
    return net;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("model: ") + e.what());
  }
}

void save_model(const Network& net, const std::string& path) {
  // Temp-and-rename so readers never see a partial model file.
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + tmp);
    out << model_to_json_string(net) << '\n';
    if (!out) throw DataError("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Network load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return model_from_json_string(buf.str());
}

NetGrads NetGrads::zeros_like(const Network& net) {
  NetGrads g;
  for (const auto& l : net.hidden) {
    g.hidden_w.emplace_back(l.out_dim(), l.in_dim());
    g.hidden_b.emplace_back(l.out_dim(), 0.0);
  }
  g.classifier_w = Matrix(net.classifier.out_dim(), net.classifier.in_dim());
  g.classifier_b.assign(net.classifier.out_dim(), 0.0);
  return g;
}

void backprop_accumulate(const Network& net, const ForwardTrace& trace,
                         const Matrix* d_logits, const Matrix* d_features,
                         NetGrads& grads) {
  const Matrix& feats = trace.features();
  const std::size_t n = trace.activations[0].rows();

  // Gradient flowing into the last hidden output.
  Matrix d_h(n, feats.cols());
  if (d_logits) {
    accumulate_outer(*d_logits, feats, grads.classifier_w);
    const auto& k = kernels::active();
    for (std::size_t s = 0; s < n; ++s)
      k.axpy(1.0, d_logits->row(s), grads.classifier_b.data(), grads.classifier_b.size());
    d_h = matmul_nn(*d_logits, net.classifier.weights);
  }
  if (d_features) {
    if (d_features->rows() != n || d_features->cols() != feats.cols())
      throw ShapeError("backprop_accumulate: d_features shape mismatch");
    const auto& k = kernels::active();
    for (std::size_t s = 0; s < n; ++s)
      k.axpy(1.0, d_features->row(s), d_h.row(s), d_h.cols());
  }

  for (std::size_t l = net.hidden.size(); l-- > 0;) {
    const Layer& lay = net.hidden[l];
    const Matrix& out = trace.activations[l + 1];
    const Matrix& in = trace.activations[l];
    Matrix delta = activation_derivative(out, lay.activation);
    for (std::size_t i = 0; i < delta.size(); ++i) delta.data()[i] *= d_h.data()[i];
    accumulate_outer(delta, in, grads.hidden_w[l]);
    const auto& k = kernels::active();
    for (std::size_t s = 0; s < n; ++s)
      k.axpy(1.0, delta.row(s), grads.hidden_b[l].data(), grads.hidden_b[l].size());
    if (l > 0) d_h = matmul_nn(delta, lay.weights);
  }
}

void apply_update(Network& net, const NetGrads& grads, double step) {
  const auto& k = kernels::active();
  for (std::size_t l = 0; l < net.hidden.size(); ++l) {
    k.axpy(-step, grads.hidden_w[l].data(), net.hidden[l].weights.data(),
           net.hidden[l].weights.size());
    k.axpy(-step, grads.hidden_b[l].data(), net.hidden[l].bias.data(),
           net.hidden[l].bias.size());
  }
  k.axpy(-step, grads.classifier_w.data(), net.classifier.weights.data(),
         net.classifier.weights.size());
  k.axpy(-step, grads.classifier_b.data(), net.classifier.bias.data(),
         net.classifier.bias.size());
}

}  // namespace n2a
