#include "hybridloss/network.hpp"

#include <cmath>
#include <sstream>
#include <utility>

namespace hybridloss {

namespace {

void apply_activation(Activation act, Matrix& z) {
  switch (act) {
    case Activation::ReLU:
      z = z.cwiseMax(0.0);
      break;
    case Activation::Sigmoid:
      z = (1.0 / (1.0 + (-z.array()).exp())).matrix();
      break;
    case Activation::Softmax: {
      // Max-subtraction keeps exp() in range; identical result analytically.
      Vector row_max = z.rowwise().maxCoeff();
      Matrix e = (z.colwise() - row_max).array().exp().matrix();
      Vector row_sum = e.rowwise().sum();
      z = e.array().colwise() / row_sum.array();
      break;
    }
    case Activation::Identity:
      break;
  }
}

// Derivative of the activation w.r.t. its pre-activation, elementwise.
// Softmax never appears here: it is final-layer only and the output error
// already differentiates through it.
Matrix activation_derivative(Activation act, const Matrix& pre, const Matrix& post) {
  switch (act) {
    case Activation::ReLU:
      return (pre.array() > 0.0).cast<double>().matrix();
    case Activation::Sigmoid:
      return (post.array() * (1.0 - post.array())).matrix();
    case Activation::Identity:
      return Matrix::Ones(pre.rows(), pre.cols());
    case Activation::Softmax:
      break;
  }
  throw std::logic_error("softmax has no elementwise derivative");
}

}  // namespace

const char* to_string(Activation a) {
  switch (a) {
    case Activation::ReLU: return "relu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Softmax: return "softmax";
    case Activation::Identity: return "identity";
  }
  return "?";
}

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::ReLU;
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "softmax") return Activation::Softmax;
  if (name == "identity") return Activation::Identity;
  throw std::invalid_argument("unknown activation: " + name);
}

Network::Network(Index input_dim, std::vector<Layer> layers)
    : input_dim_(input_dim), layers_(std::move(layers)) {
  if (input_dim_ < 1) throw std::invalid_argument("input_dim must be >= 1");
  if (layers_.empty()) throw std::invalid_argument("network needs at least one layer");
  Index fan_in = input_dim_;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = layers_[i];
    if (l.fan_out() < 1) {
      throw std::invalid_argument("layer size must be >= 1");
    }
    if (l.fan_in() != fan_in) {
      std::ostringstream msg;
      msg << "layer " << i << " expects fan_in " << fan_in << ", got " << l.fan_in();
      throw std::invalid_argument(msg.str());
    }
    if (l.biases.size() != l.fan_out()) {
      throw std::invalid_argument("bias length must equal weight row count");
    }
    if (l.activation == Activation::Softmax && i + 1 != layers_.size()) {
      throw std::invalid_argument("softmax is only permitted on the final layer");
    }
    fan_in = l.fan_out();
  }
}

Index Network::parameter_count() const {
  Index count = 0;
  for (const Layer& l : layers_) {
    count += l.fan_in() * l.fan_out() + l.fan_out();
  }
  return count;
}

Vector Network::parameters() const {
  Vector flat(parameter_count());
  Index pos = 0;
  for (const Layer& l : layers_) {
    for (Index r = 0; r < l.fan_out(); ++r) {
      for (Index c = 0; c < l.fan_in(); ++c) flat[pos++] = l.weights(r, c);
    }
    for (Index r = 0; r < l.fan_out(); ++r) flat[pos++] = l.biases[r];
  }
  return flat;
}

void Network::set_parameters(const Vector& flat) {
  if (flat.size() != parameter_count()) {
    throw std::invalid_argument("parameter vector length mismatch");
  }
  Index pos = 0;
  for (Layer& l : layers_) {
    for (Index r = 0; r < l.fan_out(); ++r) {
      for (Index c = 0; c < l.fan_in(); ++c) l.weights(r, c) = flat[pos++];
    }
    for (Index r = 0; r < l.fan_out(); ++r) l.biases[r] = flat[pos++];
  }
}

Network build_network(Index input_dim, const std::vector<LayerSpec>& spec, Rng& rng) {
  if (spec.empty()) throw std::invalid_argument("network needs at least one layer");
  std::vector<Layer> layers;
  layers.reserve(spec.size());
  Index fan_in = input_dim;
  for (const LayerSpec& ls : spec) {
    if (ls.units < 1) throw std::invalid_argument("layer size must be >= 1");
    Layer l;
    l.activation = ls.activation;
    l.weights.resize(ls.units, fan_in);
    double limit = ls.activation == Activation::ReLU
                       ? std::sqrt(6.0 / static_cast<double>(fan_in))
                       : std::sqrt(6.0 / static_cast<double>(fan_in + ls.units));
    for (Index r = 0; r < ls.units; ++r) {
      for (Index c = 0; c < fan_in; ++c) l.weights(r, c) = rng.uniform(-limit, limit);
    }
    l.biases = Vector::Zero(ls.units);
    layers.push_back(std::move(l));
    fan_in = ls.units;
  }
  return Network(input_dim, std::move(layers));
}

Network build_network(Index input_dim, const std::vector<LayerSpec>& spec, std::uint64_t seed) {
  Rng rng(seed);
  return build_network(input_dim, spec, rng);
}

ForwardTrace forward(const Network& net, const Matrix& batch) {
  if (batch.cols() != net.input_dim()) {
    throw std::invalid_argument("batch column count must equal input_dim");
  }
  ForwardTrace trace;
  trace.input = batch;
  trace.pre_activations.reserve(net.layers().size());
  trace.activations.reserve(net.layers().size());
  trace.output_activation = net.layers().back().activation;

  const Matrix* prev = &trace.input;
  for (const Layer& l : net.layers()) {
    Matrix z = (*prev * l.weights.transpose()).rowwise() + l.biases.transpose();
    trace.pre_activations.push_back(z);
    apply_activation(l.activation, z);
    trace.activations.push_back(std::move(z));
    prev = &trace.activations.back();
  }
  return trace;
}

Matrix predict(const Network& net, const Matrix& batch) {
  if (batch.cols() != net.input_dim()) {
    throw std::invalid_argument("batch column count must equal input_dim");
  }
  Matrix a = batch;
  for (const Layer& l : net.layers()) {
    Matrix z = (a * l.weights.transpose()).rowwise() + l.biases.transpose();
    apply_activation(l.activation, z);
    a = std::move(z);
  }
  return a;
}

Gradients backward(const Network& net, const ForwardTrace& trace, const Matrix& output_error) {
  const auto& layers = net.layers();
  if (trace.activations.size() != layers.size()) {
    throw std::invalid_argument("trace does not match network depth");
  }
  const Matrix& out = trace.outputs();
  if (output_error.rows() != out.rows() || output_error.cols() != out.cols()) {
    throw std::invalid_argument("output_error shape must match final layer outputs");
  }

  Gradients grads;
  grads.weight_grads.resize(layers.size());
  grads.bias_grads.resize(layers.size());

  Matrix delta = output_error;
  for (std::size_t l = layers.size(); l-- > 0;) {
    const Matrix& below = l == 0 ? trace.input : trace.activations[l - 1];
    grads.weight_grads[l] = delta.transpose() * below;
    grads.bias_grads[l] = delta.colwise().sum();
    if (l > 0) {
      Matrix deriv = activation_derivative(layers[l - 1].activation,
                                           trace.pre_activations[l - 1],
                                           trace.activations[l - 1]);
      delta = (delta * layers[l].weights).cwiseProduct(deriv);
    }
  }
  return grads;
}

}  // namespace hybridloss
