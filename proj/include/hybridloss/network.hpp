#pragma once

#include "hybridloss/types.hpp"

#include <string>
#include <vector>

namespace hybridloss {

enum class Activation { ReLU, Sigmoid, Softmax, Identity };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& name);

/// One dense layer: units and activation tag, used to describe architectures.
struct LayerSpec {
  Index units = 0;
  Activation activation = Activation::ReLU;
};

struct Layer {
  Matrix weights;  // fan_out x fan_in
  Vector biases;   // fan_out
  Activation activation = Activation::Identity;

  Index fan_in() const { return weights.cols(); }
  Index fan_out() const { return weights.rows(); }
};

/// Dense feed-forward network. Layer i consumes layer i-1's activations;
/// layer 0 consumes the input. Softmax is only allowed on the final layer.
class Network {
 public:
  Network(Index input_dim, std::vector<Layer> layers);

  Index input_dim() const { return input_dim_; }
  Index output_dim() const { return layers_.back().fan_out(); }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }
  Index parameter_count() const;

  /// Flat view of all parameters: layer-major, weights row-major, biases after
  /// the layer's weights. Length equals parameter_count().
  Vector parameters() const;
  void set_parameters(const Vector& flat);

 private:
  Index input_dim_ = 0;
  std::vector<Layer> layers_;
};

/// Builds a network with He-uniform weights on ReLU layers, Glorot-uniform on
/// all other layers and zero biases. Draws come from `rng` in a fixed order.
Network build_network(Index input_dim, const std::vector<LayerSpec>& spec, Rng& rng);
Network build_network(Index input_dim, const std::vector<LayerSpec>& spec, std::uint64_t seed);

/// Every intermediate needed by backward(): inputs, per-layer pre-activations
/// and activations for one batch (patterns as rows).
struct ForwardTrace {
  Matrix input;
  std::vector<Matrix> pre_activations;
  std::vector<Matrix> activations;
  Activation output_activation = Activation::Identity;

  const Matrix& outputs() const { return activations.back(); }
};

ForwardTrace forward(const Network& net, const Matrix& batch);

/// Forward pass that keeps only the outputs.
Matrix predict(const Network& net, const Matrix& batch);

struct Gradients {
  std::vector<Matrix> weight_grads;
  std::vector<Vector> bias_grads;
};

/// Chain rule from the output layer down. `output_error` is
/// dE/d(pre-activation of the output layer), one row per pattern, with any
/// batch-mean factor already applied; gradients are summed over rows.
Gradients backward(const Network& net, const ForwardTrace& trace, const Matrix& output_error);

}  // namespace hybridloss
