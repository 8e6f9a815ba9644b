#pragma once

#include "hybridloss/network.hpp"

#include <vector>

namespace hybridloss {

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Moment accumulators mirroring the network's parameter shapes.
struct AdamState {
  AdamConfig config;
  std::vector<Matrix> m_weights, v_weights;
  std::vector<Vector> m_biases, v_biases;
  long step_count = 0;

  static AdamState init(const Network& net, const AdamConfig& config);
};

/// One bias-corrected Adam update, in place. Throws "numeric divergence" when
/// a gradient component is not finite.
void adam_step(Network& net, const Gradients& grads, AdamState& state);

}  // namespace hybridloss
