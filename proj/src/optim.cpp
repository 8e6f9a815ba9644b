#include "hybridloss/optim.hpp"

#include <cmath>

namespace hybridloss {

AdamState AdamState::init(const Network& net, const AdamConfig& config) {
  if (!(config.learning_rate > 0.0)) {
    throw std::invalid_argument("learning rate must be positive");
  }
  AdamState state;
  state.config = config;
  for (const Layer& l : net.layers()) {
    state.m_weights.push_back(Matrix::Zero(l.fan_out(), l.fan_in()));
    state.v_weights.push_back(Matrix::Zero(l.fan_out(), l.fan_in()));
    state.m_biases.push_back(Vector::Zero(l.fan_out()));
    state.v_biases.push_back(Vector::Zero(l.fan_out()));
  }
  return state;
}

namespace {

template <typename P, typename G>
void update(P& param, const G& grad, P& m, P& v, const AdamConfig& c, double corr1,
            double corr2) {
  if (!grad.allFinite()) {
    throw std::runtime_error("numeric divergence: non-finite gradient");
  }
  m = c.beta1 * m + (1.0 - c.beta1) * grad;
  v = (c.beta2 * v.array() + (1.0 - c.beta2) * grad.array().square()).matrix();
  param.array() -=
      c.learning_rate * (m.array() / corr1) / ((v.array() / corr2).sqrt() + c.eps);
}

}  // namespace

void adam_step(Network& net, const Gradients& grads, AdamState& state) {
  auto& layers = net.layers();
  if (grads.weight_grads.size() != layers.size() ||
      grads.bias_grads.size() != layers.size() ||
      state.m_weights.size() != layers.size()) {
    throw std::invalid_argument("gradient/state shapes do not match the network");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (grads.weight_grads[l].rows() != layers[l].fan_out() ||
        grads.weight_grads[l].cols() != layers[l].fan_in() ||
        grads.bias_grads[l].size() != layers[l].fan_out()) {
      throw std::invalid_argument("gradient/state shapes do not match the network");
    }
  }

  ++state.step_count;
  double corr1 = 1.0 - std::pow(state.config.beta1, static_cast<double>(state.step_count));
  double corr2 = 1.0 - std::pow(state.config.beta2, static_cast<double>(state.step_count));
  for (std::size_t l = 0; l < layers.size(); ++l) {
    update(layers[l].weights, grads.weight_grads[l], state.m_weights[l], state.v_weights[l],
           state.config, corr1, corr2);
    update(layers[l].biases, grads.bias_grads[l], state.m_biases[l], state.v_biases[l],
           state.config, corr1, corr2);
  }
}

}  // namespace hybridloss
