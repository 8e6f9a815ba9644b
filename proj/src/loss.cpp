#include "hybridloss/loss.hpp"

#include <algorithm>
#include <cmath>

namespace hybridloss {

namespace detail {

void check_mix_weights(const MixWeights& w) {
  if (w.se < 0.0 || w.ce < 0.0 || std::abs(w.se + w.ce - 1.0) > kWeightSumTol) {
    throw std::invalid_argument("loss weights must be non-negative and sum to 1");
  }
}

void check_norms(const LossNorms& n) {
  if (!(n.max_se > 0.0) || !(n.max_ce > 0.0) || !std::isfinite(n.max_se) ||
      !std::isfinite(n.max_ce)) {
    throw std::invalid_argument("loss norms must be positive and finite");
  }
}

}  // namespace detail

LossVariant LossVariant::from_label(const std::string& label) {
  LossVariant v;
  v.label = label;
  if (label == "CE100SE0") {
    v.schedule = StaticSchedule{{0.0, 1.0}};
  } else if (label == "CE75SE25") {
    v.schedule = StaticSchedule{{0.25, 0.75}};
  } else if (label == "CE50SE50") {
    v.schedule = StaticSchedule{{0.5, 0.5}};
  } else if (label == "CE25SE75") {
    v.schedule = StaticSchedule{{0.75, 0.25}};
  } else if (label == "CE0SE100") {
    v.schedule = StaticSchedule{{1.0, 0.0}};
  } else if (label == "CEtoSE") {
    v.schedule = AdaptiveSchedule{AdaptiveDirection::CEtoSE};
  } else if (label == "SEtoCE") {
    v.schedule = AdaptiveSchedule{AdaptiveDirection::SEtoCE};
  } else if (label == "CEswSE") {
    v.schedule = ReactiveSchedule{ReactiveDirection::CEthenSE};
  } else if (label == "SEswCE") {
    v.schedule = ReactiveSchedule{ReactiveDirection::SEthenCE};
  } else {
    throw std::invalid_argument("unknown loss variant label: " + label);
  }
  return v;
}

const std::vector<std::string>& LossVariant::canonical_labels() {
  static const std::vector<std::string> labels = {
      "CE100SE0", "CE75SE25", "CE50SE50", "CE25SE75", "CE0SE100",
      "CEtoSE",   "SEtoCE",   "CEswSE",   "SEswCE"};
  return labels;
}

double eval_hybrid(const Matrix& targets, const Matrix& outputs, const MixWeights& weights,
                   const LossNorms& norms) {
  detail::check_mix_weights(weights);
  detail::check_norms(norms);
  // Both terms are always combined; a zero weight contributes an exact zero,
  // so the degenerate mixes reproduce the pure losses bitwise.
  return weights.se * (eval_se(targets, outputs) / norms.max_se) +
         weights.ce * (eval_ce(targets, outputs) / norms.max_ce);
}

LossNorms estimate_norms(const Network& net, const Matrix& features, const Matrix& labels) {
  if (features.rows() == 0) {
    throw std::invalid_argument("cannot estimate loss norms on an empty fold");
  }
  Matrix outputs = predict(net, features);
  LossNorms norms;
  norms.max_se = eval_se(labels, outputs);
  if (norms.max_se <= detail::kDegenerateNorm || !std::isfinite(norms.max_se)) {
    throw std::runtime_error("degenerate normalization: pre-training loss is not positive");
  }
  norms.max_ce = eval_ce(labels, outputs);
  if (norms.max_ce <= detail::kDegenerateNorm || !std::isfinite(norms.max_ce)) {
    throw std::runtime_error("degenerate normalization: pre-training loss is not positive");
  }
  return norms;
}

Matrix grad_output(const Matrix& targets, const ForwardTrace& trace, const MixWeights& weights,
                   const LossNorms& norms) {
  detail::check_mix_weights(weights);
  detail::check_norms(norms);
  const Matrix& o = trace.outputs();
  if (targets.rows() != o.rows() || targets.cols() != o.cols()) {
    throw std::invalid_argument("targets shape must match network outputs");
  }
  if (targets.rows() == 0) {
    throw std::invalid_argument("gradient over an empty batch is undefined");
  }

  Matrix residual = o - targets;  // also the CE error signal through sigmoid/softmax
  Matrix se_term;
  switch (trace.output_activation) {
    case Activation::Sigmoid: {
      if (o.cols() != 1) {
        throw std::invalid_argument("sigmoid loss gradients expect a single output unit");
      }
      se_term = (2.0 * residual.array() * o.array() * (1.0 - o.array())).matrix();
      break;
    }
    case Activation::Softmax: {
      // d(sum_k (t-o)^2)/dz_j = o_j * (r_j - r.o) with r = 2(o-t).
      Matrix r = 2.0 * residual;
      Vector rdoto = (r.array() * o.array()).rowwise().sum();
      se_term = (o.array() * (r.colwise() - rdoto).array()).matrix();
      break;
    }
    default:
      throw std::invalid_argument("loss gradients require a sigmoid or softmax output layer");
  }

  double batch = static_cast<double>(o.rows());
  double se_scale = weights.se / norms.max_se;
  double ce_scale = weights.ce / norms.max_ce;
  return ((se_scale * se_term.array() + ce_scale * residual.array()) / batch).matrix();
}

MixWeights adaptive_weights(AdaptiveDirection direction, int epoch) {
  if (epoch < 0) throw std::invalid_argument("epoch must be non-negative");
  double fading = std::max(0.0, 1.0 - 0.01 * static_cast<double>(epoch));
  if (direction == AdaptiveDirection::SEtoCE) {
    return {fading, 1.0 - fading};
  }
  return {1.0 - fading, fading};
}

MixWeights reactive_weights(const ScheduleState& state, ReactiveDirection direction) {
  bool se_active = (direction == ReactiveDirection::SEthenCE) != state.switched;
  return se_active ? MixWeights{1.0, 0.0} : MixWeights{0.0, 1.0};
}

MixWeights schedule_weights(const LossVariant& variant, const ScheduleState& state) {
  if (const auto* s = std::get_if<StaticSchedule>(&variant.schedule)) {
    return s->weights;
  }
  if (const auto* a = std::get_if<AdaptiveSchedule>(&variant.schedule)) {
    return adaptive_weights(a->direction, state.epoch);
  }
  return reactive_weights(state, std::get<ReactiveSchedule>(variant.schedule).direction);
}

}  // namespace hybridloss
