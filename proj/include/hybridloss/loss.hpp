#pragma once

#include "hybridloss/network.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace hybridloss {

/// Mixing proportions of the two normalized loss terms; se + ce == 1.
struct MixWeights {
  double se = 0.0;
  double ce = 0.0;
};

enum class AdaptiveDirection { CEtoSE, SEtoCE };
enum class ReactiveDirection { CEthenSE, SEthenCE };

struct StaticSchedule {
  MixWeights weights;
};
struct AdaptiveSchedule {
  AdaptiveDirection direction = AdaptiveDirection::SEtoCE;
};
struct ReactiveSchedule {
  ReactiveDirection direction = ReactiveDirection::SEthenCE;
};

/// One of the nine loss variants. The label strings are part of the external
/// interface (configs, result files, reports).
struct LossVariant {
  std::variant<StaticSchedule, AdaptiveSchedule, ReactiveSchedule> schedule;
  std::string label;

  bool is_static() const { return std::holds_alternative<StaticSchedule>(schedule); }
  bool is_adaptive() const { return std::holds_alternative<AdaptiveSchedule>(schedule); }
  bool is_reactive() const { return std::holds_alternative<ReactiveSchedule>(schedule); }

  static LossVariant from_label(const std::string& label);
  /// The nine labels in canonical (table/report) order.
  static const std::vector<std::string>& canonical_labels();
};

/// Pre-training loss magnitudes used to balance the hybrid sum.
struct LossNorms {
  double max_se = 1.0;
  double max_ce = 1.0;
};

/// Per-run schedule bookkeeping. Owned by a single training run.
struct ScheduleState {
  int epoch = 0;
  bool switched = false;
  std::optional<int> switch_epoch;
  MixWeights current;
};

namespace detail {

constexpr double kOutputClamp = 1e-12;
constexpr double kWeightSumTol = 1e-9;
constexpr double kDegenerateNorm = 1e-12;

template <typename DT, typename DO>
void check_loss_shapes(const Eigen::MatrixBase<DT>& targets,
                       const Eigen::MatrixBase<DO>& outputs) {
  if (targets.rows() != outputs.rows() || targets.cols() != outputs.cols()) {
    throw std::invalid_argument("targets and outputs must have the same shape");
  }
  if (targets.rows() == 0) {
    throw std::invalid_argument("loss over an empty batch is undefined");
  }
}

void check_mix_weights(const MixWeights& w);
void check_norms(const LossNorms& n);

}  // namespace detail

/// Squared error, averaged over patterns (rows): mean_p sum_k (t - o)^2.
template <typename DT, typename DO>
double eval_se(const Eigen::MatrixBase<DT>& targets, const Eigen::MatrixBase<DO>& outputs) {
  detail::check_loss_shapes(targets, outputs);
  return (targets - outputs).squaredNorm() / static_cast<double>(targets.rows());
}

/// Cross entropy, averaged over patterns. One output column is treated as a
/// binary probability, several columns as a (softmax) distribution over
/// classes. Outputs are clamped away from {0,1} before the logs.
template <typename DT, typename DO>
double eval_ce(const Eigen::MatrixBase<DT>& targets, const Eigen::MatrixBase<DO>& outputs) {
  detail::check_loss_shapes(targets, outputs);
  if (!((targets.array() == 0.0) || (targets.array() == 1.0)).all()) {
    throw std::invalid_argument("cross entropy targets must be 0 or 1");
  }
  auto o = outputs.array().min(1.0 - detail::kOutputClamp).max(detail::kOutputClamp);
  double total;
  if (targets.cols() == 1) {
    total = -(targets.array() * o.log() + (1.0 - targets.array()) * (1.0 - o).log()).sum();
  } else {
    total = -(targets.array() * o.log()).sum();
  }
  return total / static_cast<double>(targets.rows());
}

/// Normalized weighted sum of the two losses:
/// w.se * E_se/max_se + w.ce * E_ce/max_ce.
double eval_hybrid(const Matrix& targets, const Matrix& outputs, const MixWeights& weights,
                   const LossNorms& norms);

/// Evaluates both losses on the untrained network over the full training fold.
/// A degenerate (near-zero) estimate is an error, never silently replaced.
LossNorms estimate_norms(const Network& net, const Matrix& features, const Matrix& labels);

/// dE_hybrid/d(pre-activation of the output layer), batch-mean included.
/// Supports sigmoid (single output) and softmax final layers.
Matrix grad_output(const Matrix& targets, const ForwardTrace& trace, const MixWeights& weights,
                   const LossNorms& norms);

/// Weights for the adaptive schedules: the starting loss gives up one percent
/// per epoch until the transfer is complete.
MixWeights adaptive_weights(AdaptiveDirection direction, int epoch);

/// Weights for the reactive schedules: all of the starting loss before the
/// switch, all of the other one after.
MixWeights reactive_weights(const ScheduleState& state, ReactiveDirection direction);

/// Dispatches to the variant's schedule; `state.epoch` selects the epoch.
MixWeights schedule_weights(const LossVariant& variant, const ScheduleState& state);

}  // namespace hybridloss
