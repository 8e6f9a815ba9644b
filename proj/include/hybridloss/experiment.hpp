#pragma once

#include "hybridloss/data.hpp"
#include "hybridloss/loss.hpp"
#include "hybridloss/network.hpp"
#include "hybridloss/optim.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace hybridloss {

struct ExperimentConfig {
  std::string dataset_name;
  std::vector<LayerSpec> architecture;  // hidden layers then output layer
  Index input_dim = 0;
  double learning_rate = 0.001;
  int batch_size = 32;
  int epochs = 100;
  int runs = 30;
  int folds = 10;
  std::vector<std::string> variants;
  std::uint64_t master_seed = 1;
  int warmup_epochs = 20;
  int patience = 3;
};

/// Watches an accuracy series for stagnation or deterioration. The first
/// check, at epoch index `warmup_epochs`, establishes the baseline; the
/// switch fires once `patience` consecutive epochs fail to improve on the
/// best value seen since.
class StagnationDetector {
 public:
  StagnationDetector(int warmup_epochs, int patience);

  /// Feed the accuracy for `epoch` (0-based). True means: switch now.
  bool observe(int epoch, double accuracy);

  double best_accuracy() const { return best_; }
  int epochs_without_improvement() const { return stale_; }

 private:
  int warmup_epochs_;
  int patience_;
  double best_ = 0.0;
  int stale_ = 0;
  bool primed_ = false;
};

/// Everything measured during one training run.
struct RunRecord {
  std::string dataset;
  std::string variant;
  int run_id = 0;
  int fold_index = 0;
  std::uint64_t seed = 0;
  int epochs = 0;

  std::vector<double> train_loss;
  std::vector<double> train_accuracy;
  std::vector<double> test_accuracy;
  LossNorms norms;
  std::optional<int> switch_epoch;
  Vector switch_snapshot;  // weights the moment the switch fired (reactive only)
  Vector final_snapshot;
  double final_test_accuracy = 0.0;
  MixWeights final_weights;

  bool failed = false;
  int failed_epoch = -1;
  std::string failure;
};

/// Fraction of correctly classified patterns. Single output column:
/// threshold at 0.5 (>= 0.5 means class 1). Several columns: argmax with
/// ties broken toward the lowest index.
double classify_accuracy(const Matrix& outputs, const Matrix& labels);
double classify_accuracy(const Network& net, const Matrix& features, const Matrix& labels);

/// Flat copy of all weights and biases; layer-major, row-major.
Vector snapshot_weights(const Network& net);

using EpochCallback =
    std::function<void(int epoch, double loss, double train_accuracy, double test_accuracy)>;

/// Trains one (variant, fold, seed) combination for config.epochs epochs.
/// Numeric divergence marks the record failed; other misuse throws.
RunRecord train_one(const ExperimentConfig& config, const LossVariant& variant,
                    const Dataset& dataset, const FoldPlan& plan, int fold, std::uint64_t seed,
                    const EpochCallback& on_epoch = {});

/// The full protocol: for every configured variant, `runs` runs rotating
/// through folds (fold = run mod folds), seeds shared across variants so the
/// comparisons are paired. Failed runs are recorded, not rethrown. Results
/// are ordered (variant-major) regardless of `jobs`.
std::vector<RunRecord> run_experiment(const ExperimentConfig& config, const Dataset& dataset,
                                      int jobs = 1);

/// Derives the per-run seed; identical across variants by construction.
std::uint64_t run_seed(std::uint64_t master_seed, int run);
/// Seed for the fold assignment of an experiment.
std::uint64_t fold_seed(std::uint64_t master_seed);

/// Writes `<out_dir>/<dataset>/<variant>/run_<r>.json` (one JSON line) plus
/// flat CSV weight snapshots next to it. Returns the JSON path.
std::string write_run_record(const std::string& out_dir, const RunRecord& record);
RunRecord read_run_record(const std::string& json_path);
/// All records under `<out_dir>/<dataset>` in (variant, run) order.
std::vector<RunRecord> read_records(const std::string& out_dir, const std::string& dataset);

}  // namespace hybridloss
