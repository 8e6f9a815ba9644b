#pragma once

#include "hybridloss/experiment.hpp"

#include <string>
#include <vector>

namespace hybridloss {

/// Per-dataset block of the config file: where the data lives and the
/// architecture/hyper-parameters to train with.
struct DatasetProfile {
  std::string name;
  std::string kind;  // "csv" or "idx"
  std::string file;
  std::string schema;
  std::vector<std::string> image_files;  // idx pairs, concatenated in order
  std::vector<std::string> label_files;

  Index inputs = 0;
  std::vector<Index> hidden;
  Index outputs = 0;
  Activation output_activation = Activation::Sigmoid;
  double learning_rate = 0.001;
  int batch_size = 32;

  std::vector<LayerSpec> architecture() const;
  Index parameter_count() const;
};

/// Parsed experiment configuration file: global protocol settings plus one
/// profile per dataset.
struct CliConfig {
  int epochs = 100;
  int runs = 30;
  int folds = 10;
  int warmup_epochs = 20;
  int patience = 3;
  std::uint64_t seed = 7041776;
  std::vector<std::string> variants;  // defaults to the nine canonical labels

  std::vector<DatasetProfile> datasets;  // file order preserved

  static CliConfig parse(const std::string& text);
  static CliConfig load(const std::string& path);

  const DatasetProfile& profile(const std::string& dataset) const;
  bool has_profile(const std::string& dataset) const;
};

/// Loads the dataset a profile points at. `root` is the dataset directory
/// (the HYBRIDLOSS_DATA env var or "data").
Dataset load_profile_dataset(const DatasetProfile& profile, const std::string& root);

/// Experiment settings for one dataset from the parsed config.
ExperimentConfig make_experiment_config(const CliConfig& config, const DatasetProfile& profile);

}  // namespace hybridloss
