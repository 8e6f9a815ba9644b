#include "hybridloss/config.hpp"
#include "hybridloss/report.hpp"
#include "hybridloss/stats.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace hybridloss;

namespace {

constexpr int kExitError = 1;
constexpr int kExitBadVariant = 2;
constexpr int kExitMissingFile = 3;

std::string data_root() {
  const char* env = std::getenv("HYBRIDLOSS_DATA");
  return env && *env ? env : "data";
}

bool is_missing_file_error(const std::string& message) {
  return message.rfind("missing dataset file", 0) == 0 ||
         message.rfind("missing schema file", 0) == 0 ||
         message.rfind("cannot open", 0) == 0;
}

int check_variants(const std::vector<std::string>& labels) {
  const auto& known = LossVariant::canonical_labels();
  for (const std::string& label : labels) {
    if (std::find(known.begin(), known.end(), label) == known.end()) {
      std::cerr << "unknown variant '" << label << "'; valid labels:";
      for (const std::string& k : known) std::cerr << ' ' << k;
      std::cerr << '\n';
      return kExitBadVariant;
    }
  }
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& dataset,
              const std::string& variant_label, int run, int epochs_override,
              std::uint64_t seed_override, bool has_seed, const std::string& out_dir) {
  if (int rc = check_variants({variant_label}); rc != 0) return rc;
  CliConfig config = CliConfig::load(config_path);
  if (epochs_override >= 0) config.epochs = epochs_override;
  if (has_seed) config.seed = seed_override;

  const DatasetProfile& profile = config.profile(dataset);
  Dataset ds = load_profile_dataset(profile, data_root());
  ExperimentConfig ec = make_experiment_config(config, profile);

  const FoldPlan plan = make_folds(ds.size(), ec.folds, fold_seed(ec.master_seed));
  const int fold = run % ec.folds;
  const LossVariant variant = LossVariant::from_label(variant_label);
  const std::uint64_t seed = run_seed(ec.master_seed, run);

  std::printf("training %s / %s, run %d (fold %d, seed %llu)\n", dataset.c_str(),
              variant_label.c_str(), run, fold, static_cast<unsigned long long>(seed));
  RunRecord record = train_one(
      ec, variant, ds, plan, fold, seed,
      [](int epoch, double loss, double train_acc, double test_acc) {
        std::printf("epoch %3d  loss %.6f  train_acc %.4f  test_acc %.4f\n", epoch, loss,
                    train_acc, test_acc);
        std::fflush(stdout);
      });
  record.run_id = run;
  const std::string path = write_run_record(out_dir, record);
  if (record.failed) {
    std::cerr << "run failed at epoch " << record.failed_epoch << ": " << record.failure << '\n';
    return kExitError;
  }
  std::printf("final test accuracy %.4f -> %s\n", record.final_test_accuracy, path.c_str());
  return 0;
}

int cmd_experiment(const std::string& config_path, const std::vector<std::string>& datasets,
                   int runs_override, int epochs_override, const std::string& variants_csv,
                   std::uint64_t seed_override, bool has_seed, int jobs,
                   const std::string& out_dir) {
  CliConfig config = CliConfig::load(config_path);
  if (runs_override >= 1) config.runs = runs_override;
  if (epochs_override >= 0) config.epochs = epochs_override;
  if (has_seed) config.seed = seed_override;
  if (!variants_csv.empty()) {
    std::vector<std::string> labels;
    std::string label;
    std::istringstream in(variants_csv);
    while (std::getline(in, label, ',')) labels.push_back(label);
    config.variants = labels;
  }
  if (int rc = check_variants(config.variants); rc != 0) return rc;

  std::vector<VariantSummary> all_summaries;
  std::vector<PairwiseTest> all_tests;
  int failures = 0;
  for (const std::string& name : datasets) {
    const DatasetProfile& profile = config.profile(name);
    Dataset ds = load_profile_dataset(profile, data_root());
    ExperimentConfig ec = make_experiment_config(config, profile);
    std::printf("%s: %d variants x %d runs, %d epochs, jobs=%d\n", name.c_str(),
                static_cast<int>(ec.variants.size()), ec.runs, ec.epochs, jobs);
    std::fflush(stdout);

    std::vector<RunRecord> records = run_experiment(ec, ds, jobs);
    for (const RunRecord& r : records) {
      write_run_record(out_dir, r);
      if (r.failed) {
        ++failures;
        std::cerr << name << '/' << r.variant << " run " << r.run_id << " failed: " << r.failure
                  << '\n';
      }
    }
    std::vector<VariantSummary> summaries = summarize_records(records);
    std::vector<PairwiseTest> tests = pairwise_tests(summaries);
    mark_best_worst(summaries, tests);
    all_summaries.insert(all_summaries.end(), summaries.begin(), summaries.end());
    all_tests.insert(all_tests.end(), tests.begin(), tests.end());
  }

  fs::create_directories(out_dir);
  write_summary_csv((fs::path(out_dir) / "summary.csv").string(), all_summaries);
  write_pairwise_csv((fs::path(out_dir) / "pairwise.csv").string(), all_tests);
  std::printf("wrote %s/summary.csv and %s/pairwise.csv\n", out_dir.c_str(), out_dir.c_str());
  if (failures > 0) {
    std::cerr << failures << " run(s) failed\n";
    return kExitError;
  }
  return 0;
}

int cmd_report(const std::vector<std::string>& datasets_arg, const std::string& out_dir) {
  std::vector<std::string> datasets = datasets_arg;
  if (datasets.empty()) {
    if (!fs::exists(out_dir)) {
      std::cerr << "no records under " << out_dir << '\n';
      return kExitError;
    }
    for (const auto& entry : fs::directory_iterator(out_dir)) {
      if (entry.is_directory()) datasets.push_back(entry.path().filename().string());
    }
    std::sort(datasets.begin(), datasets.end());
  }
  if (datasets.empty()) {
    std::cerr << "no records under " << out_dir << '\n';
    return kExitError;
  }

  std::vector<VariantSummary> all_summaries;
  std::vector<PairwiseTest> all_tests;
  for (const std::string& name : datasets) {
    std::vector<RunRecord> records = read_records(out_dir, name);
    if (records.empty()) {
      std::cerr << "no records for dataset " << name << '\n';
      return kExitError;
    }
    std::vector<VariantSummary> summaries = summarize_records(records);
    std::vector<PairwiseTest> tests = pairwise_tests(summaries);
    mark_best_worst(summaries, tests);
    write_bar_chart_csv((fs::path(out_dir) / ("fig1_" + name + ".csv")).string(), summaries);
    all_summaries.insert(all_summaries.end(), summaries.begin(), summaries.end());
    all_tests.insert(all_tests.end(), tests.begin(), tests.end());

    // switch/final weight distributions for every reactive variant that
    // actually switched in some run
    for (const std::string& label : LossVariant::canonical_labels()) {
      if (!LossVariant::from_label(label).is_reactive()) continue;
      std::vector<double> switch_pool, final_pool;
      for (const RunRecord& r : records) {
        if (r.variant != label || r.failed || !r.switch_epoch || r.switch_snapshot.size() == 0) {
          continue;
        }
        for (Index i = 0; i < r.switch_snapshot.size(); ++i) {
          switch_pool.push_back(r.switch_snapshot[i]);
        }
        for (Index i = 0; i < r.final_snapshot.size(); ++i) {
          final_pool.push_back(r.final_snapshot[i]);
        }
      }
      if (switch_pool.empty()) continue;
      Vector sw = Eigen::Map<Vector>(switch_pool.data(), static_cast<Index>(switch_pool.size()));
      Vector fw = Eigen::Map<Vector>(final_pool.data(), static_cast<Index>(final_pool.size()));
      HistogramSeries h = weight_histogram(sw, fw);
      const std::string stem = "histogram_" + name + "_" + label;
      write_histogram_csv((fs::path(out_dir) / (stem + ".csv")).string(), h);
      write_histogram_svg((fs::path(out_dir) / (stem + ".svg")).string(), h,
                          name + " / " + label + " weights");
    }
  }
  write_summary_csv((fs::path(out_dir) / "summary.csv").string(), all_summaries);
  write_pairwise_csv((fs::path(out_dir) / "pairwise.csv").string(), all_tests);
  std::printf("report written under %s\n", out_dir.c_str());
  return 0;
}

int cmd_histogram(const std::string& dataset, const std::string& variant_label, int run,
                  const std::string& out_dir) {
  if (int rc = check_variants({variant_label}); rc != 0) return rc;
  std::vector<RunRecord> records = read_records(out_dir, dataset);

  std::vector<double> switch_pool, final_pool;
  for (const RunRecord& r : records) {
    if (r.variant != variant_label || r.failed) continue;
    if (run >= 0 && r.run_id != run) continue;
    if (!r.switch_epoch || r.switch_snapshot.size() == 0) continue;
    for (Index i = 0; i < r.switch_snapshot.size(); ++i) switch_pool.push_back(r.switch_snapshot[i]);
    for (Index i = 0; i < r.final_snapshot.size(); ++i) final_pool.push_back(r.final_snapshot[i]);
  }
  if (switch_pool.empty()) {
    std::cerr << "no switch snapshot for " << dataset << '/' << variant_label << '\n';
    return kExitError;
  }

  Vector sw = Eigen::Map<Vector>(switch_pool.data(), static_cast<Index>(switch_pool.size()));
  Vector fw = Eigen::Map<Vector>(final_pool.data(), static_cast<Index>(final_pool.size()));
  HistogramSeries h = weight_histogram(sw, fw);

  const std::string stem = "histogram_" + dataset + "_" + variant_label;
  write_histogram_csv((fs::path(out_dir) / (stem + ".csv")).string(), h);
  write_histogram_svg((fs::path(out_dir) / (stem + ".svg")).string(), h,
                      dataset + " / " + variant_label + " weights");
  std::printf("wrote %s/%s.csv and .svg\n", out_dir.c_str(), stem.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid SE/CE loss function training and experiment harness"};
  app.require_subcommand(1);

  std::string config_path = "configs/defaults.cfg";
  std::string out_dir = "results";
  std::string dataset, variant;
  std::vector<std::string> datasets;
  std::string variants_csv;
  int run = 0, hist_run = -1, runs = -1, epochs = -1, jobs = 1;
  std::uint64_t seed = 0;
  bool has_seed = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "config file (Table-style defaults)");
    cmd->add_option("--out", out_dir, "output directory for records and reports");
  };

  CLI::App* train = app.add_subcommand("train", "train a single run");
  add_common(train);
  train->add_option("--dataset", dataset, "dataset name")->required();
  train->add_option("--variant", variant, "loss variant label")->required();
  train->add_option("--run", run, "run index (also selects the fold)");
  train->add_option("--epochs", epochs, "override epoch count");
  train->add_option("--seed", seed, "override master seed")->each([&](const std::string&) {
    has_seed = true;
  });

  CLI::App* experiment = app.add_subcommand("experiment", "full runs x variants sweep");
  add_common(experiment);
  experiment->add_option("--dataset", datasets, "dataset name(s)")->required();
  experiment->add_option("--runs", runs, "override run count");
  experiment->add_option("--epochs", epochs, "override epoch count");
  experiment->add_option("--variants", variants_csv, "comma-separated variant labels");
  experiment->add_option("--jobs", jobs, "parallel runs");
  experiment->add_option("--seed", seed, "override master seed")->each([&](const std::string&) {
    has_seed = true;
  });

  CLI::App* report = app.add_subcommand("report", "summaries and plot data from records");
  add_common(report);
  report->add_option("--dataset", datasets, "dataset name(s); default: all recorded");

  CLI::App* histogram = app.add_subcommand("histogram", "switch/final weight histograms");
  add_common(histogram);
  histogram->add_option("--dataset", dataset, "dataset name")->required();
  histogram->add_option("--variant", variant, "reactive variant label")->required();
  histogram->add_option("--run", hist_run,
                        "restrict to one run (default: pool all switched runs)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      return cmd_train(config_path, dataset, variant, run, epochs, seed, has_seed, out_dir);
    }
    if (experiment->parsed()) {
      return cmd_experiment(config_path, datasets, runs, epochs, variants_csv, seed, has_seed,
                            jobs, out_dir);
    }
    if (report->parsed()) {
      return cmd_report(datasets, out_dir);
    }
    if (histogram->parsed()) {
      return cmd_histogram(dataset, variant, hist_run, out_dir);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return is_missing_file_error(e.what()) ? kExitMissingFile : kExitError;
  }
  return 0;
}
