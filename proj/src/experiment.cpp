#include "hybridloss/experiment.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;

namespace hybridloss {

StagnationDetector::StagnationDetector(int warmup_epochs, int patience)
    : warmup_epochs_(warmup_epochs), patience_(patience) {
  if (warmup_epochs < 0 || patience < 1) {
    throw std::invalid_argument("warmup must be >= 0 and patience >= 1");
  }
}

bool StagnationDetector::observe(int epoch, double accuracy) {
  if (epoch < warmup_epochs_) return false;
  if (!primed_) {
    primed_ = true;
    best_ = accuracy;
    stale_ = 0;
    return false;
  }
  if (accuracy > best_) {
    best_ = accuracy;
    stale_ = 0;
  } else {
    ++stale_;
  }
  return stale_ >= patience_;
}

double classify_accuracy(const Matrix& outputs, const Matrix& labels) {
  if (outputs.rows() != labels.rows() || outputs.cols() != labels.cols()) {
    throw std::invalid_argument("outputs and labels must have the same shape");
  }
  if (outputs.rows() == 0) {
    throw std::invalid_argument("accuracy over an empty set is undefined");
  }
  Index correct = 0;
  if (outputs.cols() == 1) {
    for (Index r = 0; r < outputs.rows(); ++r) {
      int predicted = outputs(r, 0) >= 0.5 ? 1 : 0;
      int truth = labels(r, 0) > 0.5 ? 1 : 0;
      correct += predicted == truth;
    }
  } else {
    auto first_argmax = [](const auto& row) {
      Index best = 0;
      for (Index c = 1; c < row.size(); ++c) {
        if (row(c) > row(best)) best = c;
      }
      return best;
    };
    for (Index r = 0; r < outputs.rows(); ++r) {
      correct += first_argmax(outputs.row(r)) == first_argmax(labels.row(r));
    }
  }
  return static_cast<double>(correct) / static_cast<double>(outputs.rows());
}

double classify_accuracy(const Network& net, const Matrix& features, const Matrix& labels) {
  return classify_accuracy(predict(net, features), labels);
}

Vector snapshot_weights(const Network& net) { return net.parameters(); }

std::uint64_t run_seed(std::uint64_t master_seed, int run) {
  return derive_seed(master_seed, 0x72756E00ULL + static_cast<std::uint64_t>(run));
}

std::uint64_t fold_seed(std::uint64_t master_seed) {
  return derive_seed(master_seed, 0x666F6C64ULL);
}

RunRecord train_one(const ExperimentConfig& config, const LossVariant& variant,
                    const Dataset& dataset, const FoldPlan& plan, int fold, std::uint64_t seed,
                    const EpochCallback& on_epoch) {
  if (config.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (config.epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (variant.is_reactive() && config.epochs < config.warmup_epochs + config.patience) {
    throw std::invalid_argument("reactive variants need epochs >= warmup + patience");
  }
  if (fold < 0 || fold >= plan.fold_count) throw std::invalid_argument("fold out of range");
  if (static_cast<Index>(plan.assignments.size()) != dataset.size()) {
    throw std::invalid_argument("fold plan does not cover the dataset");
  }
  if (dataset.feature_count() != config.input_dim) {
    throw std::invalid_argument("dataset feature count does not match the architecture");
  }

  RunRecord record;
  record.dataset = config.dataset_name.empty() ? dataset.name : config.dataset_name;
  record.variant = variant.label;
  record.fold_index = fold;
  record.seed = seed;
  record.epochs = config.epochs;

  const std::vector<Index> train_idx = plan.train_indices(fold);
  const std::vector<Index> test_idx = plan.test_indices(fold);
  const Matrix train_raw = take_rows(dataset.features, train_idx);
  const Standardizer stats = Standardizer::fit(train_raw);
  const Matrix train_x = stats.apply(train_raw);
  const Matrix train_y = take_rows(dataset.labels, train_idx);
  const Matrix test_x = stats.apply(take_rows(dataset.features, test_idx));
  const Matrix test_y = take_rows(dataset.labels, test_idx);

  Rng rng(seed);
  Network net = build_network(config.input_dim, config.architecture, rng);
  record.norms = estimate_norms(net, train_x, train_y);
  AdamState adam = AdamState::init(net, AdamConfig{config.learning_rate});

  ScheduleState sched;
  StagnationDetector detector(config.warmup_epochs, config.patience);

  const Index n_train = train_x.rows();
  std::vector<Index> order(static_cast<std::size_t>(n_train));
  std::iota(order.begin(), order.end(), Index{0});

  record.train_loss.reserve(static_cast<std::size_t>(config.epochs));
  record.train_accuracy.reserve(static_cast<std::size_t>(config.epochs));
  record.test_accuracy.reserve(static_cast<std::size_t>(config.epochs));

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    sched.epoch = epoch;
    const MixWeights weights = schedule_weights(variant, sched);
    sched.current = weights;

    rng.shuffle(order);
    try {
      for (Index start = 0; start < n_train; start += config.batch_size) {
        const Index len = std::min<Index>(config.batch_size, n_train - start);
        std::vector<Index> batch(order.begin() + start, order.begin() + start + len);
        Matrix xb = take_rows(train_x, batch);
        Matrix yb = take_rows(train_y, batch);
        ForwardTrace trace = forward(net, xb);
        Matrix err = grad_output(yb, trace, weights, record.norms);
        Gradients grads = backward(net, trace, err);
        adam_step(net, grads, adam);
      }
    } catch (const std::runtime_error& e) {
      record.failed = true;
      record.failed_epoch = epoch;
      record.failure = e.what();
      break;
    }

    Matrix train_out = predict(net, train_x);
    double loss = eval_hybrid(train_y, train_out, weights, record.norms);
    if (!std::isfinite(loss)) {
      record.failed = true;
      record.failed_epoch = epoch;
      record.failure = "numeric divergence: non-finite loss";
      break;
    }
    double train_acc = classify_accuracy(train_out, train_y);
    double test_acc = classify_accuracy(net, test_x, test_y);
    record.train_loss.push_back(loss);
    record.train_accuracy.push_back(train_acc);
    record.test_accuracy.push_back(test_acc);
    if (on_epoch) on_epoch(epoch, loss, train_acc, test_acc);

    if (variant.is_reactive() && !sched.switched && detector.observe(epoch, train_acc)) {
      sched.switched = true;
      sched.switch_epoch = epoch;
      record.switch_epoch = epoch;
      record.switch_snapshot = snapshot_weights(net);
    }
  }

  sched.epoch = config.epochs;
  sched.current = schedule_weights(variant, sched);
  record.final_weights = sched.current;
  record.final_snapshot = snapshot_weights(net);
  record.final_test_accuracy = record.test_accuracy.empty()
                                   ? classify_accuracy(net, test_x, test_y)
                                   : record.test_accuracy.back();
  return record;
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& config, const Dataset& dataset,
                                      int jobs) {
  if (config.runs < 1) throw std::invalid_argument("runs must be >= 1");
  if (config.variants.empty()) throw std::invalid_argument("no variants configured");

  const FoldPlan plan = make_folds(dataset.size(), config.folds, fold_seed(config.master_seed));

  struct Task {
    LossVariant variant;
    int run = 0;
  };
  std::vector<Task> tasks;
  for (const std::string& label : config.variants) {
    LossVariant variant = LossVariant::from_label(label);
    for (int r = 0; r < config.runs; ++r) tasks.push_back({variant, r});
  }

  std::vector<RunRecord> records(tasks.size());
  auto work = [&](std::size_t i) {
    const Task& task = tasks[i];
    const int fold = task.run % config.folds;
    const std::uint64_t seed = run_seed(config.master_seed, task.run);
    try {
      records[i] = train_one(config, task.variant, dataset, plan, fold, seed);
    } catch (const std::exception& e) {
      RunRecord failed;
      failed.dataset = config.dataset_name;
      failed.variant = task.variant.label;
      failed.fold_index = fold;
      failed.seed = seed;
      failed.failed = true;
      failed.failure = e.what();
      records[i] = failed;
    }
    records[i].run_id = task.run;
  };

  if (jobs <= 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next.fetch_add(1); i < tasks.size(); i = next.fetch_add(1)) {
        work(i);
      }
    };
    std::vector<std::thread> pool;
    const int thread_count = std::min<int>(jobs, static_cast<int>(tasks.size()));
    pool.reserve(static_cast<std::size_t>(thread_count));
    for (int t = 0; t < thread_count; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  return records;
}

namespace {

json to_json(const RunRecord& r) {
  json j;
  j["dataset"] = r.dataset;
  j["variant"] = r.variant;
  j["run"] = r.run_id;
  j["fold"] = r.fold_index;
  j["seed"] = r.seed;
  j["epochs"] = r.epochs;
  j["train_loss"] = r.train_loss;
  j["train_accuracy"] = r.train_accuracy;
  j["test_accuracy"] = r.test_accuracy;
  j["max_se"] = r.norms.max_se;
  j["max_ce"] = r.norms.max_ce;
  if (r.switch_epoch) {
    j["switch_epoch"] = *r.switch_epoch;
  } else {
    j["switch_epoch"] = nullptr;
  }
  j["final_test_accuracy"] = r.final_test_accuracy;
  j["final_weights"] = {r.final_weights.se, r.final_weights.ce};
  j["failed"] = r.failed;
  j["failed_epoch"] = r.failed_epoch;
  j["failure"] = r.failure;
  return j;
}

void from_json(const json& j, RunRecord& r) {
  r.dataset = j.at("dataset").get<std::string>();
  r.variant = j.at("variant").get<std::string>();
  r.run_id = j.at("run").get<int>();
  r.fold_index = j.at("fold").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.epochs = j.at("epochs").get<int>();
  r.train_loss = j.at("train_loss").get<std::vector<double>>();
  r.train_accuracy = j.at("train_accuracy").get<std::vector<double>>();
  r.test_accuracy = j.at("test_accuracy").get<std::vector<double>>();
  r.norms.max_se = j.at("max_se").get<double>();
  r.norms.max_ce = j.at("max_ce").get<double>();
  if (!j.at("switch_epoch").is_null()) r.switch_epoch = j.at("switch_epoch").get<int>();
  r.final_test_accuracy = j.at("final_test_accuracy").get<double>();
  r.final_weights.se = j.at("final_weights")[0].get<double>();
  r.final_weights.ce = j.at("final_weights")[1].get<double>();
  r.failed = j.at("failed").get<bool>();
  r.failed_epoch = j.at("failed_epoch").get<int>();
  r.failure = j.at("failure").get<std::string>();
}

void write_snapshot_csv(const fs::path& path, const Vector& v) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  char buf[32];
  for (Index i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", v[i]);
    out << buf << (i + 1 < v.size() ? "," : "");
  }
  out << "\n";
}

Vector read_snapshot_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<double> values;
  std::istringstream row(line);
  std::string cell;
  while (std::getline(row, cell, ',')) values.push_back(std::stod(cell));
  Vector v(static_cast<Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) v[static_cast<Index>(i)] = values[i];
  return v;
}

}  // namespace

std::string write_run_record(const std::string& out_dir, const RunRecord& record) {
  fs::path dir = fs::path(out_dir) / record.dataset / record.variant;
  fs::create_directories(dir);
  const std::string stem = "run_" + std::to_string(record.run_id);
  fs::path json_path = dir / (stem + ".json");

  json j = to_json(record);
  if (record.switch_snapshot.size() > 0) {
    j["switch_snapshot_file"] = stem + "_switch_weights.csv";
    write_snapshot_csv(dir / (stem + "_switch_weights.csv"), record.switch_snapshot);
  }
  if (record.final_snapshot.size() > 0) {
    j["final_snapshot_file"] = stem + "_final_weights.csv";
    write_snapshot_csv(dir / (stem + "_final_weights.csv"), record.final_snapshot);
  }

  std::ofstream out(json_path);
  if (!out) throw std::runtime_error("cannot write " + json_path.string());
  out << j.dump() << "\n";
  return json_path.string();
}

RunRecord read_run_record(const std::string& json_path) {
  std::ifstream in(json_path);
  if (!in) throw std::runtime_error("cannot read " + json_path);
  json j;
  in >> j;
  RunRecord r;
  from_json(j, r);
  fs::path dir = fs::path(json_path).parent_path();
  if (j.contains("switch_snapshot_file")) {
    r.switch_snapshot = read_snapshot_csv(dir / j["switch_snapshot_file"].get<std::string>());
  }
  if (j.contains("final_snapshot_file")) {
    r.final_snapshot = read_snapshot_csv(dir / j["final_snapshot_file"].get<std::string>());
  }
  return r;
}

std::vector<RunRecord> read_records(const std::string& out_dir, const std::string& dataset) {
  fs::path root = fs::path(out_dir) / dataset;
  if (!fs::exists(root)) {
    throw std::runtime_error("no records under " + root.string());
  }
  std::vector<RunRecord> records;
  std::vector<std::string> variant_dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) variant_dirs.push_back(entry.path().filename().string());
  }
  // canonical variant order first, any extras alphabetically after
  std::vector<std::string> ordered;
  for (const std::string& label : LossVariant::canonical_labels()) {
    if (std::find(variant_dirs.begin(), variant_dirs.end(), label) != variant_dirs.end()) {
      ordered.push_back(label);
    }
  }
  std::sort(variant_dirs.begin(), variant_dirs.end());
  for (const std::string& v : variant_dirs) {
    if (std::find(ordered.begin(), ordered.end(), v) == ordered.end()) ordered.push_back(v);
  }

  for (const std::string& variant : ordered) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(root / variant)) {
      if (entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
      auto num = [](const fs::path& p) {
        std::string s = p.stem().string();
        return std::stoi(s.substr(s.rfind('_') + 1));
      };
      return num(a) < num(b);
    });
    for (const fs::path& f : files) records.push_back(read_run_record(f.string()));
  }
  return records;
}

}  // namespace hybridloss
