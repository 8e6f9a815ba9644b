#include "hybridloss/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace hybridloss {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> parts;
  std::istringstream in(s);
  std::string part;
  while (std::getline(in, part, ',')) parts.push_back(trim(part));
  return parts;
}

}  // namespace

std::vector<LayerSpec> DatasetProfile::architecture() const {
  std::vector<LayerSpec> spec;
  for (Index units : hidden) spec.push_back({units, Activation::ReLU});
  spec.push_back({outputs, output_activation});
  return spec;
}

Index DatasetProfile::parameter_count() const {
  Index count = 0;
  Index fan_in = inputs;
  for (Index units : hidden) {
    count += fan_in * units + units;
    fan_in = units;
  }
  count += fan_in * outputs + outputs;
  return count;
}

CliConfig CliConfig::parse(const std::string& text) {
  CliConfig config;
  config.variants = LossVariant::canonical_labels();

  DatasetProfile* current = nullptr;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[' && line.back() == ']') {
      DatasetProfile profile;
      profile.name = trim(line.substr(1, line.size() - 2));
      if (profile.name.empty()) {
        throw std::invalid_argument("config line " + std::to_string(line_no) +
                                    ": empty section name");
      }
      config.datasets.push_back(profile);
      current = &config.datasets.back();
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  " is not key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto bad_value = [&]() {
      return std::invalid_argument("config line " + std::to_string(line_no) +
                                   ": bad value for '" + key + "'");
    };
    auto to_long = [&](const std::string& s) {
      try {
        return std::stol(s);
      } catch (const std::exception&) {
        throw bad_value();
      }
    };
    auto to_int = [&](const std::string& s) { return static_cast<int>(to_long(s)); };
    auto to_u64 = [&](const std::string& s) {
      try {
        return std::stoull(s);
      } catch (const std::exception&) {
        throw bad_value();
      }
    };
    auto to_double = [&](const std::string& s) {
      try {
        return std::stod(s);
      } catch (const std::exception&) {
        throw bad_value();
      }
    };

    if (current == nullptr) {
      if (key == "epochs") config.epochs = to_int(value);
      else if (key == "runs") config.runs = to_int(value);
      else if (key == "folds") config.folds = to_int(value);
      else if (key == "warmup_epochs") config.warmup_epochs = to_int(value);
      else if (key == "patience") config.patience = to_int(value);
      else if (key == "seed") config.seed = to_u64(value);
      else if (key == "variants") config.variants = split_list(value);
      else {
        throw std::invalid_argument("config line " + std::to_string(line_no) +
                                    ": unknown global key '" + key + "'");
      }
    } else {
      if (key == "kind") current->kind = value;
      else if (key == "file") current->file = value;
      else if (key == "schema") current->schema = value;
      else if (key == "images") current->image_files = split_list(value);
      else if (key == "labels") current->label_files = split_list(value);
      else if (key == "inputs") current->inputs = to_long(value);
      else if (key == "hidden") {
        for (const std::string& h : split_list(value)) current->hidden.push_back(to_long(h));
      } else if (key == "outputs") current->outputs = to_long(value);
      else if (key == "output_activation") {
        try {
          current->output_activation = activation_from_string(value);
        } catch (const std::exception&) {
          throw bad_value();
        }
      } else if (key == "learning_rate") current->learning_rate = to_double(value);
      else if (key == "batch_size") current->batch_size = to_int(value);
      else {
        throw std::invalid_argument("config line " + std::to_string(line_no) +
                                    ": unknown dataset key '" + key + "'");
      }
    }
  }
  return config;
}

CliConfig CliConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

bool CliConfig::has_profile(const std::string& dataset) const {
  for (const DatasetProfile& p : datasets) {
    if (p.name == dataset) return true;
  }
  return false;
}

const DatasetProfile& CliConfig::profile(const std::string& dataset) const {
  for (const DatasetProfile& p : datasets) {
    if (p.name == dataset) return p;
  }
  throw std::invalid_argument("no dataset '" + dataset + "' in config");
}

Dataset load_profile_dataset(const DatasetProfile& profile, const std::string& root) {
  Dataset ds;
  if (profile.kind == "csv") {
    const fs::path file = fs::path(root) / profile.file;
    const fs::path schema = fs::path(root) / profile.schema;
    if (!fs::exists(file)) throw std::runtime_error("missing dataset file: " + file.string());
    if (!fs::exists(schema)) throw std::runtime_error("missing schema file: " + schema.string());
    ds = load_csv(file.string(), CsvSchema::parse_file(schema.string()));
  } else if (profile.kind == "idx") {
    if (profile.image_files.empty() || profile.image_files.size() != profile.label_files.size()) {
      throw std::runtime_error("idx profile needs matching images/labels lists");
    }
    bool first = true;
    for (std::size_t i = 0; i < profile.image_files.size(); ++i) {
      const fs::path img = fs::path(root) / profile.image_files[i];
      const fs::path lab = fs::path(root) / profile.label_files[i];
      if (!fs::exists(img)) throw std::runtime_error("missing dataset file: " + img.string());
      if (!fs::exists(lab)) throw std::runtime_error("missing dataset file: " + lab.string());
      Dataset part = load_idx(img.string(), lab.string());
      ds = first ? std::move(part) : concat(ds, part);
      first = false;
    }
  } else {
    throw std::runtime_error("unknown dataset kind '" + profile.kind + "'");
  }
  ds.name = profile.name;
  if (ds.feature_count() != profile.inputs) {
    throw std::runtime_error("dataset " + profile.name + " has " +
                             std::to_string(ds.feature_count()) + " features, config says " +
                             std::to_string(profile.inputs));
  }
  if (ds.label_width() != profile.outputs) {
    throw std::runtime_error("dataset " + profile.name + " has label width " +
                             std::to_string(ds.label_width()) + ", config says " +
                             std::to_string(profile.outputs));
  }
  return ds;
}

ExperimentConfig make_experiment_config(const CliConfig& config, const DatasetProfile& profile) {
  ExperimentConfig ec;
  ec.dataset_name = profile.name;
  ec.architecture = profile.architecture();
  ec.input_dim = profile.inputs;
  ec.learning_rate = profile.learning_rate;
  ec.batch_size = profile.batch_size;
  ec.epochs = config.epochs;
  ec.runs = config.runs;
  ec.folds = config.folds;
  ec.variants = config.variants;
  ec.master_seed = config.seed;
  ec.warmup_epochs = config.warmup_epochs;
  ec.patience = config.patience;
  return ec;
}

}  // namespace hybridloss
