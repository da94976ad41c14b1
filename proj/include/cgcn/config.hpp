#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cgcn/errors.hpp"
#include "cgcn/objectives.hpp"
#include "cgcn/tensor.hpp"

namespace cgcn {

/// Everything a run needs: dataset (paths or synthetic spec), architecture,
/// optimizer, schedule, loss weights, ablation switches, sweep grids, seed,
/// and the output directory. Populated from a flat key=value file plus
/// command-line overrides.
struct RunConfig {
  // Dataset: either explicit file paths or a synthetic spec.
  std::string features_path;
  std::string edges_path;
  std::string labels_path;  // optional
  int k = 0;
  bool synth = false;
  int synth_k = 3;
  int synth_nodes_per_cluster = 100;
  double synth_p_in = 0.2;
  double synth_p_out = 0.01;
  int synth_dim = 16;
  double synth_sep = 4.0;
  std::optional<std::uint64_t> synth_seed;  // defaults to `seed`
  bool standardize = false;

  // Architecture.
  std::vector<int> hidden_dims = {256, 64};
  int latent_dim = 20;
  std::string activation = "relu";

  // Optimizer and schedule.
  std::string optimizer = "adam";
  double learning_rate = 1e-3;
  std::optional<double> lr_ae;
  std::optional<double> lr_gae;
  std::optional<double> lr_train;
  int epochs_ae = 30;
  int epochs_gae = 30;
  int epochs_train = 200;

  // Loss weights and clustering head.
  double alpha = 0.5;
  double beta = 0.5;
  double gamma = 0.1;
  double lambda_kl = 10.0;
  double v = 1.0;
  int p_update_interval = 1;  // epochs between target-distribution refreshes
  bool normalize_losses = false;

  // Ablation switches.
  bool enable_contrastive = true;
  bool enable_multi_order = true;

  // Sweep grids.
  std::vector<double> sweep_alpha_grid = {0.0, 0.5, 1.0, 1.5, 2.0};
  std::vector<double> sweep_beta_grid = {0.0, 0.5, 1.0, 1.5, 2.0};
  std::string sweep_metric = "acc";

  std::uint64_t seed = 1;
  std::string out_dir = "out";

  [[nodiscard]] double lr_for_ae() const { return lr_ae.value_or(learning_rate); }
  [[nodiscard]] double lr_for_gae() const { return lr_gae.value_or(learning_rate); }
  [[nodiscard]] double lr_for_train() const { return lr_train.value_or(learning_rate); }
  [[nodiscard]] std::uint64_t effective_synth_seed() const { return synth_seed.value_or(seed); }

  /// Effective alpha/beta after the contrastive ablation switch.
  [[nodiscard]] LossWeights weights() const {
    LossWeights w;
    w.gamma = gamma;
    w.lambda_kl = lambda_kl;
    w.alpha = enable_contrastive ? alpha : 0.0;
    w.beta = enable_contrastive ? beta : 0.0;
    return w;
  }

  void validate() const {
    if (!synth) {
      if (features_path.empty() || edges_path.empty()) {
        throw ConfigError("dataset requires features_path and edges_path (or synth=true)");
      }
      if (k < 1) throw ConfigError("cluster count k must be >= 1");
    }
    if (epochs_ae < 0 || epochs_gae < 0 || epochs_train < 0) throw ConfigError("epochs must be >= 0");
    if (learning_rate < 0.0) throw ConfigError("learning_rate must be >= 0");
    if (optimizer != "adam") throw ConfigError("unsupported optimizer: '" + optimizer + "'");
    if (p_update_interval < 1) throw ConfigError("p_update_interval must be >= 1");
    if (latent_dim < 1) throw ConfigError("latent_dim must be >= 1");
    if (sweep_alpha_grid.empty() || sweep_beta_grid.empty()) throw ConfigError("sweep grids must be non-empty");
    weights().validate();
    parse_activation(activation);
  }
};

namespace detail {

inline bool parse_bool(const std::string& value, const std::string& key) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("key '" + key + "': expected boolean, got '" + value + "'");
}

inline double parse_cfg_double(const std::string& value, const std::string& key) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError("key '" + key + "': expected real number, got '" + value + "'");
  }
  return out;
}

inline long parse_cfg_int(const std::string& value, const std::string& key) {
  long out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError("key '" + key + "': expected integer, got '" + value + "'");
  }
  return out;
}

template <typename T, typename Parse>
std::vector<T> parse_list(const std::string& value, const std::string& key, Parse parse) {
  std::vector<T> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= value.size(); ++i) {
    if (i == value.size() || value[i] == ',') {
      std::string field = value.substr(start, i - start);
      if (!field.empty()) out.push_back(parse(field, key));
      start = i + 1;
    }
  }
  if (out.empty()) throw ConfigError("key '" + key + "': empty list");
  return out;
}

}  // namespace detail

/// Applies one key=value assignment. Unknown keys are rejected so typos
/// surface immediately.
inline void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
  using detail::parse_bool;
  using detail::parse_cfg_double;
  using detail::parse_cfg_int;
  if (key == "features_path") cfg.features_path = value;
  else if (key == "edges_path") cfg.edges_path = value;
  else if (key == "labels_path") cfg.labels_path = value;
  else if (key == "k") cfg.k = static_cast<int>(parse_cfg_int(value, key));
  else if (key == "synth") cfg.synth = parse_bool(value, key);
  else if (key == "synth_k") cfg.synth_k = static_cast<int>(parse_cfg_int(value, key));
  else if (key == "synth_nodes_per_cluster") cfg.synth_nodes_per_cluster = static_cast<int>(parse_cfg_int(value, key));
  else if (key == "synth_p_in") cfg.synth_p_in = parse_cfg_double(value, key);
  else if (key == "synth_p_out") cfg.synth_p_out = parse_cfg_double(value, key);
  else if (key == "synth_dim") cfg.synth_dim = static_cast<int>(parse_cfg_int(value, key));
  else if (key == "synth_sep") cfg.synth_sep = parse_cfg_double(value, key);
  else if (key == "synth_seed") cfg.synth_seed = static_cast<std::uint64_t>(parse_cfg_int(value, key));
  else if (key == "standardize") cfg.standardize = parse_bool(value, key);
  else if (key == "hidden_dims") cfg.hidden_dims = detail::parse_list<int>(value, key, [](const std::string& f, const std::string& k2) {
    return static_cast<int>(detail::parse_cfg_int(f, k2));
  });
  else if (key == "latent_dim") cfg.latent_dim = static_cast<int>(parse_cfg_int(value, key));
  else if (key == "activation") cfg.activation = value;
  else if (key == "optimizer") cfg.optimizer = value;
  else if (key == "learning_rate") cfg.learning_rate = parse_cfg_double(value, key);
  else if (key == "lr_ae") cfg.lr_ae = parse_cfg_double(value, key);
  else if (key == "lr_gae") cfg.lr_gae = parse_cfg_double(value, key);
  else if (key == "lr_train") cfg.lr_train = parse_cfg_double(value, key);
  else if (key == "epochs_ae") cfg.epochs_ae = static_cast<int>(parse_cfg_int(value, key));
  else if (key == "epochs_gae") cfg.epochs_gae = static_cast<int>(parse_cfg_int(value, key));
  else if (key == "epochs_train") cfg.epochs_train = static_cast<int>(parse_cfg_int(value, key));
  else if (key == "alpha") cfg.alpha = parse_cfg_double(value, key);
  else if (key == "beta") cfg.beta = parse_cfg_double(value, key);
  else if (key == "gamma") cfg.gamma = parse_cfg_double(value, key);
  else if (key == "lambda_kl") cfg.lambda_kl = parse_cfg_double(value, key);
  else if (key == "v") cfg.v = parse_cfg_double(value, key);
  else if (key == "p_update_interval") cfg.p_update_interval = static_cast<int>(parse_cfg_int(value, key));
  else if (key == "normalize_losses") cfg.normalize_losses = parse_bool(value, key);
  else if (key == "enable_contrastive") cfg.enable_contrastive = parse_bool(value, key);
  else if (key == "enable_multi_order") cfg.enable_multi_order = parse_bool(value, key);
  else if (key == "sweep_alpha_grid") cfg.sweep_alpha_grid = detail::parse_list<double>(value, key, detail::parse_cfg_double);
  else if (key == "sweep_beta_grid") cfg.sweep_beta_grid = detail::parse_list<double>(value, key, detail::parse_cfg_double);
  else if (key == "sweep_metric") cfg.sweep_metric = value;
  else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_cfg_int(value, key));
  else if (key == "out_dir") cfg.out_dir = value;
  else throw ConfigError("unknown config key: '" + key + "'");
}

/// Parses a flat key=value config file. '#' starts a comment; blank lines
/// are skipped.
inline void load_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string trimmed(line);
    trimmed.erase(0, trimmed.find_first_not_of(" \t\r"));
    trimmed.erase(trimmed.find_last_not_of(" \t\r") + 1);
    if (trimmed.empty()) continue;
    const auto eq = trimmed.find('=');
    if (eq == std::string::npos) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": expected key=value, got '" + trimmed + "'");
    }
    std::string key = trimmed.substr(0, eq);
    std::string value = trimmed.substr(eq + 1);
    key.erase(key.find_last_not_of(" \t") + 1);
    value.erase(0, value.find_first_not_of(" \t"));
    apply_config_entry(cfg, key, value);
  }
}

/// Full config echo, embedded in every report so a run can be reproduced
/// from its outputs alone.
inline nlohmann::ordered_json config_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["features_path"] = cfg.features_path;
  j["edges_path"] = cfg.edges_path;
  j["labels_path"] = cfg.labels_path;
  j["k"] = cfg.k;
  j["synth"] = cfg.synth;
  j["synth_k"] = cfg.synth_k;
  j["synth_nodes_per_cluster"] = cfg.synth_nodes_per_cluster;
  j["synth_p_in"] = cfg.synth_p_in;
  j["synth_p_out"] = cfg.synth_p_out;
  j["synth_dim"] = cfg.synth_dim;
  j["synth_sep"] = cfg.synth_sep;
  j["synth_seed"] = cfg.effective_synth_seed();
  j["standardize"] = cfg.standardize;
  j["hidden_dims"] = cfg.hidden_dims;
  j["latent_dim"] = cfg.latent_dim;
  j["activation"] = cfg.activation;
  j["optimizer"] = cfg.optimizer;
  j["learning_rate"] = cfg.learning_rate;
  j["lr_ae"] = cfg.lr_for_ae();
  j["lr_gae"] = cfg.lr_for_gae();
  j["lr_train"] = cfg.lr_for_train();
  j["epochs_ae"] = cfg.epochs_ae;
  j["epochs_gae"] = cfg.epochs_gae;
  j["epochs_train"] = cfg.epochs_train;
  j["alpha"] = cfg.alpha;
  j["beta"] = cfg.beta;
  j["gamma"] = cfg.gamma;
  j["lambda_kl"] = cfg.lambda_kl;
  j["v"] = cfg.v;
  j["p_update_interval"] = cfg.p_update_interval;
  j["normalize_losses"] = cfg.normalize_losses;
  j["enable_contrastive"] = cfg.enable_contrastive;
  j["enable_multi_order"] = cfg.enable_multi_order;
  j["sweep_alpha_grid"] = cfg.sweep_alpha_grid;
  j["sweep_beta_grid"] = cfg.sweep_beta_grid;
  j["sweep_metric"] = cfg.sweep_metric;
  j["seed"] = cfg.seed;
  return j;
}

}  // namespace cgcn
