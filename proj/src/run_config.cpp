#include "begp/run_config.hpp"

#include <json.hpp>

#include "begp/csv.hpp"

namespace begp {
namespace {

using nlohmann::json;

json parse_json(const std::string& text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw ConfigError("config: invalid JSON");
  return doc;
}

void require_object(const json& node, const std::string& name) {
  if (!node.is_object())
    throw ConfigError("config: '" + name + "' must be an object");
}

void reject_unknown(const json& node, const std::string& section,
                    std::initializer_list<const char*> known) {
  for (const auto& [key, value] : node.items()) {
    bool found = false;
    for (const char* k : known)
      if (key == k) {
        found = true;
        break;
      }
    if (!found)
      throw ConfigError("config: unknown key '" + key + "' in " + section);
  }
}

template <typename T>
void read_field(const json& node, const char* key, T& out) {
  if (!node.contains(key)) return;
  try {
    out = node.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config: bad value for '") + key + "'");
  }
}

template <typename T>
void read_field(const json& node, const char* key, std::optional<T>& out) {
  if (!node.contains(key)) return;
  T value;
  read_field(node, key, value);
  out = std::move(value);
}

}  // namespace

void RunConfig::validate() const {
  if (latent_dim < 1) throw ConfigError("config: latent_dim must be >= 1");
  if (latent_samples < 1)
    throw ConfigError("config: latent_samples must be >= 1");
  if (mode != "bayesian" && mode != "deterministic")
    throw ConfigError("config: mode must be 'bayesian' or 'deterministic'");
  if (iterations < 0) throw ConfigError("config: iterations must be >= 0");
  if (!(step_size > 0.0)) throw ConfigError("config: step_size must be > 0");
  if (warm_start_iterations < 0)
    throw ConfigError("config: warm_start_iterations must be >= 0");
  if (acquisition_kind != "ei" && acquisition_kind != "prob_best")
    throw ConfigError("config: acquisition kind must be 'ei' or 'prob_best'");
  if (restarts < 1) throw ConfigError("config: restarts must be >= 1");
  if (n_samples < 1) throw ConfigError("config: n_samples must be >= 1");
  if (family && dataset)
    throw ConfigError("config: family and dataset are mutually exclusive");
  if (family && *family != "toy" && *family != "forrester")
    throw ConfigError("config: family must be 'toy' or 'forrester'");
  if (seeds && seeds->empty())
    throw ConfigError("config: seeds must be non-empty when given");
  if (bo_budget < 0) throw ConfigError("config: bo_budget must be >= 0");
  if (n_legacy_tasks < 1 || points_per_task < 1 || current_task_points < 1)
    throw ConfigError("config: experiment sizes must be positive");
  for (int s : shot_grid)
    if (s < 0) throw ConfigError("config: shot_grid entries must be >= 0");
  if (methods.empty()) throw ConfigError("config: methods must be non-empty");
  for (const std::string& m : methods)
    if (m != "begp" && m != "egp" && m != "gp")
      throw ConfigError("config: unknown method '" + m + "'");
}

RunConfig parse_run_config(const std::string& json_text) {
  json doc = parse_json(json_text);
  require_object(doc, "root");
  if (doc.contains("config")) {
    // Manifest form: the echoed config is the authoritative document.
    doc = doc.at("config");
    require_object(doc, "config");
  }
  reject_unknown(doc, "root", {"model", "train", "acquisition", "experiment"});

  RunConfig config;
  if (doc.contains("model")) {
    const json& node = doc.at("model");
    require_object(node, "model");
    reject_unknown(node, "model", {"d_z", "latent_samples", "mode"});
    read_field(node, "d_z", config.latent_dim);
    read_field(node, "latent_samples", config.latent_samples);
    read_field(node, "mode", config.mode);
  }
  if (doc.contains("train")) {
    const json& node = doc.at("train");
    require_object(node, "train");
    reject_unknown(node, "train",
                   {"iterations", "step_size", "warm_start_iterations",
                    "seed"});
    read_field(node, "iterations", config.iterations);
    read_field(node, "step_size", config.step_size);
    read_field(node, "warm_start_iterations", config.warm_start_iterations);
    read_field(node, "seed", config.train_seed);
  }
  if (doc.contains("acquisition")) {
    const json& node = doc.at("acquisition");
    require_object(node, "acquisition");
    reject_unknown(node, "acquisition", {"kind", "restarts", "n_samples"});
    read_field(node, "kind", config.acquisition_kind);
    read_field(node, "restarts", config.restarts);
    read_field(node, "n_samples", config.n_samples);
  }
  if (doc.contains("experiment")) {
    const json& node = doc.at("experiment");
    require_object(node, "experiment");
    reject_unknown(node, "experiment",
                   {"family", "dataset", "seeds", "shot_grid", "bo_budget",
                    "n_legacy_tasks", "points_per_task",
                    "current_task_points", "methods", "current_task"});
    read_field(node, "family", config.family);
    read_field(node, "dataset", config.dataset);
    read_field(node, "seeds", config.seeds);
    read_field(node, "shot_grid", config.shot_grid);
    read_field(node, "bo_budget", config.bo_budget);
    read_field(node, "n_legacy_tasks", config.n_legacy_tasks);
    read_field(node, "points_per_task", config.points_per_task);
    read_field(node, "current_task_points", config.current_task_points);
    read_field(node, "methods", config.methods);
    read_field(node, "current_task", config.current_task);
  }
  config.validate();
  return config;
}

RunConfig read_run_config(const std::string& path) {
  return parse_run_config(read_text_file(path));
}

namespace {

json config_json(const RunConfig& config) {
  json model{{"d_z", config.latent_dim},
             {"latent_samples", config.latent_samples},
             {"mode", config.mode}};
  json train{{"iterations", config.iterations},
             {"step_size", config.step_size},
             {"warm_start_iterations", config.warm_start_iterations}};
  if (config.train_seed) train["seed"] = *config.train_seed;
  json acquisition{{"kind", config.acquisition_kind},
                   {"restarts", config.restarts},
                   {"n_samples", config.n_samples}};
  json experiment{{"shot_grid", config.shot_grid},
                  {"bo_budget", config.bo_budget},
                  {"n_legacy_tasks", config.n_legacy_tasks},
                  {"points_per_task", config.points_per_task},
                  {"current_task_points", config.current_task_points},
                  {"methods", config.methods}};
  if (config.family) experiment["family"] = *config.family;
  if (config.dataset) experiment["dataset"] = *config.dataset;
  if (config.seeds) experiment["seeds"] = *config.seeds;
  if (config.current_task) experiment["current_task"] = *config.current_task;
  return json{{"model", std::move(model)},
              {"train", std::move(train)},
              {"acquisition", std::move(acquisition)},
              {"experiment", std::move(experiment)}};
}

}  // namespace

std::string run_config_to_json(const RunConfig& config) {
  return config_json(config).dump(2) + "\n";
}

BegpModel::Settings model_settings(const RunConfig& config) {
  BegpModel::Settings settings;
  settings.latent_dim = config.latent_dim;
  settings.latent_samples = config.latent_samples;
  settings.mode = config.mode == "deterministic" ? EmbeddingMode::deterministic
                                                 : EmbeddingMode::bayesian;
  settings.train.iterations = config.iterations;
  settings.train.step_size = config.step_size;
  settings.train.warm_start_iterations = config.warm_start_iterations;
  return settings;
}

ExperimentConfig to_experiment_config(
    const RunConfig& config, const std::vector<std::uint64_t>& seeds) {
  ExperimentConfig experiment;
  if (config.dataset) {
    experiment.use_dataset = true;
    experiment.dataset = read_dataset_file(*config.dataset);
  } else {
    experiment.family = config.family && *config.family == "forrester"
                            ? Family::forrester
                            : Family::toy;
  }
  experiment.current_task = config.current_task;
  experiment.n_legacy_tasks = config.n_legacy_tasks;
  experiment.points_per_task = config.points_per_task;
  experiment.current_task_points = config.current_task_points;
  experiment.shot_grid = config.shot_grid;
  experiment.bo_budget = config.bo_budget;
  experiment.seeds = seeds;
  experiment.methods = config.methods;
  experiment.model = model_settings(config);
  experiment.ei.restarts = config.restarts;
  experiment.prob_best_samples = config.n_samples;
  return experiment;
}

std::string manifest_json(const RunConfig& config,
                          const std::vector<std::uint64_t>& seeds,
                          const std::string& command, double wall_ms) {
  json doc{{"format_version", kFormatVersion},
           {"code_version", kCodeVersion},
           {"command", command},
           {"seeds", seeds},
           {"wall_ms", wall_ms},
           {"config", config_json(config)}};
  return doc.dump(2) + "\n";
}

}  // namespace begp
