#pragma once

#include <optional>
#include <string>
#include <vector>

#include "begp/experiments.hpp"

namespace begp {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The editable run configuration.  Sections: model, train, acquisition,
// experiment.  Every field is optional in the file; the values here are the
// documented defaults.  Unknown keys anywhere are rejected.
struct RunConfig {
  // model
  int latent_dim = 2;
  int latent_samples = 64;
  std::string mode = "bayesian";  // or "deterministic"

  // train
  int iterations = 2000;
  double step_size = 0.01;
  int warm_start_iterations = 500;
  std::optional<std::uint64_t> train_seed;  // single-model commands

  // acquisition
  std::string acquisition_kind = "ei";  // "ei" or "prob_best"
  int restarts = 10;
  int n_samples = 256;

  // experiment
  std::optional<std::string> family;   // "toy" or "forrester"
  std::optional<std::string> dataset;  // CSV path; mutually exclusive
  std::optional<std::vector<std::uint64_t>> seeds;  // absent: entropy
  std::vector<int> shot_grid = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  int bo_budget = 5;
  int n_legacy_tasks = 5;
  int points_per_task = 5;
  int current_task_points = 15;
  std::vector<std::string> methods = {"begp", "egp", "gp"};
  std::optional<std::string> current_task;

  void validate() const;
};

// Parses a config document.  A manifest (object with a "config" key) is
// accepted too, so reruns can point straight at a previous run's manifest.
RunConfig parse_run_config(const std::string& json_text);
RunConfig read_run_config(const std::string& path);

// Fully resolved echo of the config, defaults included.
std::string run_config_to_json(const RunConfig& config);

BegpModel::Settings model_settings(const RunConfig& config);

// Experiment plan for the bench commands; reads the dataset file when the
// config names one and substitutes `seeds` for an absent seed list.
ExperimentConfig to_experiment_config(const RunConfig& config,
                                      const std::vector<std::uint64_t>& seeds);

std::string manifest_json(const RunConfig& config,
                          const std::vector<std::uint64_t>& seeds,
                          const std::string& command, double wall_ms);

inline constexpr int kFormatVersion = 1;
inline constexpr const char* kCodeVersion = "begp 1.0.0";

}  // namespace begp
