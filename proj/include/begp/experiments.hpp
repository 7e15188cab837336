#pragma once

#include <optional>
#include <string>
#include <vector>

#include "begp/baseline_gp.hpp"
#include "begp/begp_model.hpp"
#include "begp/bo_loop.hpp"
#include "begp/synthetic.hpp"

namespace begp {

// Full description of one benchmark run: problem source, protocol sizes,
// model settings, and the seed list.
struct ExperimentConfig {
  Family family = Family::toy;
  bool use_dataset = false;
  MultiTaskData dataset;                  // rows of the CSV when use_dataset
  std::optional<std::string> current_task;  // dataset mode; empty -> rotate

  int n_legacy_tasks = 5;
  int points_per_task = 5;
  int current_task_points = 15;
  std::vector<int> shot_grid = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  int bo_budget = 5;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::vector<std::string> methods = {"begp", "egp", "gp"};

  BegpModel::Settings model;
  BaselineGp::Settings baseline;
  EiOptions ei;
  int prob_best_samples = 256;

  void validate() const;
};

struct RegressionCell {
  std::string method;
  std::uint64_t seed = 0;
  int shot = 0;
  double rmse = 0.0, mae = 0.0, mnlp = 0.0;
};

struct AggregateRow {
  std::string method;
  int x = 0;  // shot or evaluation index
  std::string metric;
  double p10 = 0.0, median = 0.0, p90 = 0.0;
};

struct RegressionRecord {
  std::vector<RegressionCell> cells;
  std::vector<AggregateRow> summary;
};

struct BoCell {
  std::string method;
  std::uint64_t seed = 0;
  int evaluation = 0;  // 1-based
  Vector x;
  double y = 0.0;
  double best = 0.0;
  double rel_best = 0.0;  // only meaningful in dataset mode
};

struct BoRecord {
  std::vector<BoCell> cells;
  std::vector<AggregateRow> summary;  // metric "best" or "rel_best"
  bool relative = false;
};

// Shot sweep: per seed, a held-out current task with a fixed train/test
// split; per shot, each method trains on legacy rows plus the first k
// current-task points (the baseline sees only the current-task points) and is
// scored on the held-out remainder.
RegressionRecord run_regression_experiment(const ExperimentConfig& config);

// Sequential optimization of a held-out task: continuous oracle for the
// synthetic families, finite candidate pool per task in dataset mode (traces
// then relative to the per-task best outcome).
BoRecord run_bo_experiment(const ExperimentConfig& config);

// The vanilla-GP comparison point: MLE fit on current-task rows only (possibly
// none), then the Gaussian predictive at the test inputs.
GaussianPredictive baseline_gp_fit_predict(const MultiTaskData& current_data,
                                           const Matrix& x_star,
                                           const BaselineGp::Settings& settings,
                                           std::uint64_t seed);

// Task keys in order of first appearance.
std::vector<TaskKey> distinct_tasks(const MultiTaskData& data);

// Rows whose key matches (or does not match) a task.
MultiTaskData rows_matching(const MultiTaskData& data, const TaskKey& task,
                            bool keep_matching);

}  // namespace begp
