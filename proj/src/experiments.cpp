#include "begp/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <numeric>
#include <stdexcept>

#include "begp/metrics.hpp"

namespace begp {

void ExperimentConfig::validate() const {
  if (n_legacy_tasks < 1 || points_per_task < 1 || current_task_points < 1)
    throw std::invalid_argument("experiment config: counts must be positive");
  if (bo_budget < 0)
    throw std::invalid_argument("experiment config: negative bo_budget");
  if (seeds.empty())
    throw std::invalid_argument("experiment config: empty seed list");
  if (methods.empty())
    throw std::invalid_argument("experiment config: empty method list");
  for (const std::string& m : methods)
    if (m != "begp" && m != "egp" && m != "gp")
      throw std::invalid_argument("experiment config: unknown method '" + m +
                                  "'");
  for (int s : shot_grid)
    if (s < 0)
      throw std::invalid_argument("experiment config: negative shot count");
  if (use_dataset) dataset.validate();
}

std::vector<TaskKey> distinct_tasks(const MultiTaskData& data) {
  std::vector<TaskKey> keys;
  for (const TaskKey& key : data.tasks)
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      keys.push_back(key);
  return keys;
}

MultiTaskData rows_matching(const MultiTaskData& data, const TaskKey& task,
                            bool keep_matching) {
  MultiTaskData out;
  out.feature_names = data.feature_names;
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < data.rows(); ++i)
    if ((data.tasks[static_cast<std::size_t>(i)] == task) == keep_matching)
      rows.push_back(i);
  out.x = Matrix(static_cast<Eigen::Index>(rows.size()), data.x.cols());
  out.y = Vector(static_cast<Eigen::Index>(rows.size()));
  out.tasks.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.x.row(static_cast<Eigen::Index>(i)) = data.x.row(rows[i]);
    out.y[static_cast<Eigen::Index>(i)] = data.y[rows[i]];
    out.tasks.push_back(data.tasks[static_cast<std::size_t>(rows[i])]);
  }
  return out;
}

namespace {

std::unique_ptr<Surrogate> make_surrogate(const std::string& method,
                                          const ExperimentConfig& config,
                                          int input_dim) {
  if (method == "gp") {
    BaselineGp::Settings s = config.baseline;
    s.input_dim = input_dim;
    return std::make_unique<BaselineGp>(s);
  }
  BegpModel::Settings s = config.model;
  s.mode = method == "egp" ? EmbeddingMode::deterministic
                           : EmbeddingMode::bayesian;
  return std::make_unique<BegpModel>(s);
}

MultiTaskData concat_rows(const MultiTaskData& a, const MultiTaskData& b) {
  MultiTaskData out;
  out.feature_names = a.feature_names;
  out.x = Matrix(a.rows() + b.rows(), a.rows() > 0 ? a.x.cols() : b.x.cols());
  out.y = Vector(a.rows() + b.rows());
  out.x.topRows(a.rows()) = a.x;
  out.x.bottomRows(b.rows()) = b.x;
  out.y.head(a.rows()) = a.y;
  out.y.tail(b.rows()) = b.y;
  out.tasks = a.tasks;
  out.tasks.insert(out.tasks.end(), b.tasks.begin(), b.tasks.end());
  return out;
}

MultiTaskData empty_like(const MultiTaskData& data) {
  MultiTaskData out;
  out.feature_names = data.feature_names;
  out.x = Matrix(0, data.x.cols());
  out.y = Vector(0);
  return out;
}

MultiTaskData take_rows(const MultiTaskData& data,
                        const std::vector<Eigen::Index>& rows) {
  MultiTaskData out;
  out.feature_names = data.feature_names;
  out.x = Matrix(static_cast<Eigen::Index>(rows.size()), data.x.cols());
  out.y = Vector(static_cast<Eigen::Index>(rows.size()));
  out.tasks.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.x.row(static_cast<Eigen::Index>(i)) = data.x.row(rows[i]);
    out.y[static_cast<Eigen::Index>(i)] = data.y[rows[i]];
    out.tasks.push_back(data.tasks[static_cast<std::size_t>(rows[i])]);
  }
  return out;
}

// Current-task rows for one regression cell: fixed per-seed pool and test
// split, shots drawn from the front of the pool.
struct CurrentSplit {
  MultiTaskData pool;
  MultiTaskData test;
  TaskKey task;
};

CurrentSplit family_split(const ExperimentConfig& config, std::uint64_t seed) {
  const SyntheticTask current =
      config.family == Family::forrester
          ? high_fidelity_forrester()
          : sample_current_task(config.family, derive_seed(seed, "current"));
  CurrentSplit split;
  split.task = {"task_" + std::to_string(config.n_legacy_tasks)};

  MultiTaskData rows;
  rows.feature_names = {"task"};
  rows.x = Matrix(config.current_task_points, 1);
  rows.y = Vector(config.current_task_points);
  RngStream rng(derive_seed(seed, "current-data"));
  for (int i = 0; i < config.current_task_points; ++i) {
    const double x = rng.uniform();
    rows.x(i, 0) = x;
    rows.y[i] = current(x);
    rows.tasks.push_back(split.task);
  }

  const Eigen::Index pool_size =
      std::min<Eigen::Index>(10, rows.rows() - 1);
  std::vector<Eigen::Index> pool_rows(static_cast<std::size_t>(pool_size));
  std::iota(pool_rows.begin(), pool_rows.end(), Eigen::Index{0});
  std::vector<Eigen::Index> test_rows;
  for (Eigen::Index i = pool_size; i < rows.rows(); ++i) test_rows.push_back(i);
  split.pool = take_rows(rows, pool_rows);
  split.test = take_rows(rows, test_rows);
  return split;
}

CurrentSplit dataset_split(const ExperimentConfig& config, const TaskKey& task,
                           std::uint64_t seed) {
  CurrentSplit split;
  split.task = task;
  MultiTaskData rows = rows_matching(config.dataset, task, true);
  if (rows.rows() < 2)
    throw std::invalid_argument(
        "regression experiment: current task needs >= 2 rows");

  // Seeded shuffle, then hold out the trailing third (at least one row).
  std::vector<Eigen::Index> order(static_cast<std::size_t>(rows.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  RngStream rng(derive_seed(seed, "split"));
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j =
        static_cast<std::size_t>(rng.raw() % static_cast<std::uint64_t>(i));
    std::swap(order[i - 1], order[j]);
  }
  const std::size_t test_count =
      std::max<std::size_t>(1, order.size() / 3);
  const std::vector<Eigen::Index> pool_rows(order.begin(),
                                            order.end() - test_count);
  const std::vector<Eigen::Index> test_rows(order.end() - test_count,
                                            order.end());
  split.pool = take_rows(rows, pool_rows);
  split.test = take_rows(rows, test_rows);
  return split;
}

TaskKey dataset_current_task(const ExperimentConfig& config,
                             std::size_t seed_index) {
  const std::vector<TaskKey> keys = distinct_tasks(config.dataset);
  if (keys.empty())
    throw std::invalid_argument("dataset experiment: no tasks in dataset");
  if (config.current_task) {
    for (const TaskKey& key : keys) {
      std::string joined;
      for (std::size_t f = 0; f < key.size(); ++f)
        joined += (f ? "," : "") + key[f];
      if (joined == *config.current_task) return key;
    }
    throw std::invalid_argument("dataset experiment: task '" +
                                *config.current_task + "' not in dataset");
  }
  return keys[seed_index % keys.size()];
}

void append_aggregates(std::vector<AggregateRow>& summary,
                       const std::string& method, int x,
                       const std::string& metric,
                       const std::vector<double>& values) {
  AggregateRow row;
  row.method = method;
  row.x = x;
  row.metric = metric;
  row.p10 = quantile_linear(values, 0.1);
  row.median = quantile_linear(values, 0.5);
  row.p90 = quantile_linear(values, 0.9);
  summary.push_back(std::move(row));
}

}  // namespace

GaussianPredictive baseline_gp_fit_predict(const MultiTaskData& current_data,
                                           const Matrix& x_star,
                                           const BaselineGp::Settings& settings,
                                           std::uint64_t seed) {
  BaselineGp::Settings s = settings;
  s.input_dim = static_cast<int>(x_star.cols());
  BaselineGp gp(s);
  gp.fit(current_data, seed);
  return gp.predict_joint({}, x_star, 0);
}

RegressionRecord run_regression_experiment(const ExperimentConfig& config) {
  config.validate();
  RegressionRecord record;

  for (std::size_t si = 0; si < config.seeds.size(); ++si) {
    const std::uint64_t seed = config.seeds[si];

    MultiTaskData legacy;
    CurrentSplit split;
    if (config.use_dataset) {
      const TaskKey task = dataset_current_task(config, si);
      legacy = rows_matching(config.dataset, task, false);
      split = dataset_split(config, task, seed);
    } else {
      const auto tasks = sample_task_family(config.family,
                                            config.n_legacy_tasks,
                                            derive_seed(seed, "legacy-tasks"));
      legacy = build_legacy_dataset(tasks, config.points_per_task,
                                    derive_seed(seed, "legacy-data"));
      split = family_split(config, seed);
    }
    if (legacy.rows() == 0)
      throw std::invalid_argument("regression experiment: no legacy rows");

    for (int shot : config.shot_grid) {
      if (shot > split.pool.rows())
        throw std::invalid_argument(
            "regression experiment: insufficient current-task data for shot " +
            std::to_string(shot));
      std::vector<Eigen::Index> first(static_cast<std::size_t>(shot));
      std::iota(first.begin(), first.end(), Eigen::Index{0});
      const MultiTaskData current_rows = take_rows(split.pool, first);

      for (const std::string& method : config.methods) {
        const std::uint64_t cell_seed =
            derive_seed(seed, "cell", method, shot);
        GaussianPredictive pred;
        if (method == "gp") {
          pred = baseline_gp_fit_predict(current_rows, split.test.x,
                                         config.baseline, cell_seed);
        } else {
          auto model = make_surrogate(method, config,
                                      static_cast<int>(legacy.x.cols()));
          model->fit(concat_rows(legacy, current_rows), cell_seed);
          pred = model->predict_joint(split.task, split.test.x,
                                      derive_seed(cell_seed, "predict"));
        }
        const auto marginals = mnlp_ready_marginals(pred);
        Vector means(pred.mean.size());
        for (Eigen::Index i = 0; i < means.size(); ++i)
          means[i] = marginals[static_cast<std::size_t>(i)].first;

        RegressionCell cell;
        cell.method = method;
        cell.seed = seed;
        cell.shot = shot;
        cell.rmse = metric_rmse(split.test.y, means);
        cell.mae = metric_mae(split.test.y, means);
        cell.mnlp = metric_mnlp(split.test.y, marginals);
        record.cells.push_back(std::move(cell));
      }
    }
  }

  for (const std::string& method : config.methods) {
    for (int shot : config.shot_grid) {
      std::map<std::string, std::vector<double>> by_metric;
      for (const RegressionCell& cell : record.cells) {
        if (cell.method != method || cell.shot != shot) continue;
        by_metric["rmse"].push_back(cell.rmse);
        by_metric["mae"].push_back(cell.mae);
        by_metric["mnlp"].push_back(cell.mnlp);
      }
      for (const auto& [metric, values] : by_metric)
        append_aggregates(record.summary, method, shot, metric, values);
    }
  }
  return record;
}

BoRecord run_bo_experiment(const ExperimentConfig& config) {
  config.validate();
  BoRecord record;
  record.relative = config.use_dataset;

  for (std::size_t si = 0; si < config.seeds.size(); ++si) {
    const std::uint64_t seed = config.seeds[si];

    MultiTaskData legacy;
    TaskKey task;
    FiniteDesignSet designs;
    Oracle oracle;
    double task_best = 0.0;
    if (config.use_dataset) {
      task = dataset_current_task(config, si);
      legacy = rows_matching(config.dataset, task, false);
      const MultiTaskData current = rows_matching(config.dataset, task, true);
      if (current.rows() == 0)
        throw std::invalid_argument("bo experiment: current task has no rows");
      for (Eigen::Index i = 0; i < current.rows(); ++i) {
        FiniteCandidate c;
        c.x = current.x.row(i).transpose();
        c.y = current.y[i];
        designs.candidates.push_back(std::move(c));
      }
      task_best = current.y.minCoeff();
    } else {
      const auto tasks = sample_task_family(config.family,
                                            config.n_legacy_tasks,
                                            derive_seed(seed, "legacy-tasks"));
      legacy = build_legacy_dataset(tasks, config.points_per_task,
                                    derive_seed(seed, "legacy-data"));
      const SyntheticTask current =
          config.family == Family::forrester
              ? high_fidelity_forrester()
              : sample_current_task(config.family,
                                    derive_seed(seed, "current"));
      task = {"task_" + std::to_string(config.n_legacy_tasks)};
      oracle = [current](const Vector& x) { return current(x[0]); };
    }

    for (const std::string& method : config.methods) {
      auto model =
          make_surrogate(method, config, static_cast<int>(legacy.x.cols()));
      const MultiTaskData& initial =
          method == "gp" ? empty_like(legacy) : legacy;
      BoSettings bo;
      bo.budget = config.bo_budget;
      bo.ei = config.ei;
      bo.prob_best_samples = config.prob_best_samples;
      const std::uint64_t run_seed = derive_seed(seed, "bo", method);

      BORun run;
      if (config.use_dataset) {
        FiniteDesignSet pool = designs;  // fresh evaluated flags per method
        run = run_bo_finite(*model, initial, task, pool, bo, run_seed);
      } else {
        ContinuousDesignSpace space;
        space.lower = Vector::Zero(1);
        space.upper = Vector::Ones(1);
        run = run_bo_continuous(*model, initial, task, oracle, space, bo,
                                run_seed);
      }
      if (run.aborted)
        throw std::runtime_error("bo experiment: run aborted (method=" +
                                 method + ", seed=" + std::to_string(seed) +
                                 "): " + run.error);

      for (const BoEvent& event : run.events) {
        BoCell cell;
        cell.method = method;
        cell.seed = seed;
        cell.evaluation = event.iteration + 1;
        cell.x = event.x;
        cell.y = event.y;
        cell.best = event.best_so_far;
        cell.rel_best = event.best_so_far - task_best;
        record.cells.push_back(std::move(cell));
      }
    }
  }

  const std::string metric = record.relative ? "rel_best" : "best";
  for (const std::string& method : config.methods) {
    for (int eval = 1; eval <= config.bo_budget; ++eval) {
      std::vector<double> values;
      for (const BoCell& cell : record.cells)
        if (cell.method == method && cell.evaluation == eval)
          values.push_back(record.relative ? cell.rel_best : cell.best);
      if (!values.empty())
        append_aggregates(record.summary, method, eval, metric, values);
    }
  }
  return record;
}

}  // namespace begp
