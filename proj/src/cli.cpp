#include "begp/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "begp/csv.hpp"
#include "begp/model_io.hpp"
#include "begp/run_config.hpp"

namespace begp {
namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Vector parse_real_list(const std::string& text, const std::string& where) {
  const std::vector<std::string> cells = split_csv_line(text);
  Vector out(static_cast<Eigen::Index>(cells.size()));
  for (std::size_t i = 0; i < cells.size(); ++i)
    out[static_cast<Eigen::Index>(i)] = parse_real(cells[i], where);
  return out;
}

TaskKey parse_task_key(const std::string& text) {
  TaskKey key = split_csv_line(text);
  for (const std::string& token : key)
    if (token.empty()) throw UsageError("empty task token in '" + text + "'");
  return key;
}

// Query rows: task columns then x columns; a trailing y column is tolerated
// and ignored so a training CSV can be replayed as a query.
struct QueryRows {
  std::vector<std::string> header;  // echoed columns (y dropped if present)
  std::vector<TaskKey> tasks;
  Matrix x;
  std::vector<std::vector<std::string>> cells;  // echoed, y dropped
};

QueryRows parse_query_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw CsvError("query: empty file");
  std::vector<std::string> header = split_csv_line(line);
  const bool has_y = !header.empty() && header.back() == "y";
  if (has_y) header.pop_back();

  std::size_t n_task = 0;
  while (n_task < header.size() && header[n_task].rfind("task", 0) == 0)
    ++n_task;
  if (n_task == 0)
    throw CsvError("query: header needs at least one task-prefixed column");
  const std::size_t n_x = header.size() - n_task;
  if (n_x == 0) throw CsvError("query: header has no x columns");

  QueryRows rows;
  rows.header = header;
  std::vector<std::vector<double>> x_rows;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const std::string where = "query row " + std::to_string(row);
    std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size() + (has_y ? 1 : 0))
      throw CsvError(where + ": wrong cell count");
    if (has_y) cells.pop_back();
    TaskKey key;
    for (std::size_t j = 0; j < n_task; ++j) {
      if (cells[j].empty()) throw CsvError(where + ": empty task token");
      key.push_back(cells[j]);
    }
    std::vector<double> x(n_x);
    for (std::size_t j = 0; j < n_x; ++j)
      x[j] = parse_real(cells[n_task + j], where);
    rows.tasks.push_back(std::move(key));
    x_rows.push_back(std::move(x));
    rows.cells.push_back(std::move(cells));
  }
  if (x_rows.empty()) throw CsvError("query: no data rows");
  rows.x = Matrix(static_cast<Eigen::Index>(x_rows.size()),
                  static_cast<Eigen::Index>(n_x));
  for (std::size_t i = 0; i < x_rows.size(); ++i)
    for (std::size_t j = 0; j < n_x; ++j)
      rows.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          x_rows[i][j];
  return rows;
}

std::vector<std::uint64_t> entropy_seeds(std::size_t count) {
  std::random_device device;
  std::vector<std::uint64_t> seeds(count);
  for (std::uint64_t& seed : seeds)
    seed = (static_cast<std::uint64_t>(device()) << 32) | device();
  return seeds;
}

void write_output(const std::optional<std::string>& path,
                  const std::string& text) {
  if (path)
    write_text_file(*path, text);
  else
    std::cout << text;
}

struct FitArgs {
  std::string data_path;
  std::optional<std::string> config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
};

int run_fit(const FitArgs& args) {
  RunConfig config;
  if (args.config_path) config = read_run_config(*args.config_path);
  const MultiTaskData data = read_dataset_file(args.data_path);
  std::uint64_t seed;
  if (args.seed)
    seed = *args.seed;
  else if (config.train_seed)
    seed = *config.train_seed;
  else
    seed = entropy_seeds(1)[0];

  BegpModel model(model_settings(config));
  model.fit(data, seed);
  save_model(model, args.out_path);
  return 0;
}

struct PredictArgs {
  std::string model_path;
  std::string query_path;
  std::optional<std::string> out_path;
  std::optional<std::uint64_t> seed;
};

int run_predict(const PredictArgs& args) {
  const BegpModel model = load_model(args.model_path);
  const QueryRows query = parse_query_csv(read_text_file(args.query_path));
  const std::uint64_t seed =
      args.seed ? *args.seed : model.settings().train.seed;
  const GaussianPredictive predictive = model.predict(
      query.tasks, query.x, model.settings().latent_samples, seed);
  const auto marginals = mnlp_ready_marginals(predictive);

  std::string out;
  for (const std::string& name : query.header) out += name + ",";
  out += "mean,variance\n";
  for (std::size_t i = 0; i < query.cells.size(); ++i) {
    for (const std::string& cell : query.cells[i]) out += cell + ",";
    out += format_double(marginals[i].first) + "," +
           format_double(marginals[i].second) + "\n";
  }
  write_output(args.out_path, out);
  return 0;
}

struct SuggestArgs {
  std::string model_path;
  std::optional<std::string> candidates_path;
  std::optional<std::string> lower;
  std::optional<std::string> upper;
  std::optional<std::string> task;
  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
};

bool row_in_training(const MultiTaskData& data, const TaskKey& task,
                     const Vector& x) {
  for (Eigen::Index i = 0; i < data.rows(); ++i)
    if (data.tasks[static_cast<std::size_t>(i)] == task &&
        data.x.row(i).transpose() == x)
      return true;
  return false;
}

int run_suggest(const SuggestArgs& args) {
  const BegpModel model = load_model(args.model_path);
  RunConfig config;
  if (args.config_path) config = read_run_config(*args.config_path);
  const std::uint64_t seed =
      args.seed ? *args.seed : model.settings().train.seed;

  if (args.candidates_path) {
    if (args.lower || args.upper)
      throw UsageError("suggest: use either --candidates or a box, not both");
    const QueryRows pool =
        parse_query_csv(read_text_file(*args.candidates_path));
    TaskKey task;
    if (args.task) {
      task = parse_task_key(*args.task);
    } else {
      task = pool.tasks.front();
      for (const TaskKey& key : pool.tasks)
        if (key != task)
          throw UsageError(
              "suggest: candidates span several tasks; pass --task");
    }
    FiniteDesignSet designs;
    for (Eigen::Index i = 0; i < pool.x.rows(); ++i) {
      if (pool.tasks[static_cast<std::size_t>(i)] != task) continue;
      FiniteCandidate c;
      c.x = pool.x.row(i).transpose();
      c.evaluated = row_in_training(model.training_data(), task, c.x);
      designs.candidates.push_back(std::move(c));
    }
    if (designs.candidates.empty())
      throw UsageError("suggest: no candidates for the requested task");
    if (designs.n_unevaluated() == 0)
      throw UsageError("suggest: every candidate is already observed");
    const Vector probs = prob_best(model, task, designs, config.n_samples,
                                   derive_seed(seed, "suggest"));
    Eigen::Index best = -1;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
      if (designs.candidates[static_cast<std::size_t>(i)].evaluated) continue;
      if (best < 0 || probs[i] > probs[best]) best = i;
    }
    std::string out;
    for (Eigen::Index j = 0; j < model.table().n_features(); ++j)
      out += model.table().features[static_cast<std::size_t>(j)] + ",";
    const Vector& x = designs.candidates[static_cast<std::size_t>(best)].x;
    for (Eigen::Index j = 0; j < x.size(); ++j)
      out += "x" + std::to_string(j + 1) + ",";
    out += "prob_best\n";
    for (const std::string& token : task) out += token + ",";
    for (Eigen::Index j = 0; j < x.size(); ++j)
      out += format_double(x[j]) + ",";
    out += format_double(probs[best]) + "\n";
    std::cout << out;
    return 0;
  }

  if (!args.lower || !args.upper)
    throw UsageError("suggest: pass --candidates or both --lower and --upper");
  if (!args.task)
    throw UsageError("suggest: continuous mode needs --task");
  ContinuousDesignSpace space;
  space.lower = parse_real_list(*args.lower, "--lower");
  space.upper = parse_real_list(*args.upper, "--upper");
  space.validate();
  EiOptions options;
  options.restarts = config.restarts;
  const EiResult result =
      maximize_ei(model, parse_task_key(*args.task), space, options,
                  derive_seed(seed, "suggest"));
  std::string out;
  for (Eigen::Index j = 0; j < result.x.size(); ++j)
    out += "x" + std::to_string(j + 1) + ",";
  out += "ei\n";
  for (Eigen::Index j = 0; j < result.x.size(); ++j)
    out += format_double(result.x[j]) + ",";
  out += format_double(result.value) + "\n";
  std::cout << out;
  return 0;
}

struct ObserveArgs {
  std::string model_path;
  std::string x;
  double y = 0.0;
  std::string task;
  std::optional<std::uint64_t> seed;
};

int run_observe(const ObserveArgs& args) {
  BegpModel model = load_model(args.model_path);
  if (!std::isfinite(args.y)) throw UsageError("observe: y must be finite");
  model.add_datum(parse_task_key(args.task), parse_real_list(args.x, "--x"),
                  args.y);
  const std::uint64_t base =
      args.seed ? *args.seed : model.settings().train.seed;
  model.refit(derive_seed(base, "observe", model.training_data().rows()));
  save_model(model, args.model_path);
  return 0;
}

struct BenchArgs {
  std::string config_path;
  std::string out_dir;
};

std::string regression_metrics_csv(const RegressionRecord& record) {
  std::string out = "method,seed,shot,metric,value\n";
  for (const RegressionCell& cell : record.cells) {
    const std::string prefix = cell.method + "," + std::to_string(cell.seed) +
                               "," + std::to_string(cell.shot) + ",";
    out += prefix + "rmse," + format_double(cell.rmse) + "\n";
    out += prefix + "mae," + format_double(cell.mae) + "\n";
    out += prefix + "mnlp," + format_double(cell.mnlp) + "\n";
  }
  return out;
}

std::string summary_csv(const std::vector<AggregateRow>& summary,
                        const std::string& x_name) {
  std::string out = "method,aggregate," + x_name + ",metric,value\n";
  for (const AggregateRow& row : summary) {
    const std::string suffix =
        std::to_string(row.x) + "," + row.metric + ",";
    out += row.method + ",p10," + suffix + format_double(row.p10) + "\n";
    out += row.method + ",median," + suffix + format_double(row.median) + "\n";
    out += row.method + ",p90," + suffix + format_double(row.p90) + "\n";
  }
  return out;
}

std::string bo_traces_csv(const BoRecord& record) {
  std::string out = record.relative
                        ? "method,seed,evaluation,y,best,rel_best\n"
                        : "method,seed,evaluation,y,best\n";
  for (const BoCell& cell : record.cells) {
    out += cell.method + "," + std::to_string(cell.seed) + "," +
           std::to_string(cell.evaluation) + "," + format_double(cell.y) +
           "," + format_double(cell.best);
    if (record.relative) out += "," + format_double(cell.rel_best);
    out += "\n";
  }
  return out;
}

struct ResolvedBench {
  RunConfig config;
  std::vector<std::uint64_t> seeds;
  ExperimentConfig experiment;
};

ResolvedBench resolve_bench(const BenchArgs& args) {
  ResolvedBench bench;
  bench.config = read_run_config(args.config_path);
  bench.seeds =
      bench.config.seeds ? *bench.config.seeds : entropy_seeds(10);
  bench.config.seeds = bench.seeds;  // recorded for exact reruns
  bench.experiment = to_experiment_config(bench.config, bench.seeds);
  std::filesystem::create_directories(args.out_dir);
  return bench;
}

int run_bench_regression(const BenchArgs& args) {
  const auto start = std::chrono::steady_clock::now();
  ResolvedBench bench = resolve_bench(args);
  const RegressionRecord record = run_regression_experiment(bench.experiment);
  write_text_file(args.out_dir + "/metrics.csv",
                  regression_metrics_csv(record));
  write_text_file(args.out_dir + "/summary.csv",
                  summary_csv(record.summary, "shot"));
  const double wall_ms =
      std::chrono::duration<double, std::milli>(
          std::chrono::steady_clock::now() - start)
          .count();
  write_text_file(
      args.out_dir + "/manifest.json",
      manifest_json(bench.config, bench.seeds, "bench-regression", wall_ms));
  return 0;
}

int run_bench_bo(const BenchArgs& args) {
  const auto start = std::chrono::steady_clock::now();
  ResolvedBench bench = resolve_bench(args);
  const BoRecord record = run_bo_experiment(bench.experiment);
  write_text_file(args.out_dir + "/traces.csv", bo_traces_csv(record));
  write_text_file(args.out_dir + "/summary.csv",
                  summary_csv(record.summary, "evaluation"));
  const double wall_ms =
      std::chrono::duration<double, std::milli>(
          std::chrono::steady_clock::now() - start)
          .count();
  write_text_file(args.out_dir + "/manifest.json",
                  manifest_json(bench.config, bench.seeds, "bench-bo",
                                wall_ms));
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Multi-task GP surrogates with latent task embeddings"};
  app.require_subcommand(1);

  FitArgs fit_args;
  auto* fit = app.add_subcommand("fit", "Train a model on a dataset CSV");
  fit->add_option("--data", fit_args.data_path, "dataset CSV")->required();
  fit->add_option("--config", fit_args.config_path, "run config JSON");
  fit->add_option("--out", fit_args.out_path, "model output path")
      ->required();
  fit->add_option("--seed", fit_args.seed, "training seed");

  PredictArgs predict_args;
  auto* predict =
      app.add_subcommand("predict", "Per-row predictive mean and variance");
  predict->add_option("--model", predict_args.model_path, "model file")
      ->required();
  predict->add_option("--query", predict_args.query_path, "query CSV")
      ->required();
  predict->add_option("--out", predict_args.out_path,
                      "output CSV (default stdout)");
  predict->add_option("--seed", predict_args.seed, "prediction seed");

  SuggestArgs suggest_args;
  auto* suggest = app.add_subcommand("suggest", "Print the next candidate");
  suggest->add_option("--model", suggest_args.model_path, "model file")
      ->required();
  suggest->add_option("--candidates", suggest_args.candidates_path,
                      "finite candidate CSV");
  suggest->add_option("--lower", suggest_args.lower, "box lower bounds");
  suggest->add_option("--upper", suggest_args.upper, "box upper bounds");
  suggest->add_option("--task", suggest_args.task, "task token(s)");
  suggest->add_option("--config", suggest_args.config_path,
                      "run config JSON");
  suggest->add_option("--seed", suggest_args.seed, "acquisition seed");

  ObserveArgs observe_args;
  auto* observe =
      app.add_subcommand("observe", "Append a datum and refit in place");
  observe->add_option("--model", observe_args.model_path, "model file")
      ->required();
  observe->add_option("--x", observe_args.x, "design, comma-separated")
      ->required();
  observe->add_option("--y", observe_args.y, "observed outcome")->required();
  observe->add_option("--task", observe_args.task, "task token(s)")
      ->required();
  observe->add_option("--seed", observe_args.seed, "refit seed");

  BenchArgs bench_regression_args;
  auto* bench_regression = app.add_subcommand(
      "bench-regression", "Shot-sweep accuracy benchmark");
  bench_regression
      ->add_option("--config", bench_regression_args.config_path,
                   "run config or manifest JSON")
      ->required();
  bench_regression
      ->add_option("--out", bench_regression_args.out_dir, "bundle directory")
      ->required();

  BenchArgs bench_bo_args;
  auto* bench_bo =
      app.add_subcommand("bench-bo", "Sequential optimization benchmark");
  bench_bo
      ->add_option("--config", bench_bo_args.config_path,
                   "run config or manifest JSON")
      ->required();
  bench_bo->add_option("--out", bench_bo_args.out_dir, "bundle directory")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*fit) return run_fit(fit_args);
    if (*predict) return run_predict(predict_args);
    if (*suggest) return run_suggest(suggest_args);
    if (*observe) return run_observe(observe_args);
    if (*bench_regression) return run_bench_regression(bench_regression_args);
    if (*bench_bo) return run_bench_bo(bench_bo_args);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const CsvError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ModelIoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace begp
