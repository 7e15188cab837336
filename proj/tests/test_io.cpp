#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>

#include "begp/csv.hpp"
#include "begp/model_io.hpp"
#include "begp/run_config.hpp"

using namespace begp;

namespace {

bool same_bits(double a, double b) {
  std::uint64_t ua = 0, ub = 0;
  std::memcpy(&ua, &a, sizeof a);
  std::memcpy(&ub, &b, sizeof b);
  return ua == ub;
}

MultiTaskData small_data() {
  MultiTaskData data;
  data.feature_names = {"task"};
  data.x = Matrix(6, 1);
  data.y = Vector(6);
  for (int i = 0; i < 6; ++i) {
    data.x(i, 0) = static_cast<double>(i) / 5.0;
    const bool first = i < 3;
    data.y[i] = first ? std::sin(3.0 * data.x(i, 0))
                      : std::sin(3.0 * data.x(i, 0)) + 1.0;
    data.tasks.push_back({first ? "alpha" : "beta"});
  }
  return data;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("format_double survives a parse round trip bit for bit") {
  const double cases[] = {0.0,
                          -0.0,
                          1.0,
                          -1.0,
                          0.1,
                          1.0 / 3.0,
                          0.30000000000000004,
                          6.02214076e23,
                          -2.2250738585072014e-308,
                          1e-300,
                          1.7976931348623157e308,
                          3.141592653589793};
  for (const double value : cases) {
    const double back = parse_real(format_double(value), "case");
    CHECK(same_bits(value, back));
  }
  RngStream rng(99);
  for (int i = 0; i < 2000; ++i) {
    const double value = std::exp(rng.uniform(-40.0, 40.0)) *
                         (rng.uniform() < 0.5 ? -1.0 : 1.0);
    CHECK(same_bits(value, parse_real(format_double(value), "case")));
  }
}

TEST_CASE("parse_real rejects anything but a full finite number") {
  CHECK(parse_real("1.5", "w") == 1.5);
  CHECK(parse_real("1e2", "w") == 100.0);
  CHECK(parse_real("-0.25", "w") == -0.25);
  CHECK_THROWS_AS(parse_real("", "w"), CsvError);
  CHECK_THROWS_AS(parse_real("1.5x", "w"), CsvError);
  CHECK_THROWS_AS(parse_real("x1.5", "w"), CsvError);
  CHECK_THROWS_AS(parse_real("nan", "w"), CsvError);
  CHECK_THROWS_AS(parse_real("inf", "w"), CsvError);
  CHECK_THROWS_AS(parse_real("1.5 2", "w"), CsvError);
  CHECK_THROWS_WITH(parse_real("oops", "dataset row 4"),
                    doctest::Contains("dataset row 4"));
}

TEST_CASE("split_csv_line trims cells and keeps empties") {
  CHECK(split_csv_line("a, b ,c") ==
        std::vector<std::string>{"a", "b", "c"});
  CHECK(split_csv_line("a,,b") == std::vector<std::string>{"a", "", "b"});
  CHECK(split_csv_line("solo") == std::vector<std::string>{"solo"});
  CHECK(split_csv_line("x,y\r") == std::vector<std::string>{"x", "y"});
  CHECK(split_csv_line("") == std::vector<std::string>{""});
}

TEST_CASE("parse_dataset_csv reads a well-formed file") {
  const std::string text =
      "task,x1,y\n"
      "a,0.5,1.25\n"
      "\n"
      "b,0.75,-2\n";
  const MultiTaskData data = parse_dataset_csv(text);
  REQUIRE(data.rows() == 2);
  CHECK(data.feature_names == std::vector<std::string>{"task"});
  CHECK(data.tasks[0] == TaskKey{"a"});
  CHECK(data.tasks[1] == TaskKey{"b"});
  CHECK(data.x(0, 0) == 0.5);
  CHECK(data.x(1, 0) == 0.75);
  CHECK(data.y[0] == 1.25);
  CHECK(data.y[1] == -2.0);
}

TEST_CASE("parse_dataset_csv handles several task and x columns") {
  const std::string text =
      "task_fleet,task_engine,x1,x2,y\n"
      "f1,e1,0.1,0.2,3\n"
      "f2,e2,0.3,0.4,4\n";
  const MultiTaskData data = parse_dataset_csv(text);
  REQUIRE(data.rows() == 2);
  CHECK(data.feature_names ==
        std::vector<std::string>{"task_fleet", "task_engine"});
  CHECK(data.x.cols() == 2);
  CHECK(data.tasks[0] == TaskKey{"f1", "e1"});
  CHECK(data.x(1, 1) == 0.4);
}

TEST_CASE("parse_dataset_csv rejects malformed input with row numbers") {
  CHECK_THROWS_AS(parse_dataset_csv(""), CsvError);
  CHECK_THROWS_AS(parse_dataset_csv("task,x1,y\n"), CsvError);
  CHECK_THROWS_AS(parse_dataset_csv("task,x1,z\na,1,2\n"), CsvError);
  CHECK_THROWS_AS(parse_dataset_csv("x1,x2,y\n1,2,3\n"), CsvError);
  CHECK_THROWS_AS(parse_dataset_csv("task,y\na,1\n"), CsvError);
  CHECK_THROWS_AS(parse_dataset_csv("task,x1,y\na,1\n"), CsvError);
  CHECK_THROWS_AS(parse_dataset_csv("task,x1,y\na,1,nan\n"), CsvError);
  CHECK_THROWS_AS(parse_dataset_csv("task,x1,y\na,inf,1\n"), CsvError);
  CHECK_THROWS_AS(parse_dataset_csv("task,x1,y\n,1,2\n"), CsvError);
  CHECK_THROWS_WITH(parse_dataset_csv("task,x1,y\na,1,2\nb,bad,3\n"),
                    doctest::Contains("dataset row 3"));
}

TEST_CASE("dataset_to_csv round trips awkward doubles exactly") {
  MultiTaskData data;
  data.feature_names = {"task"};
  data.x = Matrix(3, 2);
  data.x << 1.0 / 3.0, 1e-17, -0.1, 2.5e200, 0.0, -7.25;
  data.y = Vector(3);
  data.y << 0.30000000000000004, -1e-300, 42.0;
  data.tasks = {{"a"}, {"a"}, {"b"}};

  const MultiTaskData back = parse_dataset_csv(dataset_to_csv(data));
  REQUIRE(back.rows() == 3);
  CHECK(back.feature_names == data.feature_names);
  CHECK(back.tasks == data.tasks);
  for (Eigen::Index i = 0; i < 3; ++i) {
    CHECK(same_bits(back.y[i], data.y[i]));
    for (Eigen::Index j = 0; j < 2; ++j)
      CHECK(same_bits(back.x(i, j), data.x(i, j)));
  }
}

TEST_CASE("file helpers round trip text and report missing paths") {
  const auto path = temp_file("begp_io_text.txt");
  write_text_file(path.string(), "line1\nline2\n");
  CHECK(read_text_file(path.string()) == "line1\nline2\n");
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_text_file(path.string()), CsvError);
}

TEST_CASE("an empty config document yields the documented defaults") {
  const RunConfig config = parse_run_config("{}");
  CHECK(config.latent_dim == 2);
  CHECK(config.latent_samples == 64);
  CHECK(config.mode == "bayesian");
  CHECK(config.iterations == 2000);
  CHECK(config.step_size == 0.01);
  CHECK(config.warm_start_iterations == 500);
  CHECK_FALSE(config.train_seed.has_value());
  CHECK(config.acquisition_kind == "ei");
  CHECK(config.restarts == 10);
  CHECK(config.n_samples == 256);
  CHECK_FALSE(config.family.has_value());
  CHECK_FALSE(config.dataset.has_value());
  CHECK_FALSE(config.seeds.has_value());
  CHECK(config.shot_grid == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
  CHECK(config.bo_budget == 5);
  CHECK(config.n_legacy_tasks == 5);
  CHECK(config.points_per_task == 5);
  CHECK(config.current_task_points == 15);
  CHECK(config.methods == std::vector<std::string>{"begp", "egp", "gp"});
}

TEST_CASE("config fields are read from their sections") {
  const std::string text = R"({
    "model": {"d_z": 3, "latent_samples": 32, "mode": "deterministic"},
    "train": {"iterations": 100, "step_size": 0.05,
              "warm_start_iterations": 10, "seed": 7},
    "acquisition": {"kind": "prob_best", "restarts": 4, "n_samples": 128},
    "experiment": {"family": "forrester", "seeds": [1, 2],
                   "shot_grid": [0, 1], "bo_budget": 3,
                   "n_legacy_tasks": 4, "points_per_task": 6,
                   "current_task_points": 12, "methods": ["begp", "gp"]}
  })";
  const RunConfig config = parse_run_config(text);
  CHECK(config.latent_dim == 3);
  CHECK(config.latent_samples == 32);
  CHECK(config.mode == "deterministic");
  CHECK(config.iterations == 100);
  CHECK(config.step_size == 0.05);
  CHECK(config.warm_start_iterations == 10);
  CHECK(config.train_seed == std::uint64_t{7});
  CHECK(config.acquisition_kind == "prob_best");
  CHECK(config.restarts == 4);
  CHECK(config.n_samples == 128);
  CHECK(config.family == std::string("forrester"));
  CHECK(config.seeds == std::vector<std::uint64_t>{1, 2});
  CHECK(config.shot_grid == std::vector<int>{0, 1});
  CHECK(config.bo_budget == 3);
  CHECK(config.methods == std::vector<std::string>{"begp", "gp"});

  const BegpModel::Settings settings = model_settings(config);
  CHECK(settings.latent_dim == 3);
  CHECK(settings.latent_samples == 32);
  CHECK(settings.mode == EmbeddingMode::deterministic);
  CHECK(settings.train.iterations == 100);
  CHECK(settings.train.step_size == 0.05);
  CHECK(settings.train.warm_start_iterations == 10);
}

TEST_CASE("unknown keys are rejected section by section") {
  CHECK_THROWS_AS(parse_run_config(R"({"surprise": 1})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"model": {"dz": 2}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"train": {"lr": 0.1}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"acquisition": {"beta": 1}})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"experiment": {"budget": 5}})"),
                  ConfigError);
  CHECK_THROWS_WITH(parse_run_config(R"({"model": {"dz": 2}})"),
                    doctest::Contains("dz"));
}

TEST_CASE("config validation catches bad values") {
  CHECK_THROWS_AS(parse_run_config("not json"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("[1,2]"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"model": {"d_z": "two"}})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"model": {"mode": "magic"}})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"train": {"step_size": 0}})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"acquisition": {"kind": "ucb"}})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"experiment": {"seeds": []}})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"experiment": {"methods": ["x"]}})"),
                  ConfigError);
  CHECK_THROWS_AS(
      parse_run_config(
          R"({"experiment": {"family": "toy", "dataset": "d.csv"}})"),
      ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"experiment": {"family": "weird"}})"),
                  ConfigError);
}

TEST_CASE("the resolved echo of a config parses back to the same values") {
  RunConfig config;
  config.latent_dim = 4;
  config.train_seed = 11;
  config.family = "toy";
  config.seeds = std::vector<std::uint64_t>{3, 4, 5};
  config.methods = {"begp"};
  const RunConfig back = parse_run_config(run_config_to_json(config));
  CHECK(back.latent_dim == 4);
  CHECK(back.train_seed == std::uint64_t{11});
  CHECK(back.family == std::string("toy"));
  CHECK(back.seeds == std::vector<std::uint64_t>{3, 4, 5});
  CHECK(back.methods == std::vector<std::string>{"begp"});
  CHECK(back.iterations == config.iterations);
  CHECK(back.shot_grid == config.shot_grid);
}

TEST_CASE("a manifest is accepted wherever a config is") {
  RunConfig config;
  config.bo_budget = 7;
  config.family = "forrester";
  const std::string manifest =
      manifest_json(config, {5, 6}, "bench-bo", 123.0);
  const RunConfig back = parse_run_config(manifest);
  CHECK(back.bo_budget == 7);
  CHECK(back.family == std::string("forrester"));

  CHECK(manifest.find("\"format_version\": 1") != std::string::npos);
  CHECK(manifest.find(kCodeVersion) != std::string::npos);
  CHECK(manifest.find("\"command\": \"bench-bo\"") != std::string::npos);
}

TEST_CASE("to_experiment_config maps fields and substitutes seeds") {
  RunConfig config;
  config.family = "forrester";
  config.restarts = 3;
  config.n_samples = 99;
  config.methods = {"begp", "gp"};
  const ExperimentConfig experiment =
      to_experiment_config(config, {8, 9, 10});
  CHECK(experiment.family == Family::forrester);
  CHECK_FALSE(experiment.use_dataset);
  CHECK(experiment.seeds == std::vector<std::uint64_t>{8, 9, 10});
  CHECK(experiment.ei.restarts == 3);
  CHECK(experiment.prob_best_samples == 99);
  CHECK(experiment.methods == std::vector<std::string>{"begp", "gp"});

  RunConfig with_dataset;
  const auto path = temp_file("begp_io_dataset.csv");
  write_text_file(path.string(), "task,x1,y\na,0.5,1\na,0.6,2\nb,0.7,3\n");
  with_dataset.dataset = path.string();
  const ExperimentConfig from_file = to_experiment_config(with_dataset, {1});
  CHECK(from_file.use_dataset);
  CHECK(from_file.dataset.rows() == 3);
  std::filesystem::remove(path);
}

TEST_CASE("a fitted model reloads bit for bit") {
  BegpModel::Settings settings;
  settings.latent_dim = 2;
  settings.latent_samples = 8;
  settings.train.iterations = 30;
  BegpModel model(settings);
  model.fit(small_data(), 5);

  const auto path = temp_file("begp_io_model.json");
  save_model(model, path.string());
  const BegpModel loaded = load_model(path.string());
  std::filesystem::remove(path);

  CHECK(loaded.fitted());
  CHECK(loaded.settings().latent_dim == 2);
  CHECK(loaded.settings().train.seed == model.settings().train.seed);
  CHECK(loaded.table().tokens == model.table().tokens);
  CHECK(loaded.gp().kernel.signal_variance ==
        model.gp().kernel.signal_variance);
  CHECK(loaded.gp().kernel.lengthscales == model.gp().kernel.lengthscales);
  CHECK(loaded.scaling().center == model.scaling().center);
  CHECK(loaded.scaling().scale == model.scaling().scale);
  CHECK(loaded.training_data().x == model.training_data().x);
  CHECK(loaded.training_data().y == model.training_data().y);

  Matrix x_star(3, 1);
  x_star << 0.1, 0.45, 0.9;
  const GaussianPredictive a = model.predict_joint({"beta"}, x_star, 17);
  const GaussianPredictive b = loaded.predict_joint({"beta"}, x_star, 17);
  CHECK(a.mean == b.mean);
  CHECK(a.covariance == b.covariance);

  // Unseen tokens exercise the prior path through the reloaded table.
  const GaussianPredictive c = model.predict_joint({"new_one"}, x_star, 23);
  const GaussianPredictive d = loaded.predict_joint({"new_one"}, x_star, 23);
  CHECK(c.mean == d.mean);
  CHECK(c.covariance == d.covariance);
}

TEST_CASE("the model json form is a fixed point of save and load") {
  BegpModel::Settings settings;
  settings.latent_samples = 8;
  settings.train.iterations = 20;
  BegpModel model(settings);
  model.fit(small_data(), 2);

  const std::string first = model_to_json(model);
  const std::string second = model_to_json(model_from_json(first));
  CHECK(first == second);
}

TEST_CASE("model loading rejects corrupted documents") {
  CHECK_THROWS_AS(model_from_json("{ not json"), ModelIoError);
  CHECK_THROWS_AS(model_from_json("{}"), ModelIoError);
  CHECK_THROWS_AS(model_from_json(R"({"format_version": 99})"), ModelIoError);

  BegpModel::Settings settings;
  settings.latent_samples = 8;
  settings.train.iterations = 10;
  BegpModel model(settings);
  model.fit(small_data(), 2);
  std::string text = model_to_json(model);
  const std::size_t where = text.find("\"gp\"");
  REQUIRE(where != std::string::npos);
  text.replace(where, 4, "\"xx\"");
  CHECK_THROWS_AS(model_from_json(text), ModelIoError);
}

}  // TEST_SUITE
