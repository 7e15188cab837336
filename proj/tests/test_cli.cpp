#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <initializer_list>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "begp/cli.hpp"
#include "begp/csv.hpp"
#include "begp/model_io.hpp"

using namespace begp;
namespace fs = std::filesystem;

namespace {

int run_cli(std::initializer_list<std::string> args,
            std::string* out = nullptr, std::string* err = nullptr) {
  std::vector<std::string> owned = {"begp"};
  owned.insert(owned.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  argv.reserve(owned.size());
  for (const std::string& arg : owned) argv.push_back(arg.c_str());

  std::ostringstream captured_out, captured_err;
  std::streambuf* old_out = std::cout.rdbuf(captured_out.rdbuf());
  std::streambuf* old_err = std::cerr.rdbuf(captured_err.rdbuf());
  const int code = cli_main(static_cast<int>(argv.size()), argv.data());
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  if (out) *out = captured_out.str();
  if (err) *err = captured_err.str();
  return code;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("begp_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Two related tasks sampled on a shared grid; small but learnable.
std::string training_csv() {
  std::string text = "task,x1,y\n";
  for (int i = 0; i < 12; ++i) {
    const double x = static_cast<double>(i) / 11.0;
    text += "a," + format_double(x) + "," +
            format_double(std::sin(3.0 * x)) + "\n";
    text += "b," + format_double(x) + "," +
            format_double(std::sin(3.0 * x) + 1.0) + "\n";
  }
  return text;
}

std::string small_config_json() {
  return R"({
    "model": {"latent_samples": 16},
    "train": {"iterations": 150, "warm_start_iterations": 40, "seed": 5},
    "acquisition": {"restarts": 4, "n_samples": 128}
  })";
}

std::vector<std::vector<std::string>> parse_lines(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line))
    if (!line.empty()) rows.push_back(split_csv_line(line));
  return rows;
}

struct FittedModel {
  fs::path dir;
  fs::path model;
  fs::path data;
  fs::path config;
};

FittedModel fit_small_model(const std::string& name) {
  FittedModel result;
  result.dir = scratch_dir(name);
  result.data = result.dir / "train.csv";
  result.config = result.dir / "config.json";
  result.model = result.dir / "model.json";
  write_text_file(result.data.string(), training_csv());
  write_text_file(result.config.string(), small_config_json());
  REQUIRE(run_cli({"fit", "--data", result.data.string(), "--config",
                   result.config.string(), "--out",
                   result.model.string()}) == 0);
  return result;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("fit then predict echoes the query and calibrates on seen rows") {
  const FittedModel fitted = fit_small_model("fit_predict");
  const fs::path out = fitted.dir / "pred.csv";

  // The training CSV doubles as the query; its y column must be tolerated.
  REQUIRE(run_cli({"predict", "--model", fitted.model.string(), "--query",
                   fitted.data.string(), "--out", out.string()}) == 0);

  const auto pred = parse_lines(read_text_file(out.string()));
  const auto truth = parse_lines(training_csv());
  REQUIRE(pred.size() == truth.size());
  CHECK(pred[0] == std::vector<std::string>{"task", "x1", "mean", "variance"});

  int covered = 0;
  for (std::size_t i = 1; i < pred.size(); ++i) {
    REQUIRE(pred[i].size() == 4);
    CHECK(pred[i][0] == truth[i][0]);
    CHECK(pred[i][1] == truth[i][1]);
    const double y = parse_real(truth[i][2], "truth");
    const double mean = parse_real(pred[i][2], "mean");
    const double variance = parse_real(pred[i][3], "variance");
    CHECK(variance > 0.0);
    if (std::abs(y - mean) <= 3.0 * std::sqrt(variance)) ++covered;
  }
  CHECK(covered >= static_cast<int>(0.95 * static_cast<double>(pred.size() - 1)));
}

TEST_CASE("predicting an unseen token matches the zero-shot library path") {
  const FittedModel fitted = fit_small_model("zero_shot");
  const fs::path query = fitted.dir / "query.csv";
  write_text_file(query.string(), "task,x1\nzeta,0.2\nzeta,0.8\n");
  const fs::path out = fitted.dir / "pred.csv";
  REQUIRE(run_cli({"predict", "--model", fitted.model.string(), "--query",
                   query.string(), "--seed", "77", "--out",
                   out.string()}) == 0);

  const BegpModel model = load_model(fitted.model.string());
  Matrix x_star(2, 1);
  x_star << 0.2, 0.8;
  const GaussianPredictive predictive = model.predict(
      {{"zeta"}, {"zeta"}}, x_star, model.settings().latent_samples, 77);
  const auto marginals = mnlp_ready_marginals(predictive);

  const auto pred = parse_lines(read_text_file(out.string()));
  REQUIRE(pred.size() == 3);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(pred[i + 1][2] == format_double(marginals[i].first));
    CHECK(pred[i + 1][3] == format_double(marginals[i].second));
  }
}

TEST_CASE("suggest skips observed candidates and observe retires them") {
  const FittedModel fitted = fit_small_model("suggest_observe");
  const fs::path candidates = fitted.dir / "candidates.csv";
  // Two rows sit in the training set already, two are fresh.
  write_text_file(candidates.string(),
                  "task,x1,y\n"
                  "a,0,0\n"
                  "a,1,0\n"
                  "a,0.31,0\n"
                  "a,0.62,0\n");

  std::string out;
  REQUIRE(run_cli({"suggest", "--model", fitted.model.string(),
                   "--candidates", candidates.string(), "--seed", "9"},
                  &out) == 0);
  auto lines = parse_lines(out);
  REQUIRE(lines.size() == 2);
  CHECK(lines[0] == std::vector<std::string>{"task", "x1", "prob_best"});
  CHECK(lines[1][0] == "a");
  const std::string first_pick = lines[1][1];
  CHECK((first_pick == "0.31" || first_pick == "0.62"));
  CHECK(parse_real(lines[1][2], "prob") > 0.0);

  // Observing the suggested point removes it from the next round.
  REQUIRE(run_cli({"observe", "--model", fitted.model.string(), "--x",
                   first_pick, "--y", "-0.4", "--task", "a"}) == 0);
  REQUIRE(run_cli({"suggest", "--model", fitted.model.string(),
                   "--candidates", candidates.string(), "--seed", "9"},
                  &out) == 0);
  lines = parse_lines(out);
  REQUIRE(lines.size() == 2);
  const std::string second_pick = lines[1][1];
  CHECK(second_pick != first_pick);
  CHECK((second_pick == "0.31" || second_pick == "0.62"));
  CHECK(parse_real(lines[1][2], "prob") == 1.0);

  // With every candidate observed the command refuses.
  REQUIRE(run_cli({"observe", "--model", fitted.model.string(), "--x",
                   second_pick, "--y", "-0.2", "--task", "a"}) == 0);
  std::string err;
  CHECK(run_cli({"suggest", "--model", fitted.model.string(), "--candidates",
                 candidates.string()},
                nullptr, &err) == 2);
  CHECK(err.find("already observed") != std::string::npos);
}

TEST_CASE("continuous suggest stays inside the box and reports its ei") {
  const FittedModel fitted = fit_small_model("suggest_box");
  std::string out;
  REQUIRE(run_cli({"suggest", "--model", fitted.model.string(), "--lower",
                   "0", "--upper", "1", "--task", "a", "--config",
                   fitted.config.string(), "--seed", "3"},
                  &out) == 0);
  const auto lines = parse_lines(out);
  REQUIRE(lines.size() == 2);
  CHECK(lines[0] == std::vector<std::string>{"x1", "ei"});
  const double x = parse_real(lines[1][0], "x");
  const double ei = parse_real(lines[1][1], "ei");
  CHECK(x >= 0.0);
  CHECK(x <= 1.0);
  CHECK(ei <= 0.0);
}

TEST_CASE("usage and data errors exit with code 2") {
  const fs::path dir = scratch_dir("exit_codes");
  const fs::path missing = dir / "missing.csv";
  const fs::path model = dir / "model.json";
  std::string err;

  CHECK(run_cli({"fit", "--out", model.string()}, nullptr, &err) == 2);
  CHECK(run_cli({"no-such-command"}, nullptr, &err) == 2);
  CHECK(run_cli({"fit", "--data", missing.string(), "--out", model.string()},
                nullptr, &err) == 2);

  const fs::path bad_config = dir / "bad.json";
  write_text_file(bad_config.string(), R"({"train": {"lr": 1}})");
  const fs::path data = dir / "train.csv";
  write_text_file(data.string(), training_csv());
  CHECK(run_cli({"fit", "--data", data.string(), "--config",
                 bad_config.string(), "--out", model.string()},
                nullptr, &err) == 2);
  CHECK(err.find("unknown key") != std::string::npos);

  const fs::path corrupt = dir / "corrupt.json";
  write_text_file(corrupt.string(), "{ nope");
  CHECK(run_cli({"predict", "--model", corrupt.string(), "--query",
                 data.string()},
                nullptr, &err) == 2);

  // A real model but contradictory or incomplete suggest arguments.
  const FittedModel fitted = fit_small_model("exit_codes_model");
  CHECK(run_cli({"suggest", "--model", fitted.model.string()}, nullptr,
                &err) == 2);
  CHECK(run_cli({"suggest", "--model", fitted.model.string(), "--lower",
                 "0", "--upper", "1"},
                nullptr, &err) == 2);
  CHECK(run_cli({"suggest", "--model", fitted.model.string(), "--candidates",
                 data.string(), "--lower", "0"},
                nullptr, &err) == 2);
  CHECK(run_cli({"observe", "--model", fitted.model.string(), "--x", "0.5",
                 "--y", "nan", "--task", "a"},
                nullptr, &err) == 2);

  std::string help;
  CHECK(run_cli({"--help"}, &help) == 0);
  CHECK(help.find("fit") != std::string::npos);
}

TEST_CASE("bench-regression writes a rerunnable bundle") {
  const fs::path dir = scratch_dir("bench_regression");
  const fs::path config = dir / "config.json";
  write_text_file(config.string(), R"({
    "model": {"latent_samples": 8},
    "train": {"iterations": 40, "warm_start_iterations": 15},
    "acquisition": {"restarts": 3, "n_samples": 64},
    "experiment": {"family": "toy", "seeds": [0, 1], "shot_grid": [0, 1],
                   "n_legacy_tasks": 2, "points_per_task": 3,
                   "current_task_points": 6, "bo_budget": 2}
  })");

  const fs::path first = dir / "first";
  REQUIRE(run_cli({"bench-regression", "--config", config.string(), "--out",
                   first.string()}) == 0);
  const std::string metrics = read_text_file((first / "metrics.csv").string());
  const std::string summary = read_text_file((first / "summary.csv").string());
  const std::string manifest =
      read_text_file((first / "manifest.json").string());

  const auto metric_rows = parse_lines(metrics);
  CHECK(metric_rows[0] ==
        std::vector<std::string>{"method", "seed", "shot", "metric", "value"});
  REQUIRE(metric_rows.size() == 1 + 3 * 2 * 2 * 3);
  std::set<std::string> cells;
  for (std::size_t i = 1; i < metric_rows.size(); ++i) {
    REQUIRE(metric_rows[i].size() == 5);
    cells.insert(metric_rows[i][0] + "/" + metric_rows[i][1] + "/" +
                 metric_rows[i][2] + "/" + metric_rows[i][3]);
    parse_real(metric_rows[i][4], "metric value");
  }
  CHECK(cells.size() == metric_rows.size() - 1);

  const auto summary_rows = parse_lines(summary);
  CHECK(summary_rows[0] ==
        std::vector<std::string>{"method", "aggregate", "shot", "metric",
                                 "value"});
  REQUIRE(summary_rows.size() == 1 + 3 * 3 * 2 * 3);

  CHECK(manifest.find("\"command\": \"bench-regression\"") !=
        std::string::npos);
  CHECK(manifest.find("\"seeds\"") != std::string::npos);

  // Rerunning from the manifest reproduces the tables byte for byte.
  const fs::path second = dir / "second";
  REQUIRE(run_cli({"bench-regression", "--config",
                   (first / "manifest.json").string(), "--out",
                   second.string()}) == 0);
  CHECK(read_text_file((second / "metrics.csv").string()) == metrics);
  CHECK(read_text_file((second / "summary.csv").string()) == summary);
}

TEST_CASE("bench-bo on a dataset exhausts the candidate pool exactly once") {
  const fs::path dir = scratch_dir("bench_bo");
  const fs::path dataset = dir / "data.csv";
  std::string csv = "task,x1,y\n";
  const double ys[] = {0.9, 0.2, 0.7, -0.5, 0.4, 0.05};
  for (int i = 0; i < 6; ++i)
    csv += "a," + format_double(0.1 * (i + 1)) + "," + format_double(ys[i]) +
           "\n";
  for (int i = 0; i < 4; ++i)
    csv += "b," + format_double(0.2 * (i + 1)) + "," +
           format_double(1.0 + 0.1 * i) + "\n";
  write_text_file(dataset.string(), csv);

  const fs::path config = dir / "config.json";
  write_text_file(config.string(), std::string(R"({
    "model": {"latent_samples": 8},
    "train": {"iterations": 40, "warm_start_iterations": 15},
    "acquisition": {"restarts": 3, "n_samples": 64},
    "experiment": {"dataset": ")") + dataset.string() + R"(",
                   "current_task": "a", "seeds": [0],
                   "methods": ["begp", "gp"], "bo_budget": 6}
  })");

  const fs::path out = dir / "out";
  REQUIRE(run_cli({"bench-bo", "--config", config.string(), "--out",
                   out.string()}) == 0);

  const auto traces = parse_lines(read_text_file((out / "traces.csv").string()));
  CHECK(traces[0] ==
        std::vector<std::string>{"method", "seed", "evaluation", "y", "best",
                                 "rel_best"});
  REQUIRE(traces.size() == 1 + 2 * 6);
  for (const std::string& method : {"begp", "gp"}) {
    std::set<std::string> seen_y;
    double final_rel = 1.0;
    int evaluations = 0;
    for (std::size_t i = 1; i < traces.size(); ++i) {
      if (traces[i][0] != method) continue;
      ++evaluations;
      CHECK(traces[i][2] == std::to_string(evaluations));
      seen_y.insert(traces[i][3]);
      final_rel = parse_real(traces[i][5], "rel_best");
      CHECK(final_rel >= 0.0);
    }
    CHECK(evaluations == 6);
    CHECK(seen_y.size() == 6);  // every stored outcome revealed exactly once
    CHECK(final_rel == 0.0);    // exhausting the pool reaches the task best
  }

  const auto summary = parse_lines(read_text_file((out / "summary.csv").string()));
  CHECK(summary[0] ==
        std::vector<std::string>{"method", "aggregate", "evaluation", "metric",
                                 "value"});
  for (std::size_t i = 1; i < summary.size(); ++i)
    CHECK(summary[i][3] == "rel_best");
}

}  // TEST_SUITE
