#include "begp/synthetic.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace begp {

double toy_eta(double x, const Vector& theta) {
  if (theta.size() != 2)
    throw std::invalid_argument("toy_eta: theta must have two entries");
  const double z = theta[0] + 4.0 * x - 4.0;
  return 0.1 * z * z * z * z - z * z + (2.0 + theta[1]) * std::sin(2.0 * z);
}

double forrester(double x) {
  const double a = 6.0 * x - 2.0;
  return a * a * std::sin(12.0 * x - 4.0);
}

double forrester_family(double x, const Vector& theta) {
  if (theta.size() != 3)
    throw std::invalid_argument("forrester_family: theta must have three entries");
  return theta[0] * forrester(x) + theta[1] * (x - 0.5) + theta[2];
}

double SyntheticTask::operator()(double x) const {
  return family == Family::toy ? toy_eta(x, theta)
                               : forrester_family(x, theta);
}

std::vector<SyntheticTask> sample_task_family(Family family, int n_tasks,
                                              std::uint64_t seed) {
  if (n_tasks < 0)
    throw std::invalid_argument("sample_task_family: negative task count");
  std::vector<SyntheticTask> tasks;
  tasks.reserve(static_cast<std::size_t>(n_tasks));
  RngStream rng(derive_seed(seed, "task-family"));
  for (int t = 0; t < n_tasks; ++t) {
    SyntheticTask task;
    task.family = family;
    if (family == Family::toy) {
      task.theta = Vector(2);
      task.theta[0] = rng.uniform();
      task.theta[1] = rng.uniform();
    } else {
      task.theta = Vector(3);
      if (t == 0) {
        // The low-fidelity variant anchors every Forrester legacy set.
        task.theta << 0.5, 10.0, -5.0;
      } else {
        task.theta[0] = rng.uniform();
        task.theta[1] = rng.uniform(0.0, 10.0);
        task.theta[2] = rng.uniform(-5.0, 5.0);
      }
    }
    tasks.push_back(std::move(task));
  }
  return tasks;
}

SyntheticTask high_fidelity_forrester() {
  SyntheticTask task;
  task.family = Family::forrester;
  task.theta = Vector(3);
  task.theta << 1.0, 0.0, 0.0;
  return task;
}

SyntheticTask sample_current_task(Family family, std::uint64_t seed) {
  if (family == Family::forrester) return high_fidelity_forrester();
  SyntheticTask task;
  task.family = Family::toy;
  task.theta = Vector(2);
  RngStream rng(derive_seed(seed, "current-task"));
  task.theta[0] = rng.uniform();
  task.theta[1] = rng.uniform();
  return task;
}

MultiTaskData build_legacy_dataset(const std::vector<SyntheticTask>& tasks,
                                   int points_per_task, std::uint64_t seed) {
  if (points_per_task < 1)
    throw std::invalid_argument("build_legacy_dataset: need >= 1 point per task");
  MultiTaskData data;
  data.feature_names = {"task"};
  const Eigen::Index n =
      static_cast<Eigen::Index>(tasks.size()) * points_per_task;
  data.x = Matrix(n, 1);
  data.y = Vector(n);
  data.tasks.reserve(static_cast<std::size_t>(n));
  RngStream rng(derive_seed(seed, "legacy-points"));
  Eigen::Index row = 0;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const std::string token = "task_" + std::to_string(t);
    for (int p = 0; p < points_per_task; ++p, ++row) {
      const double x = rng.uniform();
      data.x(row, 0) = x;
      data.y[row] = tasks[t](x);
      data.tasks.push_back({token});
    }
  }
  return data;
}

double grid_min(const std::function<double(double)>& f, double lo, double hi,
                int n, double* argmin) {
  if (n < 2) throw std::invalid_argument("grid_min: need >= 2 grid points");
  double best = std::numeric_limits<double>::infinity();
  double best_x = lo;
  for (int i = 0; i < n; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
    const double v = f(x);
    if (v < best) {
      best = v;
      best_x = x;
    }
  }
  if (argmin) *argmin = best_x;
  return best;
}

}  // namespace begp
