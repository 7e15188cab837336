#include "begp/surrogate.hpp"

#include <cmath>
#include <stdexcept>

namespace begp {

void MultiTaskData::validate() const {
  if (static_cast<Eigen::Index>(tasks.size()) != x.rows() ||
      x.rows() != y.size())
    throw std::invalid_argument("multi-task data: row counts disagree");
  if (!x.allFinite() || !y.allFinite())
    throw std::invalid_argument("multi-task data: values must be finite");
  for (const TaskKey& key : tasks) {
    if (key.size() != feature_names.size())
      throw std::invalid_argument(
          "multi-task data: task key width disagrees with feature count");
    for (const std::string& token : key)
      if (token.empty())
        throw std::invalid_argument("multi-task data: empty task token");
  }
}

void MultiTaskData::append(const TaskKey& task, const Vector& x_row,
                           double y_value) {
  if (task.size() != feature_names.size())
    throw std::invalid_argument("append: task key width mismatch");
  if (rows() > 0 && x_row.size() != x.cols())
    throw std::invalid_argument("append: input dimension mismatch");
  if (!std::isfinite(y_value) || !x_row.allFinite())
    throw std::invalid_argument("append: values must be finite");
  const Eigen::Index n = rows();
  x.conservativeResize(n + 1, n == 0 ? x_row.size() : x.cols());
  x.row(n) = x_row.transpose();
  y.conservativeResize(n + 1);
  y[n] = y_value;
  tasks.push_back(task);
}

void TrainConfig::validate() const {
  if (iterations < 0 || warm_start_iterations < 0)
    throw std::invalid_argument("train config: negative iteration count");
  if (!(step_size > 0.0) || !std::isfinite(step_size))
    throw std::invalid_argument("train config: step size must be positive");
  if (elbo_samples_per_step < 1)
    throw std::invalid_argument("train config: need >= 1 ELBO sample per step");
}

}  // namespace begp
