#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "begp/embedding.hpp"
#include "begp/gp.hpp"
#include "begp/rng.hpp"

namespace begp {

// Rows spanning several tasks: per-row task key, real inputs, outputs in
// original units.
struct MultiTaskData {
  std::vector<std::string> feature_names;
  std::vector<TaskKey> tasks;
  Matrix x;  // n x d_r
  Vector y;  // n

  [[nodiscard]] Eigen::Index rows() const { return x.rows(); }
  void validate() const;
  void append(const TaskKey& task, const Vector& x_row, double y_value);
};

struct TrainConfig {
  int iterations = 2000;
  double step_size = 0.01;
  int elbo_samples_per_step = 1;
  std::uint64_t seed = 0;
  bool warm_start = false;
  int warm_start_iterations = 500;

  void validate() const;
};

// Snapshot of a posterior with the latent uncertainty frozen, so repeated
// mean/variance queries during acquisition ascent share one draw set.
class FrozenPredictor {
 public:
  virtual ~FrozenPredictor() = default;
  virtual void mean_var(const Vector& x_r, double& mean,
                        double& variance) const = 0;
};

// What the acquisition functions and the BO loop need from a model.
class Surrogate {
 public:
  virtual ~Surrogate() = default;

  virtual void fit(const MultiTaskData& data, std::uint64_t seed) = 0;
  virtual void refit(std::uint64_t seed) = 0;
  virtual void add_datum(const TaskKey& task, const Vector& x_row,
                         double y_value) = 0;

  // Joint predictive over rows of x_r for one task, original output units.
  [[nodiscard]] virtual GaussianPredictive predict_joint(
      const TaskKey& task, const Matrix& x_r, std::uint64_t seed) const = 0;

  // One joint draw of outputs at x_r; consumes the stream deterministically.
  [[nodiscard]] virtual Vector sample_outputs(const TaskKey& task,
                                              const Matrix& x_r,
                                              RngStream& rng) const = 0;

  [[nodiscard]] virtual std::unique_ptr<FrozenPredictor> freeze(
      const TaskKey& task, std::uint64_t seed) const = 0;

  [[nodiscard]] virtual std::optional<double> min_observed_y(
      const TaskKey& task) const = 0;

  [[nodiscard]] virtual const MultiTaskData& training_data() const = 0;
};

}  // namespace begp
