#pragma once

#include "begp/begp_model.hpp"
#include "begp/surrogate.hpp"

namespace begp {

// Single-task GP baseline: hyperparameters by maximum marginal likelihood
// with random restarts.  Task keys on the data are carried through but do not
// influence the fit; the baseline sees only the real inputs of whatever rows
// it is given.
class BaselineGp final : public Surrogate {
 public:
  struct Settings {
    int input_dim = 1;
    int restarts = 8;
    int iterations = 500;
    double step_size = 0.02;
    double final_step_fraction = 0.1;  // step decays linearly to this
  };

  BaselineGp() = default;
  explicit BaselineGp(Settings settings);

  void fit(const MultiTaskData& data, std::uint64_t seed) override;
  void refit(std::uint64_t seed) override;
  void add_datum(const TaskKey& task, const Vector& x_row,
                 double y_value) override;

  [[nodiscard]] GaussianPredictive predict_joint(
      const TaskKey& task, const Matrix& x_r,
      std::uint64_t seed) const override;
  [[nodiscard]] Vector sample_outputs(const TaskKey& task, const Matrix& x_r,
                                      RngStream& rng) const override;
  [[nodiscard]] std::unique_ptr<FrozenPredictor> freeze(
      const TaskKey& task, std::uint64_t seed) const override;
  [[nodiscard]] std::optional<double> min_observed_y(
      const TaskKey& task) const override;
  [[nodiscard]] const MultiTaskData& training_data() const override {
    return data_;
  }

  [[nodiscard]] const GpHyperparams& hyperparams() const { return params_; }
  [[nodiscard]] const OutputScaling& scaling() const { return scaling_; }

 private:
  [[nodiscard]] GpHyperparams default_init(Eigen::Index dim) const;
  [[nodiscard]] GpData scaled_data() const;

  Settings settings_;
  MultiTaskData data_;
  GpHyperparams params_;
  OutputScaling scaling_;
  std::uint64_t fit_seed_ = 0;
  bool fitted_ = false;
};

}  // namespace begp
