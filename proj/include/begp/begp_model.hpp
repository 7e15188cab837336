#pragma once

#include <functional>
#include <utility>

#include "begp/surrogate.hpp"

namespace begp {

enum class EmbeddingMode {
  bayesian,       // variational posterior over latents
  deterministic,  // point-estimate latents (EGP ablation)
};

// Variance assigned to latents in deterministic mode; effectively a delta.
constexpr double kDeterministicLatentVariance = 1e-12;

struct OutputScaling {
  double center = 0.0;
  double scale = 1.0;

  [[nodiscard]] double to_internal(double y) const {
    return (y - center) / scale;
  }
  [[nodiscard]] double to_original(double y) const {
    return y * scale + center;
  }
};

// Latent draw: one matrix per general feature, rows aligned with the task
// table's token order.
using LatentDraw = std::vector<Matrix>;

// Standard-normal noise with the same shapes as a LatentDraw.
struct EpsDraw {
  std::vector<Matrix> eps;
};

// Full input matrix: row i = [x_r(i, :), z(feature latents for row i's key)].
Matrix assemble_inputs(const Matrix& x_r,
                       const std::vector<std::vector<int>>& row_token_idx,
                       const LatentDraw& z);

// Per-row latent coordinates supplied directly.
Matrix assemble_inputs(const Matrix& x_r, const Matrix& z_rows);

// Gaussian moment-matching of a set of Gaussian mixture components.
GaussianPredictive moment_match(const std::vector<GaussianPredictive>& parts);

// Per-point (mean, variance) pairs for metric evaluation: applies the output
// scaling (identity by default, for predictives already in original units)
// and floors variances at 1e-12.
std::vector<std::pair<double, double>> mnlp_ready_marginals(
    const GaussianPredictive& predictive, const OutputScaling& scaling = {});

// Multi-task GP with latent task embeddings trained by reparameterized
// stochastic ELBO ascent.
class BegpModel final : public Surrogate {
 public:
  struct Settings {
    int latent_dim = 2;
    int latent_samples = 64;
    EmbeddingMode mode = EmbeddingMode::bayesian;
    TrainConfig train;
  };

  // Everything needed to save and restore a fitted model.
  struct State {
    Settings settings;
    TaskTable table;
    LatentPosterior latents;
    GpHyperparams gp;
    OutputScaling scaling;
    MultiTaskData data;
    bool fitted = false;
  };

  BegpModel() = default;
  explicit BegpModel(Settings settings) : settings_(std::move(settings)) {}

  void fit(const MultiTaskData& data, std::uint64_t seed) override;
  void refit(std::uint64_t seed) override;
  void add_datum(const TaskKey& task, const Vector& x_row,
                 double y_value) override;

  // Moment-matched Gaussian approximation of the mixture over latent draws,
  // one task key per row of x_r.  Unseen tokens fall back to the prior, drawn
  // in order of first appearance (so the result does not depend on what the
  // unseen strings are).
  [[nodiscard]] GaussianPredictive predict(
      const std::vector<TaskKey>& row_tasks, const Matrix& x_r,
      int latent_samples, std::uint64_t seed) const;

  [[nodiscard]] GaussianPredictive predict_joint(
      const TaskKey& task, const Matrix& x_r, std::uint64_t seed) const override;

  [[nodiscard]] Vector sample_outputs(const TaskKey& task, const Matrix& x_r,
                                      RngStream& rng) const override;

  [[nodiscard]] std::unique_ptr<FrozenPredictor> freeze(
      const TaskKey& task, std::uint64_t seed) const override;

  [[nodiscard]] std::optional<double> min_observed_y(
      const TaskKey& task) const override;

  [[nodiscard]] const MultiTaskData& training_data() const override {
    return data_;
  }

  // Injectable noise source for prediction; rows x cols of standard normals.
  using EpsSource = std::function<Matrix(Eigen::Index, Eigen::Index)>;
  [[nodiscard]] GaussianPredictive predict_with_eps_source(
      const std::vector<TaskKey>& row_tasks, const Matrix& x_r,
      int latent_samples, const EpsSource& eps_source) const;

  // ELBO estimate at the model's current parameters for the given data and
  // fixed eps draws (positive orientation; deterministic given eps).
  [[nodiscard]] double elbo_estimate(const MultiTaskData& data,
                                     const EpsDraw& eps) const;

  // Per-iteration ELBO estimates from the most recent fit or refit.
  [[nodiscard]] const std::vector<double>& elbo_trace() const {
    return trace_;
  }

  // Training objective internals, exposed so gradients can be verified
  // against finite differences of the same function.
  [[nodiscard]] Vector pack_parameters() const;
  void apply_packed(const Vector& packed);
  struct PackedEval {
    double value = 0.0;  // negative ELBO
    Vector gradient;
  };
  [[nodiscard]] PackedEval eval_packed(const MultiTaskData& data,
                                       const Vector& packed,
                                       const EpsDraw& eps) const;
  [[nodiscard]] EpsDraw draw_eps(RngStream& rng) const;

  [[nodiscard]] const Settings& settings() const { return settings_; }
  [[nodiscard]] const TaskTable& table() const { return table_; }
  [[nodiscard]] const LatentPosterior& latents() const { return latents_; }
  [[nodiscard]] const GpHyperparams& gp() const { return gp_; }
  [[nodiscard]] const OutputScaling& scaling() const { return scaling_; }
  [[nodiscard]] bool fitted() const { return fitted_; }

  [[nodiscard]] State state() const;
  static BegpModel from_state(State state);

 private:
  void train(int iterations, std::uint64_t seed);
  void rebuild_row_index();
  [[nodiscard]] LatentDraw latents_at(const EpsDraw& eps) const;
  [[nodiscard]] Vector scaled_outputs(const Vector& y) const;

  Settings settings_;
  TaskTable table_;
  LatentPosterior latents_;
  GpHyperparams gp_;
  OutputScaling scaling_;
  MultiTaskData data_;
  std::vector<std::vector<int>> row_idx_;  // per feature, per row
  std::vector<double> trace_;
  bool fitted_ = false;
};

}  // namespace begp
