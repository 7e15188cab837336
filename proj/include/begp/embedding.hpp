#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "begp/gp.hpp"

namespace begp {

// One categorical value per general feature, e.g. {"engine_A"}.
using TaskKey = std::vector<std::string>;

// Latent coordinates have a fixed standard-normal prior per entry.
struct LatentPrior {
  static constexpr double variance = 1.0;
};

// Registry of the distinct tokens seen per general feature.  Token order is
// insertion order, which pins the latent row layout and every RNG draw order.
struct TaskTable {
  std::vector<std::string> features;               // feature names, in order
  std::vector<std::vector<std::string>> tokens;    // per feature
  int latent_dim = 2;                              // d_z per feature

  [[nodiscard]] int n_features() const {
    return static_cast<int>(features.size());
  }
  [[nodiscard]] int count(int feature) const {
    return static_cast<int>(tokens.at(feature).size());
  }
  [[nodiscard]] int total_latent_dim() const {
    return n_features() * latent_dim;
  }

  // Index of token within the feature, inserting it if new.  Empty tokens are
  // rejected.
  int register_token(int feature, const std::string& token);
  [[nodiscard]] std::optional<int> find(int feature,
                                        const std::string& token) const;
};

// Build a table from per-row task keys.  Idempotent over repeated rows: one
// entry per distinct token, ordered by first appearance.
TaskTable register_tasks(const std::vector<std::string>& feature_names,
                         const std::vector<TaskKey>& rows, int latent_dim);

// Mean-field Gaussian posterior over latent coordinates, one row per token.
struct LatentPosterior {
  std::vector<Matrix> means;      // per feature: count x d_z
  std::vector<Matrix> variances;  // per feature: count x d_z, > 0

  void validate(const TaskTable& table) const;
};

// Posterior initialized at the prior: zero means, unit variances.
LatentPosterior prior_posterior(const TaskTable& table);

// Mean and variance rows for a token; unseen tokens fall back to the prior.
std::pair<Vector, Vector> lookup_or_prior(const TaskTable& table,
                                          const LatentPosterior& posterior,
                                          int feature,
                                          const std::string& token);

// Reparameterized draw: mean + sqrt(variance) .* eps, elementwise.
Matrix sample_latents(const Matrix& means, const Matrix& variances,
                      const Matrix& eps);

// KL(q || prior) summed over all entries and features:
//   sum 0.5 * (s + m^2 - ln s - 1)
double kl_to_prior(const LatentPosterior& posterior);

// Posterior mode: the means (delta approximation used by deterministic mode).
std::vector<Matrix> posterior_mode(const LatentPosterior& posterior);

}  // namespace begp
