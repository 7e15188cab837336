#include "begp/embedding.hpp"

#include <cmath>
#include <stdexcept>

namespace begp {

int TaskTable::register_token(int feature, const std::string& token) {
  if (feature < 0 || feature >= n_features())
    throw std::invalid_argument("register_token: feature index out of range");
  if (token.empty())
    throw std::invalid_argument("register_token: empty token");
  if (const auto existing = find(feature, token)) return *existing;
  tokens[feature].push_back(token);
  return count(feature) - 1;
}

std::optional<int> TaskTable::find(int feature,
                                   const std::string& token) const {
  if (feature < 0 || feature >= n_features())
    throw std::invalid_argument("find: feature index out of range");
  const std::vector<std::string>& list = tokens[static_cast<std::size_t>(feature)];
  for (std::size_t i = 0; i < list.size(); ++i)
    if (list[i] == token) return static_cast<int>(i);
  return std::nullopt;
}

TaskTable register_tasks(const std::vector<std::string>& feature_names,
                         const std::vector<TaskKey>& rows, int latent_dim) {
  if (latent_dim <= 0)
    throw std::invalid_argument("register_tasks: latent_dim must be positive");
  TaskTable table;
  table.features = feature_names;
  table.tokens.assign(feature_names.size(), {});
  table.latent_dim = latent_dim;
  for (const TaskKey& row : rows) {
    if (row.size() != feature_names.size())
      throw std::invalid_argument(
          "register_tasks: task key width disagrees with feature count");
    for (int f = 0; f < table.n_features(); ++f)
      table.register_token(f, row[f]);
  }
  return table;
}

void LatentPosterior::validate(const TaskTable& table) const {
  if (static_cast<int>(means.size()) != table.n_features() ||
      static_cast<int>(variances.size()) != table.n_features())
    throw std::invalid_argument("latent posterior: feature count mismatch");
  for (int f = 0; f < table.n_features(); ++f) {
    if (means[f].rows() != table.count(f) ||
        means[f].cols() != table.latent_dim ||
        variances[f].rows() != table.count(f) ||
        variances[f].cols() != table.latent_dim)
      throw std::invalid_argument("latent posterior: shape mismatch");
    if (!means[f].allFinite() || !variances[f].allFinite() ||
        (variances[f].array() <= 0.0).any())
      throw std::invalid_argument(
          "latent posterior: means must be finite, variances positive");
  }
}

LatentPosterior prior_posterior(const TaskTable& table) {
  LatentPosterior post;
  for (int f = 0; f < table.n_features(); ++f) {
    post.means.push_back(Matrix::Zero(table.count(f), table.latent_dim));
    post.variances.push_back(
        Matrix::Constant(table.count(f), table.latent_dim,
                         LatentPrior::variance));
  }
  return post;
}

std::pair<Vector, Vector> lookup_or_prior(const TaskTable& table,
                                          const LatentPosterior& posterior,
                                          int feature,
                                          const std::string& token) {
  posterior.validate(table);
  const auto idx = table.find(feature, token);
  if (!idx) {
    return {Vector::Zero(table.latent_dim),
            Vector::Constant(table.latent_dim, LatentPrior::variance)};
  }
  return {posterior.means[feature].row(*idx).transpose(),
          posterior.variances[feature].row(*idx).transpose()};
}

Matrix sample_latents(const Matrix& means, const Matrix& variances,
                      const Matrix& eps) {
  if (means.rows() != variances.rows() || means.cols() != variances.cols() ||
      means.rows() != eps.rows() || means.cols() != eps.cols())
    throw std::invalid_argument("sample_latents: shape mismatch");
  if ((variances.array() < 0.0).any())
    throw std::invalid_argument("sample_latents: negative variance");
  return means.array() + variances.array().sqrt() * eps.array();
}

double kl_to_prior(const LatentPosterior& posterior) {
  double kl = 0.0;
  for (std::size_t f = 0; f < posterior.means.size(); ++f) {
    const auto& m = posterior.means[f].array();
    const auto& s = posterior.variances[f].array();
    kl += 0.5 * (s + m.square() - s.log() - 1.0).sum();
  }
  return kl;
}

std::vector<Matrix> posterior_mode(const LatentPosterior& posterior) {
  return posterior.means;
}

}  // namespace begp
