#include "begp/begp_model.hpp"

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

#include "begp/optim.hpp"

namespace begp {

namespace {

std::vector<std::vector<int>> make_row_index(const TaskTable& table,
                                             const MultiTaskData& data) {
  if (static_cast<int>(data.feature_names.size()) != table.n_features())
    throw std::invalid_argument("row index: feature count mismatch");
  std::vector<std::vector<int>> idx(
      table.n_features(), std::vector<int>(static_cast<std::size_t>(data.rows())));
  for (int f = 0; f < table.n_features(); ++f) {
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      const auto found = table.find(f, data.tasks[i][f]);
      if (!found)
        throw std::invalid_argument("row index: unregistered token '" +
                                    data.tasks[i][f] + "'");
      idx[f][static_cast<std::size_t>(i)] = *found;
    }
  }
  return idx;
}

Matrix normal_matrix(RngStream& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index t = 0; t < rows; ++t)
    for (Eigen::Index j = 0; j < cols; ++j) m(t, j) = rng.normal();
  return m;
}

}  // namespace

Matrix assemble_inputs(const Matrix& x_r,
                       const std::vector<std::vector<int>>& row_token_idx,
                       const LatentDraw& z) {
  const Eigen::Index n = x_r.rows();
  const int n_features = static_cast<int>(z.size());
  if (static_cast<int>(row_token_idx.size()) != n_features)
    throw std::invalid_argument("assemble_inputs: feature count mismatch");
  Eigen::Index total_dz = 0;
  for (const Matrix& zf : z) total_dz += zf.cols();
  Matrix full(n, x_r.cols() + total_dz);
  full.leftCols(x_r.cols()) = x_r;
  Eigen::Index off = x_r.cols();
  for (int f = 0; f < n_features; ++f) {
    if (static_cast<Eigen::Index>(row_token_idx[f].size()) != n)
      throw std::invalid_argument("assemble_inputs: row index length mismatch");
    const Eigen::Index dz = z[f].cols();
    for (Eigen::Index i = 0; i < n; ++i) {
      const int t = row_token_idx[f][static_cast<std::size_t>(i)];
      if (t < 0 || t >= z[f].rows())
        throw std::invalid_argument("assemble_inputs: token index out of range");
      full.block(i, off, 1, dz) = z[f].row(t);
    }
    off += dz;
  }
  return full;
}

Matrix assemble_inputs(const Matrix& x_r, const Matrix& z_rows) {
  if (x_r.rows() != z_rows.rows())
    throw std::invalid_argument("assemble_inputs: row count mismatch");
  Matrix full(x_r.rows(), x_r.cols() + z_rows.cols());
  full.leftCols(x_r.cols()) = x_r;
  full.rightCols(z_rows.cols()) = z_rows;
  return full;
}

GaussianPredictive moment_match(const std::vector<GaussianPredictive>& parts) {
  if (parts.empty())
    throw std::invalid_argument("moment_match: no components");
  const Eigen::Index m = parts[0].mean.size();
  Vector mean = Vector::Zero(m);
  Matrix second = Matrix::Zero(m, m);
  for (const GaussianPredictive& p : parts) {
    if (p.mean.size() != m || p.covariance.rows() != m ||
        p.covariance.cols() != m)
      throw std::invalid_argument("moment_match: component shape mismatch");
    mean += p.mean;
    second += p.covariance + p.mean * p.mean.transpose();
  }
  const double inv = 1.0 / static_cast<double>(parts.size());
  mean *= inv;
  second *= inv;
  Matrix cov = second - mean * mean.transpose();
  GaussianPredictive out;
  out.mean = std::move(mean);
  out.covariance = 0.5 * (cov + cov.transpose());
  return out;
}

std::vector<std::pair<double, double>> mnlp_ready_marginals(
    const GaussianPredictive& predictive, const OutputScaling& scaling) {
  if (predictive.mean.size() != predictive.covariance.rows() ||
      predictive.covariance.rows() != predictive.covariance.cols())
    throw std::invalid_argument("mnlp_ready_marginals: shape mismatch");
  std::vector<std::pair<double, double>> out;
  out.reserve(static_cast<std::size_t>(predictive.mean.size()));
  for (Eigen::Index i = 0; i < predictive.mean.size(); ++i) {
    const double mean = scaling.to_original(predictive.mean[i]);
    const double variance =
        predictive.covariance(i, i) * scaling.scale * scaling.scale;
    out.emplace_back(mean, std::max(variance, 1e-12));
  }
  return out;
}

Vector BegpModel::scaled_outputs(const Vector& y) const {
  return (y.array() - scaling_.center) / scaling_.scale;
}

void BegpModel::rebuild_row_index() { row_idx_ = make_row_index(table_, data_); }

LatentDraw BegpModel::latents_at(const EpsDraw& eps) const {
  LatentDraw z;
  z.reserve(latents_.means.size());
  for (std::size_t f = 0; f < latents_.means.size(); ++f)
    z.push_back(
        sample_latents(latents_.means[f], latents_.variances[f], eps.eps[f]));
  return z;
}

EpsDraw BegpModel::draw_eps(RngStream& rng) const {
  EpsDraw e;
  for (int f = 0; f < table_.n_features(); ++f)
    e.eps.push_back(normal_matrix(rng, table_.count(f), table_.latent_dim));
  return e;
}

void BegpModel::fit(const MultiTaskData& data, std::uint64_t seed) {
  data.validate();
  settings_.train.validate();
  if (settings_.latent_dim < 1 || settings_.latent_samples < 1)
    throw std::invalid_argument("model settings: latent_dim and latent_samples "
                                "must be positive");
  if (data.rows() == 0)
    throw std::invalid_argument("fit: empty training data");

  data_ = data;
  settings_.train.seed = seed;
  table_ = register_tasks(data.feature_names, data.tasks, settings_.latent_dim);
  rebuild_row_index();

  const double center = data_.y.mean();
  double scale = std::sqrt((data_.y.array() - center).square().sum() /
                           static_cast<double>(data_.rows()));
  if (!(scale > 1e-12)) scale = 1.0;
  scaling_ = OutputScaling{center, scale};

  latents_ = prior_posterior(table_);
  RngStream init_rng(derive_seed(seed, "latent-init"));
  for (int f = 0; f < table_.n_features(); ++f) {
    latents_.means[f] = 0.1 * normal_matrix(init_rng, table_.count(f),
                                            table_.latent_dim);
    if (settings_.mode == EmbeddingMode::deterministic)
      latents_.variances[f].setConstant(kDeterministicLatentVariance);
  }

  const Eigen::Index full_dim = data_.x.cols() + table_.total_latent_dim();
  gp_ = GpHyperparams{};
  gp_.kernel.signal_variance = 1.0;
  // Latent dimensions keep the prior's unit scale permanently.  Fixing the
  // prior variance at 1 only removes the latent-scale redundancy if the
  // kernel cannot rescale those dimensions on its own; a trainable latent
  // lengthscale can shrink until every task decouples and the posterior
  // collapses back to the prior, which destroys transfer.
  gp_.kernel.lengthscales = Vector::Ones(full_dim);
  gp_.mean_constant = 0.0;
  gp_.noise_variance = 0.01;

  fitted_ = true;
  train(settings_.train.iterations, seed);
}

void BegpModel::refit(std::uint64_t seed) {
  if (!fitted_) throw std::runtime_error("refit called before fit");
  train(settings_.train.warm_start_iterations, seed);
}

void BegpModel::add_datum(const TaskKey& task, const Vector& x_row,
                          double y_value) {
  if (!fitted_) throw std::runtime_error("add_datum called before fit");
  if (static_cast<int>(task.size()) != table_.n_features())
    throw std::invalid_argument("add_datum: task key width mismatch");
  data_.append(task, x_row, y_value);
  for (int f = 0; f < table_.n_features(); ++f) {
    const int before = table_.count(f);
    const int idx = table_.register_token(f, task[f]);
    if (idx == before) {
      // New token enters at the prior.
      latents_.means[f].conservativeResize(before + 1, table_.latent_dim);
      latents_.means[f].row(before).setZero();
      latents_.variances[f].conservativeResize(before + 1, table_.latent_dim);
      latents_.variances[f].row(before).setConstant(
          settings_.mode == EmbeddingMode::bayesian
              ? LatentPrior::variance
              : kDeterministicLatentVariance);
    }
  }
  rebuild_row_index();
}

Vector BegpModel::pack_parameters() const {
  const bool bayes = settings_.mode == EmbeddingMode::bayesian;
  // Only the real-input lengthscales are trainable; the latent dimensions
  // stay at the prior scale and are left out of the pack.
  const Eigen::Index d_r =
      gp_.kernel.lengthscales.size() - table_.total_latent_dim();
  const Eigen::Index gp_size = d_r + 3;
  Eigen::Index total = gp_size;
  for (int f = 0; f < table_.n_features(); ++f)
    total += static_cast<Eigen::Index>(table_.count(f)) * table_.latent_dim *
             (bayes ? 2 : 1);
  Vector packed(total);
  GpHyperparams trainable = gp_;
  trainable.kernel.lengthscales = gp_.kernel.lengthscales.head(d_r).eval();
  packed.head(gp_size) = pack_hyperparams(trainable);
  Eigen::Index off = gp_size;
  for (int f = 0; f < table_.n_features(); ++f)
    for (int t = 0; t < table_.count(f); ++t)
      for (int j = 0; j < table_.latent_dim; ++j)
        packed[off++] = latents_.means[f](t, j);
  if (bayes) {
    for (int f = 0; f < table_.n_features(); ++f)
      for (int t = 0; t < table_.count(f); ++t)
        for (int j = 0; j < table_.latent_dim; ++j)
          packed[off++] = std::log(latents_.variances[f](t, j));
  }
  return packed;
}

void BegpModel::apply_packed(const Vector& packed) {
  const bool bayes = settings_.mode == EmbeddingMode::bayesian;
  const Eigen::Index d_r =
      gp_.kernel.lengthscales.size() - table_.total_latent_dim();
  const Eigen::Index gp_size = d_r + 3;
  gp_ = unpack_hyperparams(packed.head(gp_size));
  Vector full_ls = Vector::Ones(d_r + table_.total_latent_dim());
  full_ls.head(d_r) = gp_.kernel.lengthscales;
  gp_.kernel.lengthscales = std::move(full_ls);
  Eigen::Index off = gp_size;
  for (int f = 0; f < table_.n_features(); ++f)
    for (int t = 0; t < table_.count(f); ++t)
      for (int j = 0; j < table_.latent_dim; ++j)
        latents_.means[f](t, j) = packed[off++];
  if (bayes) {
    for (int f = 0; f < table_.n_features(); ++f)
      for (int t = 0; t < table_.count(f); ++t)
        for (int j = 0; j < table_.latent_dim; ++j)
          latents_.variances[f](t, j) = std::exp(packed[off++]);
  }
  if (off != packed.size())
    throw std::invalid_argument("apply_packed: size mismatch");
}

BegpModel::PackedEval BegpModel::eval_packed(const MultiTaskData& data,
                                             const Vector& packed,
                                             const EpsDraw& eps) const {
  data.validate();
  const bool bayes = settings_.mode == EmbeddingMode::bayesian;
  const int n_features = table_.n_features();
  const int dz = table_.latent_dim;
  const Eigen::Index d_r = data.x.cols();
  const Eigen::Index full_dim = d_r + table_.total_latent_dim();
  const Eigen::Index gp_size = d_r + 3;

  Eigen::Index latent_count = 0;
  for (int f = 0; f < n_features; ++f)
    latent_count += static_cast<Eigen::Index>(table_.count(f)) * dz;
  if (packed.size() != gp_size + latent_count * (bayes ? 2 : 1))
    throw std::invalid_argument("eval_packed: packed size mismatch");
  if (static_cast<int>(eps.eps.size()) != n_features)
    throw std::invalid_argument("eval_packed: eps feature count mismatch");

  const auto row_idx = make_row_index(table_, data);
  GpHyperparams gp = unpack_hyperparams(packed.head(gp_size));
  Vector full_ls = Vector::Ones(full_dim);
  full_ls.head(d_r) = gp.kernel.lengthscales;
  gp.kernel.lengthscales = std::move(full_ls);

  LatentDraw z(n_features);
  std::vector<Matrix> means(n_features), variances(n_features);
  Eigen::Index off_m = gp_size;
  const Eigen::Index off_w0 = gp_size + latent_count;
  Eigen::Index off_w = off_w0;
  for (int f = 0; f < n_features; ++f) {
    const int count = table_.count(f);
    if (eps.eps[f].rows() != count || eps.eps[f].cols() != dz)
      throw std::invalid_argument("eval_packed: eps shape mismatch");
    means[f] = Matrix(count, dz);
    variances[f] = Matrix(count, dz);
    for (int t = 0; t < count; ++t)
      for (int j = 0; j < dz; ++j) {
        means[f](t, j) = packed[off_m++];
        variances[f](t, j) =
            bayes ? std::exp(packed[off_w++]) : kDeterministicLatentVariance;
      }
    z[f] = sample_latents(means[f], variances[f], eps.eps[f]);
  }

  const Matrix full_inputs = assemble_inputs(data.x, row_idx, z);
  GpData gp_data;
  gp_data.inputs = full_inputs;
  gp_data.outputs = scaled_outputs(data.y);
  const NlmlGradients res =
      nlml_gradients(gp_data, gp, table_.total_latent_dim() > 0);

  PackedEval out;
  out.value = res.value;
  out.gradient = Vector::Zero(packed.size());
  out.gradient[0] = res.d_signal_variance * softplus_grad(packed[0]);
  for (Eigen::Index k = 0; k < d_r; ++k)
    out.gradient[1 + k] =
        res.d_lengthscales[k] * softplus_grad(packed[1 + k]);
  out.gradient[d_r + 1] = res.d_mean_constant;
  out.gradient[d_r + 2] =
      res.d_noise_variance * softplus_grad(packed[d_r + 2]);

  if (table_.total_latent_dim() > 0) {
    Eigen::Index base_m = gp_size;
    Eigen::Index base_w = off_w0;
    Eigen::Index col_off = d_r;
    for (int f = 0; f < n_features; ++f) {
      const int count = table_.count(f);
      Matrix g_mean = Matrix::Zero(count, dz);
      for (Eigen::Index i = 0; i < data.rows(); ++i) {
        const int t = row_idx[f][static_cast<std::size_t>(i)];
        for (int j = 0; j < dz; ++j)
          g_mean(t, j) += res.d_inputs(i, col_off + j);
      }
      for (int t = 0; t < count; ++t)
        for (int j = 0; j < dz; ++j) {
          const Eigen::Index im = base_m + static_cast<Eigen::Index>(t) * dz + j;
          out.gradient[im] += g_mean(t, j);
          if (bayes) {
            const Eigen::Index iw =
                base_w + static_cast<Eigen::Index>(t) * dz + j;
            // dz/dW = 0.5 * sqrt(s) * eps
            out.gradient[iw] += g_mean(t, j) * 0.5 *
                                std::sqrt(variances[f](t, j)) *
                                eps.eps[f](t, j);
          }
        }
      base_m += static_cast<Eigen::Index>(count) * dz;
      base_w += static_cast<Eigen::Index>(count) * dz;
      col_off += dz;
    }
  }

  if (bayes) {
    LatentPosterior q;
    q.means = means;
    q.variances = variances;
    out.value += kl_to_prior(q);
    Eigen::Index im = gp_size;
    Eigen::Index iw = off_w0;
    for (int f = 0; f < n_features; ++f)
      for (int t = 0; t < table_.count(f); ++t)
        for (int j = 0; j < dz; ++j) {
          out.gradient[im++] += means[f](t, j);
          out.gradient[iw++] += 0.5 * (variances[f](t, j) - 1.0);
        }
  }
  return out;
}

void BegpModel::train(int iterations, std::uint64_t seed) {
  trace_.clear();
  if (iterations == 0) return;
  trace_.reserve(static_cast<std::size_t>(iterations));
  Vector packed = pack_parameters();
  AdamState adam(packed.size());
  RngStream eps_rng(derive_seed(seed, "elbo-eps"));
  const int samples = settings_.train.elbo_samples_per_step;
  for (int it = 0; it < iterations; ++it) {
    double value = 0.0;
    Vector grad = Vector::Zero(packed.size());
    for (int s = 0; s < samples; ++s) {
      const EpsDraw eps = draw_eps(eps_rng);
      const PackedEval ev = eval_packed(data_, packed, eps);
      value += ev.value;
      grad += ev.gradient;
    }
    value /= samples;
    grad /= samples;
    if (!std::isfinite(value) || !grad.allFinite())
      throw TrainingDivergedError(
          "training objective became non-finite at iteration " +
              std::to_string(it),
          it);
    trace_.push_back(-value);
    adam.update(packed, grad, settings_.train.step_size);
  }
  apply_packed(packed);
}

double BegpModel::elbo_estimate(const MultiTaskData& data,
                                const EpsDraw& eps) const {
  if (!fitted_) throw std::runtime_error("elbo_estimate called before fit");
  return -eval_packed(data, pack_parameters(), eps).value;
}

GaussianPredictive BegpModel::predict_with_eps_source(
    const std::vector<TaskKey>& row_tasks, const Matrix& x_r,
    int latent_samples, const EpsSource& eps_source) const {
  if (!fitted_) throw std::runtime_error("predict called before fit");
  if (static_cast<Eigen::Index>(row_tasks.size()) != x_r.rows())
    throw std::invalid_argument("predict: one task key per query row required");
  if (x_r.cols() != data_.x.cols())
    throw std::invalid_argument("predict: input dimension mismatch");
  for (const TaskKey& key : row_tasks)
    if (static_cast<int>(key.size()) != table_.n_features())
      throw std::invalid_argument("predict: task key width mismatch");

  const bool det = settings_.mode == EmbeddingMode::deterministic;
  const int n_draws = det ? 1 : std::max(1, latent_samples);
  const int n_features = table_.n_features();
  const int dz = table_.latent_dim;
  const Eigen::Index m = x_r.rows();
  const Vector y_scaled = scaled_outputs(data_.y);

  std::vector<GaussianPredictive> parts;
  parts.reserve(static_cast<std::size_t>(n_draws));
  for (int s = 0; s < n_draws; ++s) {
    LatentDraw z;
    if (det) {
      z = posterior_mode(latents_);
    } else {
      z.reserve(static_cast<std::size_t>(n_features));
      for (int f = 0; f < n_features; ++f)
        z.push_back(sample_latents(latents_.means[f], latents_.variances[f],
                                   eps_source(table_.count(f), dz)));
    }

    // Prior draws for tokens outside the table, keyed by first appearance so
    // the stream position never depends on the token strings themselves.
    std::map<std::pair<int, std::string>, Vector> unseen;
    for (Eigen::Index i = 0; i < m; ++i)
      for (int f = 0; f < n_features; ++f) {
        const std::string& token = row_tasks[static_cast<std::size_t>(i)][f];
        if (table_.find(f, token)) continue;
        const auto key = std::make_pair(f, token);
        if (unseen.count(key)) continue;
        unseen.emplace(key, det ? Vector::Zero(dz).eval()
                                : Vector(eps_source(1, dz).row(0)));
      }

    const Matrix full_train = assemble_inputs(data_.x, row_idx_, z);
    Matrix full_star(m, full_train.cols());
    full_star.leftCols(x_r.cols()) = x_r;
    Eigen::Index off = x_r.cols();
    for (int f = 0; f < n_features; ++f) {
      for (Eigen::Index i = 0; i < m; ++i) {
        const std::string& token = row_tasks[static_cast<std::size_t>(i)][f];
        const auto idx = table_.find(f, token);
        if (idx)
          full_star.block(i, off, 1, dz) = z[f].row(*idx);
        else
          full_star.block(i, off, 1, dz) =
              unseen.at({f, token}).transpose();
      }
      off += dz;
    }

    GpData gp_data;
    gp_data.inputs = full_train;
    gp_data.outputs = y_scaled;
    parts.push_back(posterior_output(gp_data, gp_, full_star));
  }

  GaussianPredictive out = moment_match(parts);
  out.mean = (out.mean.array() * scaling_.scale + scaling_.center).matrix();
  out.covariance *= scaling_.scale * scaling_.scale;
  return out;
}

GaussianPredictive BegpModel::predict(const std::vector<TaskKey>& row_tasks,
                                      const Matrix& x_r, int latent_samples,
                                      std::uint64_t seed) const {
  RngStream rng(derive_seed(seed, "predict"));
  EpsSource source = [&rng](Eigen::Index rows, Eigen::Index cols) {
    return normal_matrix(rng, rows, cols);
  };
  return predict_with_eps_source(row_tasks, x_r, latent_samples, source);
}

GaussianPredictive BegpModel::predict_joint(const TaskKey& task,
                                            const Matrix& x_r,
                                            std::uint64_t seed) const {
  return predict(std::vector<TaskKey>(static_cast<std::size_t>(x_r.rows()),
                                      task),
                 x_r, settings_.latent_samples, seed);
}

Vector BegpModel::sample_outputs(const TaskKey& task, const Matrix& x_r,
                                 RngStream& rng) const {
  if (!fitted_) throw std::runtime_error("sample_outputs called before fit");
  EpsSource source = [&rng](Eigen::Index rows, Eigen::Index cols) {
    return normal_matrix(rng, rows, cols);
  };
  // One latent draw, then one Gaussian draw from the resulting joint.
  const GaussianPredictive joint = predict_with_eps_source(
      std::vector<TaskKey>(static_cast<std::size_t>(x_r.rows()), task), x_r, 1,
      source);
  const KyyFactor fac = factor_kyy(joint.covariance, 0.0);
  Vector xi(x_r.rows());
  for (Eigen::Index i = 0; i < xi.size(); ++i) xi[i] = rng.normal();
  return joint.mean + Matrix(fac.llt.matrixL()) * xi;
}

namespace {

class BegpFrozen final : public FrozenPredictor {
 public:
  struct Draw {
    Matrix l;        // lower Cholesky factor of K_yy
    Vector alpha;    // K_yy^{-1} (y - mu)
    Matrix x_train;  // assembled training inputs
    Vector z_star;   // latent coordinates of the frozen task key
  };

  BegpFrozen(std::vector<Draw> draws, GpHyperparams gp, OutputScaling scaling,
             Eigen::Index d_r)
      : draws_(std::move(draws)),
        gp_(std::move(gp)),
        scaling_(scaling),
        d_r_(d_r) {}

  void mean_var(const Vector& x_r, double& mean, double& variance) const override {
    if (x_r.size() != d_r_)
      throw std::invalid_argument("frozen predictor: input dimension mismatch");
    double m1 = 0.0, m2 = 0.0;
    Matrix star(1, d_r_ + draws_.front().z_star.size());
    for (const Draw& d : draws_) {
      star.leftCols(d_r_) = x_r.transpose();
      star.rightCols(d.z_star.size()) = d.z_star.transpose();
      const Matrix k = gram(d.x_train, star, gp_.kernel);
      const Vector v = d.l.triangularView<Eigen::Lower>().solve(k.col(0));
      const double mean_s = gp_.mean_constant + k.col(0).dot(d.alpha);
      const double var_s = gp_.kernel.signal_variance - v.squaredNorm() +
                           gp_.noise_variance;
      m1 += mean_s;
      m2 += var_s + mean_s * mean_s;
    }
    const double inv = 1.0 / static_cast<double>(draws_.size());
    m1 *= inv;
    m2 *= inv;
    mean = scaling_.to_original(m1);
    variance = std::max(m2 - m1 * m1, 0.0) * scaling_.scale * scaling_.scale;
  }

 private:
  std::vector<Draw> draws_;
  GpHyperparams gp_;
  OutputScaling scaling_;
  Eigen::Index d_r_;
};

}  // namespace

std::unique_ptr<FrozenPredictor> BegpModel::freeze(const TaskKey& task,
                                                   std::uint64_t seed) const {
  if (!fitted_) throw std::runtime_error("freeze called before fit");
  if (static_cast<int>(task.size()) != table_.n_features())
    throw std::invalid_argument("freeze: task key width mismatch");
  const bool det = settings_.mode == EmbeddingMode::deterministic;
  const int n_draws = det ? 1 : std::max(1, settings_.latent_samples);
  const int n_features = table_.n_features();
  const int dz = table_.latent_dim;
  RngStream rng(derive_seed(seed, "freeze"));
  const Vector y_scaled = scaled_outputs(data_.y);

  std::vector<BegpFrozen::Draw> draws;
  draws.reserve(static_cast<std::size_t>(n_draws));
  for (int s = 0; s < n_draws; ++s) {
    LatentDraw z;
    if (det) {
      z = posterior_mode(latents_);
    } else {
      z.reserve(static_cast<std::size_t>(n_features));
      for (int f = 0; f < n_features; ++f)
        z.push_back(sample_latents(latents_.means[f], latents_.variances[f],
                                   normal_matrix(rng, table_.count(f), dz)));
    }
    Vector z_star(table_.total_latent_dim());
    Eigen::Index off = 0;
    for (int f = 0; f < n_features; ++f) {
      const auto idx = table_.find(f, task[f]);
      if (idx) {
        z_star.segment(off, dz) = z[f].row(*idx).transpose();
      } else if (det) {
        z_star.segment(off, dz).setZero();
      } else {
        for (int j = 0; j < dz; ++j) z_star[off + j] = rng.normal();
      }
      off += dz;
    }

    BegpFrozen::Draw draw;
    draw.x_train = assemble_inputs(data_.x, row_idx_, z);
    const Matrix k_ff = gram(draw.x_train, draw.x_train, gp_.kernel);
    const KyyFactor fac = factor_kyy(k_ff, gp_.noise_variance);
    draw.l = fac.llt.matrixL();
    draw.alpha =
        fac.llt.solve((y_scaled.array() - gp_.mean_constant).matrix());
    draw.z_star = std::move(z_star);
    draws.push_back(std::move(draw));
  }
  return std::make_unique<BegpFrozen>(std::move(draws), gp_, scaling_,
                                      data_.x.cols());
}

std::optional<double> BegpModel::min_observed_y(const TaskKey& task) const {
  std::optional<double> best;
  for (Eigen::Index i = 0; i < data_.rows(); ++i) {
    if (data_.tasks[static_cast<std::size_t>(i)] != task) continue;
    if (!best || data_.y[i] < *best) best = data_.y[i];
  }
  return best;
}

BegpModel::State BegpModel::state() const {
  State s;
  s.settings = settings_;
  s.table = table_;
  s.latents = latents_;
  s.gp = gp_;
  s.scaling = scaling_;
  s.data = data_;
  s.fitted = fitted_;
  return s;
}

BegpModel BegpModel::from_state(State state) {
  BegpModel model(state.settings);
  model.table_ = std::move(state.table);
  model.latents_ = std::move(state.latents);
  model.gp_ = std::move(state.gp);
  model.scaling_ = state.scaling;
  model.data_ = std::move(state.data);
  model.fitted_ = state.fitted;
  if (model.fitted_) {
    model.latents_.validate(model.table_);
    model.data_.validate();
    model.rebuild_row_index();
  }
  return model;
}

}  // namespace begp
