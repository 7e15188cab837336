#include "begp/baseline_gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "begp/optim.hpp"

namespace begp {

namespace {

// Canonical row order makes the fit exactly invariant to input permutations.
MultiTaskData sorted_rows(const MultiTaskData& data) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(data.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index k = 0; k < data.x.cols(); ++k) {
      if (data.x(a, k) != data.x(b, k)) return data.x(a, k) < data.x(b, k);
    }
    if (data.y[a] != data.y[b]) return data.y[a] < data.y[b];
    return data.tasks[static_cast<std::size_t>(a)] <
           data.tasks[static_cast<std::size_t>(b)];
  });
  MultiTaskData out;
  out.feature_names = data.feature_names;
  out.x = Matrix(data.rows(), data.x.cols());
  out.y = Vector(data.rows());
  out.tasks.reserve(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    out.x.row(static_cast<Eigen::Index>(i)) = data.x.row(order[i]);
    out.y[static_cast<Eigen::Index>(i)] = data.y[order[i]];
    out.tasks.push_back(data.tasks[static_cast<std::size_t>(order[i])]);
  }
  return out;
}

}  // namespace

BaselineGp::BaselineGp(Settings settings) : settings_(settings) {
  if (settings_.input_dim < 1)
    throw std::invalid_argument("baseline gp: input_dim must be positive");
  if (settings_.restarts < 1 || settings_.iterations < 0)
    throw std::invalid_argument("baseline gp: bad restart or iteration count");
}

GpHyperparams BaselineGp::default_init(Eigen::Index dim) const {
  GpHyperparams p;
  p.kernel.signal_variance = 1.0;
  p.kernel.lengthscales = Vector::Ones(dim);
  p.mean_constant = 0.0;
  p.noise_variance = 0.01;
  return p;
}

GpData BaselineGp::scaled_data() const {
  GpData gd;
  gd.inputs = data_.x;
  gd.outputs = ((data_.y.array() - scaling_.center) / scaling_.scale).matrix();
  return gd;
}

void BaselineGp::fit(const MultiTaskData& data, std::uint64_t seed) {
  data.validate();
  if (data.rows() > 0 && data.x.cols() != settings_.input_dim)
    throw std::invalid_argument("baseline gp: input dimension mismatch");
  data_ = sorted_rows(data);
  fit_seed_ = seed;
  fitted_ = true;

  if (data_.rows() == 0) {
    scaling_ = OutputScaling{};
    params_ = default_init(settings_.input_dim);
    return;
  }

  const double center = data_.y.mean();
  double scale = std::sqrt((data_.y.array() - center).square().sum() /
                           static_cast<double>(data_.rows()));
  if (!(scale > 1e-12)) scale = 1.0;
  scaling_ = OutputScaling{center, scale};

  const GpData gd = scaled_data();
  const Vector u_init = pack_hyperparams(default_init(data_.x.cols()));

  double best_value = std::numeric_limits<double>::infinity();
  Vector best_u = u_init;
  for (int r = 0; r < settings_.restarts; ++r) {
    Vector u = u_init;
    if (r > 0) {
      RngStream rng(derive_seed(seed, "restart", r));
      for (Eigen::Index i = 0; i < u.size(); ++i) u[i] += rng.normal();
    }
    AdamState adam(u.size());
    bool failed = false;
    double value = std::numeric_limits<double>::infinity();
    try {
      for (int it = 0; it < settings_.iterations; ++it) {
        const auto [v, g] = nlml_and_gradient(gd, u);
        if (!std::isfinite(v) || !g.allFinite()) {
          failed = true;
          break;
        }
        const double frac =
            settings_.iterations > 1
                ? static_cast<double>(it) / (settings_.iterations - 1)
                : 0.0;
        const double lr = settings_.step_size *
                          (1.0 - (1.0 - settings_.final_step_fraction) * frac);
        adam.update(u, g, lr);
      }
      if (!failed) value = nlml_and_gradient(gd, u).first;
    } catch (const SingularKernelError&) {
      failed = true;
    }
    if (!failed && value < best_value) {
      best_value = value;
      best_u = u;
    }
  }
  params_ = unpack_hyperparams(best_u);
}

void BaselineGp::refit(std::uint64_t seed) {
  if (!fitted_) throw std::runtime_error("refit called before fit");
  fit(data_, seed);
}

void BaselineGp::add_datum(const TaskKey& task, const Vector& x_row,
                           double y_value) {
  if (!fitted_) throw std::runtime_error("add_datum called before fit");
  if (data_.rows() == 0 && x_row.size() != settings_.input_dim)
    throw std::invalid_argument("add_datum: input dimension mismatch");
  data_.append(task, x_row, y_value);
}

GaussianPredictive BaselineGp::predict_joint(const TaskKey&, const Matrix& x_r,
                                             std::uint64_t) const {
  if (!fitted_) throw std::runtime_error("predict called before fit");
  if (x_r.cols() != settings_.input_dim)
    throw std::invalid_argument("predict: input dimension mismatch");
  GaussianPredictive out = posterior_output(scaled_data(), params_, x_r);
  out.mean = (out.mean.array() * scaling_.scale + scaling_.center).matrix();
  out.covariance *= scaling_.scale * scaling_.scale;
  return out;
}

Vector BaselineGp::sample_outputs(const TaskKey& task, const Matrix& x_r,
                                  RngStream& rng) const {
  const GaussianPredictive joint = predict_joint(task, x_r, 0);
  const KyyFactor fac = factor_kyy(joint.covariance, 0.0);
  Vector xi(x_r.rows());
  for (Eigen::Index i = 0; i < xi.size(); ++i) xi[i] = rng.normal();
  return joint.mean + Matrix(fac.llt.matrixL()) * xi;
}

namespace {

class BaselineFrozen final : public FrozenPredictor {
 public:
  BaselineFrozen(const BaselineGp& gp) : gp_(gp) {}

  void mean_var(const Vector& x_r, double& mean, double& variance) const override {
    Matrix x(1, x_r.size());
    x.row(0) = x_r.transpose();
    const GaussianPredictive p = gp_.predict_joint({}, x, 0);
    mean = p.mean[0];
    variance = std::max(p.covariance(0, 0), 0.0);
  }

 private:
  const BaselineGp& gp_;
};

}  // namespace

std::unique_ptr<FrozenPredictor> BaselineGp::freeze(const TaskKey&,
                                                    std::uint64_t) const {
  if (!fitted_) throw std::runtime_error("freeze called before fit");
  return std::make_unique<BaselineFrozen>(*this);
}

std::optional<double> BaselineGp::min_observed_y(const TaskKey& task) const {
  std::optional<double> best;
  for (Eigen::Index i = 0; i < data_.rows(); ++i) {
    if (data_.tasks[static_cast<std::size_t>(i)] != task) continue;
    if (!best || data_.y[i] < *best) best = data_.y[i];
  }
  return best;
}

}  // namespace begp
