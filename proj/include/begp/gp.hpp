#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace begp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class SingularKernelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TrainingDivergedError : public std::runtime_error {
 public:
  TrainingDivergedError(const std::string& what, int iteration)
      : std::runtime_error(what), iteration(iteration) {}
  int iteration;
};

struct KernelParams {
  double signal_variance = 1.0;
  Vector lengthscales;  // one per input dimension, strictly positive

  void validate() const;
};

struct GpHyperparams {
  KernelParams kernel;
  double mean_constant = 0.0;
  double noise_variance = 0.0;  // sigma_y^2, >= 0

  void validate() const;
};

struct GpData {
  Matrix inputs;   // n x d
  Vector outputs;  // n

  [[nodiscard]] Eigen::Index rows() const { return inputs.rows(); }
  void validate() const;
};

struct GaussianPredictive {
  Vector mean;
  Matrix covariance;

  [[nodiscard]] Vector marginal_variances() const {
    return covariance.diagonal();
  }
};

// Squared-exponential kernel with per-dimension lengthscales:
//   k(x, x') = sigma^2 * exp(-sum_d ((x_d - x'_d) / l_d)^2)
double kernel_rbf(const Vector& x, const Vector& x_prime,
                  const KernelParams& params);

// White kernel on categorical tokens: variance when the tokens match, else 0.
double kernel_white(std::string_view a, std::string_view b, double variance);

// Cross-covariance matrix K(X, X') without noise or jitter.
Matrix gram(const Matrix& x, const Matrix& x_prime, const KernelParams& params);

// Cholesky of K_ff + noise*I with the diagonal-jitter policy: start at
// 1e-8 * mean(diag), escalate tenfold up to 1e-2 * mean(diag), then throw
// SingularKernelError.
struct KyyFactor {
  Eigen::LLT<Matrix> llt;
  double jitter = 0.0;      // value added to every diagonal entry
  double jitter_rel = 0.0;  // jitter / mean(diag(K_ff + noise*I))
};
KyyFactor factor_kyy(const Matrix& k_ff, double noise_variance);

double log_marginal_likelihood(const GpData& data, const GpHyperparams& params);

// Posterior over latent function values f(X*); with no data, the prior.
GaussianPredictive posterior_latent(const GpData& data,
                                    const GpHyperparams& params,
                                    const Matrix& x_star);

// Posterior over noisy outputs y(X*): posterior_latent plus sigma_y^2 * I.
GaussianPredictive posterior_output(const GpData& data,
                                    const GpHyperparams& params,
                                    const Matrix& x_star);

// Negative log marginal likelihood with analytic gradients in constrained
// space.  Input-space gradients (n x d) are filled when requested; they drive
// latent-embedding training.
struct NlmlGradients {
  double value = 0.0;
  double d_signal_variance = 0.0;
  Vector d_lengthscales;
  double d_mean_constant = 0.0;
  double d_noise_variance = 0.0;
  Matrix d_inputs;
};
NlmlGradients nlml_gradients(const GpData& data, const GpHyperparams& params,
                             bool with_input_gradients);

// Softplus bijection between unconstrained reals and positive parameters.
double softplus(double u);
double softplus_inverse(double p);
double softplus_grad(double u);  // d softplus / du, the logistic sigmoid

// Unconstrained parameter vector layout: [u_signal, u_ls(0..d-1), mean,
// u_noise] with softplus on all but the mean.
Vector pack_hyperparams(const GpHyperparams& params);
GpHyperparams unpack_hyperparams(const Vector& u);

std::pair<double, Vector> nlml_and_gradient(const GpData& data,
                                            const Vector& unconstrained);

}  // namespace begp
