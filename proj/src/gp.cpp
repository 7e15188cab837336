#include "begp/gp.hpp"

#include <cmath>
#include <limits>

#include "begp/kernels.hpp"

namespace begp {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kJitterStartRel = 1e-8;
constexpr double kJitterMaxRel = 1e-2;
}  // namespace

void KernelParams::validate() const {
  if (!std::isfinite(signal_variance) || signal_variance <= 0.0)
    throw std::invalid_argument("signal_variance must be finite and positive");
  for (Eigen::Index i = 0; i < lengthscales.size(); ++i) {
    if (!std::isfinite(lengthscales[i]) || lengthscales[i] <= 0.0)
      throw std::invalid_argument("lengthscales must be finite and positive");
  }
}

void GpHyperparams::validate() const {
  kernel.validate();
  if (!std::isfinite(mean_constant))
    throw std::invalid_argument("mean_constant must be finite");
  if (!std::isfinite(noise_variance) || noise_variance < 0.0)
    throw std::invalid_argument("noise_variance must be finite and >= 0");
}

void GpData::validate() const {
  if (inputs.rows() != outputs.size())
    throw std::invalid_argument("inputs and outputs disagree on row count");
  if (!inputs.allFinite() || !outputs.allFinite())
    throw std::invalid_argument("training data must be finite");
}

double kernel_rbf(const Vector& x, const Vector& x_prime,
                  const KernelParams& params) {
  params.validate();
  if (x.size() != x_prime.size() || x.size() != params.lengthscales.size())
    throw std::invalid_argument("kernel_rbf: dimension mismatch");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double t = (x[i] - x_prime[i]) / params.lengthscales[i];
    acc += t * t;
  }
  return params.signal_variance * std::exp(-acc);
}

double kernel_white(std::string_view a, std::string_view b, double variance) {
  if (!std::isfinite(variance) || variance < 0.0)
    throw std::invalid_argument("kernel_white: variance must be >= 0");
  return a == b ? variance : 0.0;
}

Matrix gram(const Matrix& x, const Matrix& x_prime,
            const KernelParams& params) {
  params.validate();
  if (x.cols() != x_prime.cols() || x.cols() != params.lengthscales.size())
    throw std::invalid_argument("gram: dimension mismatch");
  const int n = static_cast<int>(x.rows());
  const int m = static_cast<int>(x_prime.rows());
  const int d = static_cast<int>(x.cols());
  Matrix k(n, m);
  if (n == 0 || m == 0) return k;
  Vector inv_ls = params.lengthscales.cwiseInverse();
  kernels::rbf_gram(x.data(), n, x_prime.data(), m, d, inv_ls.data(),
                    params.signal_variance, k.data());
  return k;
}

KyyFactor factor_kyy(const Matrix& k_ff, double noise_variance) {
  const Eigen::Index n = k_ff.rows();
  KyyFactor fac;
  if (n == 0) return fac;
  const double mean_diag = k_ff.diagonal().mean() + noise_variance;
  Matrix k_yy = k_ff;
  k_yy.diagonal().array() += noise_variance;
  for (double rel = kJitterStartRel; rel <= kJitterMaxRel * 1.0000001;
       rel *= 10.0) {
    Matrix attempt = k_yy;
    attempt.diagonal().array() += rel * mean_diag;
    fac.llt.compute(attempt);
    if (fac.llt.info() == Eigen::Success) {
      fac.jitter = rel * mean_diag;
      fac.jitter_rel = rel;
      return fac;
    }
  }
  throw SingularKernelError(
      "kernel matrix is singular even at the maximum jitter level");
}

double log_marginal_likelihood(const GpData& data,
                               const GpHyperparams& params) {
  data.validate();
  params.validate();
  const Eigen::Index n = data.rows();
  if (n == 0) return 0.0;
  const Matrix k_ff = gram(data.inputs, data.inputs, params.kernel);
  const KyyFactor fac = factor_kyy(k_ff, params.noise_variance);
  const Vector r = data.outputs.array() - params.mean_constant;
  const Vector alpha = fac.llt.solve(r);
  const double log_det_half =
      fac.llt.matrixLLT().diagonal().array().log().sum();
  return -0.5 * r.dot(alpha) - log_det_half - 0.5 * double(n) * kLog2Pi;
}

GaussianPredictive posterior_latent(const GpData& data,
                                    const GpHyperparams& params,
                                    const Matrix& x_star) {
  data.validate();
  params.validate();
  if (data.rows() > 0 && data.inputs.cols() != x_star.cols())
    throw std::invalid_argument("posterior_latent: input dimension mismatch");
  const Eigen::Index m = x_star.rows();
  GaussianPredictive out;
  Matrix k_ss = gram(x_star, x_star, params.kernel);
  if (data.rows() == 0) {
    out.mean = Vector::Constant(m, params.mean_constant);
    out.covariance = 0.5 * (k_ss + k_ss.transpose());
    return out;
  }
  const Matrix k_ff = gram(data.inputs, data.inputs, params.kernel);
  const KyyFactor fac = factor_kyy(k_ff, params.noise_variance);
  const Matrix k_fs = gram(data.inputs, x_star, params.kernel);
  const Vector r = data.outputs.array() - params.mean_constant;
  const Vector alpha = fac.llt.solve(r);
  out.mean = (k_fs.transpose() * alpha).array() + params.mean_constant;
  const Matrix v = fac.llt.matrixL().solve(k_fs);
  Matrix cov = k_ss - v.transpose() * v;
  out.covariance = 0.5 * (cov + cov.transpose());
  return out;
}

GaussianPredictive posterior_output(const GpData& data,
                                    const GpHyperparams& params,
                                    const Matrix& x_star) {
  GaussianPredictive out = posterior_latent(data, params, x_star);
  out.covariance.diagonal().array() += params.noise_variance;
  return out;
}

NlmlGradients nlml_gradients(const GpData& data, const GpHyperparams& params,
                             bool with_input_gradients) {
  data.validate();
  params.validate();
  const Eigen::Index n = data.rows();
  const Eigen::Index d = data.inputs.cols();
  if (params.kernel.lengthscales.size() != d)
    throw std::invalid_argument("nlml_gradients: lengthscale count mismatch");

  NlmlGradients out;
  out.d_lengthscales = Vector::Zero(d);
  if (with_input_gradients) out.d_inputs = Matrix::Zero(n, d);
  if (n == 0) return out;

  const Matrix k_ff = gram(data.inputs, data.inputs, params.kernel);
  const KyyFactor fac = factor_kyy(k_ff, params.noise_variance);
  const Vector r = data.outputs.array() - params.mean_constant;
  const Vector alpha = fac.llt.solve(r);
  const double log_det_half =
      fac.llt.matrixLLT().diagonal().array().log().sum();
  out.value = 0.5 * r.dot(alpha) + log_det_half + 0.5 * double(n) * kLog2Pi;

  const Matrix k_inv = fac.llt.solve(Matrix::Identity(n, n));
  const Matrix b = 0.5 * (k_inv - alpha * alpha.transpose());
  const Matrix a = b.cwiseProduct(k_ff);
  const double tr_b = b.trace();

  // The jitter term c * (sigma_k^2 + sigma_y^2) * I moves with both variance
  // parameters, so it enters their gradients; this keeps finite-difference
  // probes of the exact objective consistent.
  out.d_signal_variance =
      a.sum() / params.kernel.signal_variance + fac.jitter_rel * tr_b;
  out.d_noise_variance = (1.0 + fac.jitter_rel) * tr_b;
  out.d_mean_constant = -alpha.sum();

  const int ni = static_cast<int>(n);
  for (Eigen::Index k = 0; k < d; ++k) {
    const double l = params.kernel.lengthscales[k];
    const double* xc = data.inputs.col(k).data();
    out.d_lengthscales[k] =
        (2.0 / (l * l * l)) *
        kernels::weighted_sqdiff_sum(a.data(), ni, ni, xc, xc);
    if (with_input_gradients) {
      Vector g = Vector::Zero(n);
      kernels::weighted_diff_rowsum(a.data(), ni, ni, xc, xc, g.data());
      out.d_inputs.col(k) = (-4.0 / (l * l)) * g;
    }
  }
  return out;
}

double softplus(double u) {
  if (u > 35.0) return u;
  return std::log1p(std::exp(u));
}

double softplus_inverse(double p) {
  if (!(p > 0.0))
    throw std::invalid_argument("softplus_inverse requires a positive value");
  if (p > 35.0) return p;
  return std::log(std::expm1(p));
}

double softplus_grad(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

Vector pack_hyperparams(const GpHyperparams& params) {
  params.validate();
  const Eigen::Index d = params.kernel.lengthscales.size();
  Vector u(d + 3);
  u[0] = softplus_inverse(params.kernel.signal_variance);
  for (Eigen::Index i = 0; i < d; ++i)
    u[1 + i] = softplus_inverse(params.kernel.lengthscales[i]);
  u[d + 1] = params.mean_constant;
  u[d + 2] = softplus_inverse(params.noise_variance);
  return u;
}

GpHyperparams unpack_hyperparams(const Vector& u) {
  if (u.size() < 3)
    throw std::invalid_argument("unconstrained vector needs >= 3 entries");
  const Eigen::Index d = u.size() - 3;
  GpHyperparams p;
  p.kernel.signal_variance = softplus(u[0]);
  p.kernel.lengthscales = Vector(d);
  for (Eigen::Index i = 0; i < d; ++i)
    p.kernel.lengthscales[i] = softplus(u[1 + i]);
  p.mean_constant = u[d + 1];
  p.noise_variance = softplus(u[d + 2]);
  return p;
}

std::pair<double, Vector> nlml_and_gradient(const GpData& data,
                                            const Vector& unconstrained) {
  const GpHyperparams params = unpack_hyperparams(unconstrained);
  const Eigen::Index d = unconstrained.size() - 3;
  if (data.inputs.cols() != d)
    throw std::invalid_argument("nlml_and_gradient: dimension mismatch");
  const NlmlGradients res = nlml_gradients(data, params, false);
  Vector g(unconstrained.size());
  g[0] = res.d_signal_variance * softplus_grad(unconstrained[0]);
  for (Eigen::Index i = 0; i < d; ++i)
    g[1 + i] = res.d_lengthscales[i] * softplus_grad(unconstrained[1 + i]);
  g[d + 1] = res.d_mean_constant;
  g[d + 2] = res.d_noise_variance * softplus_grad(unconstrained[d + 2]);
  return {res.value, std::move(g)};
}

}  // namespace begp
