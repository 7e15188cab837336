#pragma once

#include <cmath>

#include "begp/gp.hpp"

namespace begp {

// Adam with bias correction.  The caller supplies the step size at each
// update so schedules stay outside this class.
class AdamState {
 public:
  explicit AdamState(Eigen::Index dim)
      : m_(Vector::Zero(dim)), v_(Vector::Zero(dim)) {}

  void update(Vector& params, const Vector& grad, double step_size) {
    ++t_;
    m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
    v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(beta1_, t_);
    const double c2 = 1.0 - std::pow(beta2_, t_);
    params -= (step_size / c1) * m_.cwiseQuotient(
                  ((v_ / c2).cwiseSqrt().array() + eps_).matrix());
  }

 private:
  Vector m_, v_;
  long t_ = 0;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
};

}  // namespace begp
