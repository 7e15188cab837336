#pragma once

#include <cstdint>
#include <vector>

#include "begp/surrogate.hpp"

namespace begp {

struct ContinuousDesignSpace {
  Vector lower;
  Vector upper;

  [[nodiscard]] Eigen::Index dim() const { return lower.size(); }
  void validate() const;
  [[nodiscard]] Vector clamp(Vector x) const;
};

struct FiniteCandidate {
  Vector x;
  double y = 0.0;  // stored outcome, revealed when the candidate is selected
  bool evaluated = false;
};

struct FiniteDesignSet {
  std::vector<FiniteCandidate> candidates;

  [[nodiscard]] int n_unevaluated() const;
  void validate() const;
};

// Expected improvement for minimization, non-positive by convention:
//   EI(x) = (mu - y_min) * Phi(u) - sigma * phi(u),  u = (y_min - mu) / sigma
// with sigma = sqrt(max(variance, 1e-12)).  More negative is better.
double expected_improvement(double mean, double variance, double y_min);

// Standard normal density and CDF used by the closed form.
double normal_pdf(double u);
double normal_cdf(double u);

struct EiOptions {
  int restarts = 10;
  int ascent_steps = 100;
  double step_scale = 0.05;   // initial step as a fraction of box width
  double step_decay = 0.97;   // geometric decay per ascent step
  double fd_step = 1e-6;      // finite-difference probe as box-width fraction
  int latent_draws = 0;       // 0: use the surrogate's own default
};

struct EiResult {
  Vector x;
  double value = 0.0;  // EI at x (non-positive)
};

// Multi-start projected gradient descent on EI over the box.  Start points
// come from a seeded, shifted Halton sequence; each restart freezes its own
// latent draw set so the objective stays deterministic during ascent.
EiResult maximize_ei(const Surrogate& model, const TaskKey& task,
                     const ContinuousDesignSpace& space,
                     const EiOptions& options, std::uint64_t seed);

// Probability that each unevaluated candidate attains the minimum, estimated
// by joint sampling; ties go to the lowest index.  Entries for evaluated
// candidates are zero; the unevaluated entries sum to one.
Vector prob_best(const Surrogate& model, const TaskKey& task,
                 const FiniteDesignSet& designs, int n_samples,
                 std::uint64_t seed);

// Radical-inverse Halton point in [0,1)^dim, bases 2, 3, 5, ...
Vector halton_point(std::uint64_t index, Eigen::Index dim);

}  // namespace begp
