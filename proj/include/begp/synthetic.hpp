#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "begp/surrogate.hpp"

namespace begp {

enum class Family { toy, forrester };

struct SyntheticTask {
  Family family = Family::toy;
  Vector theta;

  [[nodiscard]] double operator()(double x) const;
};

// z = theta_1 + 4x - 4;  eta = 0.1 z^4 - z^2 + (2 + theta_2) sin(2 z).
double toy_eta(double x, const Vector& theta);

// (6x - 2)^2 sin(12x - 4).
double forrester(double x);

// theta_1 * forrester(x) + theta_2 * (x - 0.5) + theta_3.
double forrester_family(double x, const Vector& theta);

// Random tasks: toy draws theta ~ U[0,1]^2; forrester draws
// theta ~ U[0,1] x U[0,10] x U[-5,5], except the first task, which is always
// the low-fidelity variant (0.5, 10, -5).
std::vector<SyntheticTask> sample_task_family(Family family, int n_tasks,
                                              std::uint64_t seed);

SyntheticTask high_fidelity_forrester();
SyntheticTask sample_current_task(Family family, std::uint64_t seed);

// Legacy training rows: per task, points_per_task x-values drawn uniformly in
// [0, 1] with exact outcomes.  Tokens are "task_0", "task_1", ... in order.
MultiTaskData build_legacy_dataset(const std::vector<SyntheticTask>& tasks,
                                   int points_per_task, std::uint64_t seed);

// Minimum of f over a uniform grid on [lo, hi] with n points.
double grid_min(const std::function<double(double)>& f, double lo, double hi,
                int n, double* argmin = nullptr);

}  // namespace begp
