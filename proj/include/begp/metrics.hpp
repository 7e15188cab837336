#pragma once

#include <utility>
#include <vector>

#include "begp/gp.hpp"

namespace begp {

double metric_rmse(const Vector& y_true, const Vector& y_pred);
double metric_mae(const Vector& y_true, const Vector& y_pred);

// Mean of -log N(y_i; mean_i, variance_i) over the marginals.
double metric_mnlp(const Vector& y_true,
                   const std::vector<std::pair<double, double>>& marginals);

// Empirical quantile with linear interpolation between order statistics.
double quantile_linear(std::vector<double> values, double p);

}  // namespace begp
