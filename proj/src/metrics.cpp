#include "begp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace begp {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

double metric_rmse(const Vector& y_true, const Vector& y_pred) {
  if (y_true.size() != y_pred.size() || y_true.size() == 0)
    throw std::invalid_argument("metric_rmse: length mismatch or empty");
  return std::sqrt((y_true - y_pred).squaredNorm() /
                   static_cast<double>(y_true.size()));
}

double metric_mae(const Vector& y_true, const Vector& y_pred) {
  if (y_true.size() != y_pred.size() || y_true.size() == 0)
    throw std::invalid_argument("metric_mae: length mismatch or empty");
  return (y_true - y_pred).cwiseAbs().sum() /
         static_cast<double>(y_true.size());
}

double metric_mnlp(const Vector& y_true,
                   const std::vector<std::pair<double, double>>& marginals) {
  if (static_cast<std::size_t>(y_true.size()) != marginals.size() ||
      marginals.empty())
    throw std::invalid_argument("metric_mnlp: length mismatch or empty");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < y_true.size(); ++i) {
    const auto& [mean, variance] = marginals[static_cast<std::size_t>(i)];
    if (!(variance > 0.0))
      throw std::invalid_argument("metric_mnlp: non-positive variance");
    const double r = y_true[i] - mean;
    acc += 0.5 * (kLog2Pi + std::log(variance) + r * r / variance);
  }
  return acc / static_cast<double>(y_true.size());
}

double quantile_linear(std::vector<double> values, double p) {
  if (values.empty())
    throw std::invalid_argument("quantile_linear: empty sample");
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("quantile_linear: p outside [0,1]");
  std::sort(values.begin(), values.end());
  const double h = p * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  const double w = h - static_cast<double>(lo);
  return values[lo] + w * (values[lo + 1] - values[lo]);
}

}  // namespace begp
