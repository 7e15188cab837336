#include <cmath>

#include "begp/kernels.hpp"

namespace begp::kernels::scalar {

void rbf_gram(const double* x, int n, const double* y, int m, int d,
              const double* inv_ls, double sigma2, double* k_out) {
  for (int j = 0; j < m; ++j) {
    double* col = k_out + static_cast<std::size_t>(j) * n;
    for (int i = 0; i < n; ++i) col[i] = 0.0;
    for (int k = 0; k < d; ++k) {
      const double* xc = x + static_cast<std::size_t>(k) * n;
      const double yjk = y[static_cast<std::size_t>(k) * m + j];
      const double inv = inv_ls[k];
      for (int i = 0; i < n; ++i) {
        const double t = (xc[i] - yjk) * inv;
        col[i] += t * t;
      }
    }
    for (int i = 0; i < n; ++i) col[i] = sigma2 * std::exp(-col[i]);
  }
}

double weighted_sqdiff_sum(const double* a, int n, int m, const double* xc,
                           const double* yc) {
  double acc = 0.0;
  for (int j = 0; j < m; ++j) {
    const double* col = a + static_cast<std::size_t>(j) * n;
    const double yj = yc[j];
    for (int i = 0; i < n; ++i) {
      const double diff = xc[i] - yj;
      acc += col[i] * diff * diff;
    }
  }
  return acc;
}

void weighted_diff_rowsum(const double* a, int n, int m, const double* xc,
                          const double* yc, double* g) {
  for (int j = 0; j < m; ++j) {
    const double* col = a + static_cast<std::size_t>(j) * n;
    const double yj = yc[j];
    for (int i = 0; i < n; ++i) g[i] += col[i] * (xc[i] - yj);
  }
}

void vexp(double* buf, std::size_t len) {
  for (std::size_t i = 0; i < len; ++i) buf[i] = std::exp(buf[i]);
}

}  // namespace begp::kernels::scalar
