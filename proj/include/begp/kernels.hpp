#pragma once

#include <cstddef>
#include <string>

// Low-level dense kernels behind the GP math.  Every routine has a scalar
// reference implementation and, on x86-64 hardware that supports it, an AVX2
// variant selected at runtime.  All matrices are column-major and contiguous
// (leading dimension equals the row count), matching Eigen::MatrixXd storage.
namespace begp::kernels {

// k_out(i,j) = sigma2 * exp(-sum_d ((x(i,d) - y(j,d)) * inv_ls[d])^2).
// x is n-by-d, y is m-by-d, k_out is n-by-m.
void rbf_gram(const double* x, int n, const double* y, int m, int d,
              const double* inv_ls, double sigma2, double* k_out);

// sum_{i,j} a(i,j) * (xc[i] - yc[j])^2 for an n-by-m matrix a.
double weighted_sqdiff_sum(const double* a, int n, int m, const double* xc,
                           const double* yc);

// g[i] += sum_j a(i,j) * (xc[i] - yc[j]).  Caller owns initialization of g.
void weighted_diff_rowsum(const double* a, int n, int m, const double* xc,
                          const double* yc, double* g);

// buf[i] = exp(buf[i]) elementwise.
void vexp(double* buf, std::size_t len);

// Name of the implementation currently in use: "scalar" or "avx2".
const char* active_impl();

// Force a specific implementation ("auto", "scalar", "avx2").  Throws
// std::invalid_argument for unknown names and std::runtime_error when the
// requested variant is not available on this machine.  The BEGP_KERNELS
// environment variable applies the same override at startup.
void force_impl(const std::string& name);

namespace scalar {
void rbf_gram(const double* x, int n, const double* y, int m, int d,
              const double* inv_ls, double sigma2, double* k_out);
double weighted_sqdiff_sum(const double* a, int n, int m, const double* xc,
                           const double* yc);
void weighted_diff_rowsum(const double* a, int n, int m, const double* xc,
                          const double* yc, double* g);
void vexp(double* buf, std::size_t len);
}  // namespace scalar

#if defined(BEGP_HAVE_AVX2)
namespace avx2 {
void rbf_gram(const double* x, int n, const double* y, int m, int d,
              const double* inv_ls, double sigma2, double* k_out);
double weighted_sqdiff_sum(const double* a, int n, int m, const double* xc,
                           const double* yc);
void weighted_diff_rowsum(const double* a, int n, int m, const double* xc,
                          const double* yc, double* g);
void vexp(double* buf, std::size_t len);
}  // namespace avx2
#endif

}  // namespace begp::kernels
