#include "begp/kernels.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace begp::kernels {

namespace {

struct Impl {
  const char* name;
  void (*rbf_gram)(const double*, int, const double*, int, int, const double*,
                   double, double*);
  double (*weighted_sqdiff_sum)(const double*, int, int, const double*,
                                const double*);
  void (*weighted_diff_rowsum)(const double*, int, int, const double*,
                               const double*, double*);
  void (*vexp)(double*, std::size_t);
};

constexpr Impl kScalar{"scalar", &scalar::rbf_gram, &scalar::weighted_sqdiff_sum,
                       &scalar::weighted_diff_rowsum, &scalar::vexp};

#if defined(BEGP_HAVE_AVX2)
constexpr Impl kAvx2{"avx2", &avx2::rbf_gram, &avx2::weighted_sqdiff_sum,
                     &avx2::weighted_diff_rowsum, &avx2::vexp};
#endif

bool avx2_supported() {
#if defined(BEGP_HAVE_AVX2)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Impl pick(const std::string& name) {
  if (name == "scalar") return kScalar;
  if (name == "avx2") {
#if defined(BEGP_HAVE_AVX2)
    if (avx2_supported()) return kAvx2;
#endif
    throw std::runtime_error("kernels: avx2 not available on this machine");
  }
  if (name == "auto") {
#if defined(BEGP_HAVE_AVX2)
    if (avx2_supported()) return kAvx2;
#endif
    return kScalar;
  }
  throw std::invalid_argument("kernels: unknown implementation '" + name + "'");
}

Impl& current() {
  static Impl impl = [] {
    const char* env = std::getenv("BEGP_KERNELS");
    return pick(env ? env : "auto");
  }();
  return impl;
}

}  // namespace

const char* active_impl() { return current().name; }

void force_impl(const std::string& name) { current() = pick(name); }

void rbf_gram(const double* x, int n, const double* y, int m, int d,
              const double* inv_ls, double sigma2, double* k_out) {
  current().rbf_gram(x, n, y, m, d, inv_ls, sigma2, k_out);
}

double weighted_sqdiff_sum(const double* a, int n, int m, const double* xc,
                           const double* yc) {
  return current().weighted_sqdiff_sum(a, n, m, xc, yc);
}

void weighted_diff_rowsum(const double* a, int n, int m, const double* xc,
                          const double* yc, double* g) {
  current().weighted_diff_rowsum(a, n, m, xc, yc, g);
}

void vexp(double* buf, std::size_t len) { current().vexp(buf, len); }

}  // namespace begp::kernels
