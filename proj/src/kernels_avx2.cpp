// AVX2 + FMA variants.  This translation unit is the only one compiled with
// -mavx2 -mfma; it must not be entered unless cpuid reports both features.
#if defined(BEGP_HAVE_AVX2)

#include <immintrin.h>

#include <cmath>
#include <cstddef>

#include "begp/kernels.hpp"

namespace begp::kernels::avx2 {

namespace {

// Rational-polynomial exp in double precision (Cephes-style), 4 lanes.
inline __m256d exp4(__m256d x) {
  const __m256d overflow = _mm256_cmp_pd(x, _mm256_set1_pd(709.782712893384), _CMP_GT_OQ);
  const __m256d underflow = _mm256_cmp_pd(x, _mm256_set1_pd(-708.3964185322641), _CMP_LT_OQ);

  const __m256d n = _mm256_round_pd(
      _mm256_mul_pd(x, _mm256_set1_pd(1.4426950408889634073599)),
      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(6.93145751953125e-1), x);
  r = _mm256_fnmadd_pd(n, _mm256_set1_pd(1.42860682030941723212e-6), r);
  const __m256d rr = _mm256_mul_pd(r, r);

  __m256d p = _mm256_set1_pd(1.26177193074810590878e-4);
  p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(3.02994407707441961300e-2));
  p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(9.99999999999999999910e-1));
  p = _mm256_mul_pd(p, r);

  __m256d q = _mm256_set1_pd(3.00198505138664455042e-6);
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.52448340349684104192e-3));
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.27265548208155028766e-1));
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.00000000000000000005e0));

  const __m256d e = _mm256_div_pd(p, _mm256_sub_pd(q, p));
  __m256d y = _mm256_fmadd_pd(_mm256_set1_pd(2.0), e, _mm256_set1_pd(1.0));

  // Scale by 2^n through the exponent bits; n stays within [-1075, 1025]
  // for non-flushed inputs, so the biased exponent fits.
  const __m128i n32 = _mm256_cvtpd_epi32(n);
  const __m256i n64 = _mm256_cvtepi32_epi64(n32);
  const __m256i bits =
      _mm256_slli_epi64(_mm256_add_epi64(n64, _mm256_set1_epi64x(1023)), 52);
  y = _mm256_mul_pd(y, _mm256_castsi256_pd(bits));

  y = _mm256_blendv_pd(y, _mm256_setzero_pd(), underflow);
  y = _mm256_blendv_pd(y, _mm256_set1_pd(HUGE_VAL), overflow);
  return y;
}

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

}  // namespace

void vexp(double* buf, std::size_t len) {
  std::size_t i = 0;
  for (; i + 4 <= len; i += 4)
    _mm256_storeu_pd(buf + i, exp4(_mm256_loadu_pd(buf + i)));
  for (; i < len; ++i) buf[i] = std::exp(buf[i]);
}

void rbf_gram(const double* x, int n, const double* y, int m, int d,
              const double* inv_ls, double sigma2, double* k_out) {
  for (int j = 0; j < m; ++j) {
    double* col = k_out + static_cast<std::size_t>(j) * n;
    int i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(col + i, _mm256_setzero_pd());
    for (; i < n; ++i) col[i] = 0.0;

    for (int k = 0; k < d; ++k) {
      const double* xc = x + static_cast<std::size_t>(k) * n;
      const __m256d yv = _mm256_set1_pd(y[static_cast<std::size_t>(k) * m + j]);
      const __m256d iv = _mm256_set1_pd(inv_ls[k]);
      const double yjk = y[static_cast<std::size_t>(k) * m + j];
      const double inv = inv_ls[k];
      i = 0;
      for (; i + 4 <= n; i += 4) {
        const __m256d t =
            _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(xc + i), yv), iv);
        _mm256_storeu_pd(col + i,
                         _mm256_fmadd_pd(t, t, _mm256_loadu_pd(col + i)));
      }
      for (; i < n; ++i) {
        const double t = (xc[i] - yjk) * inv;
        col[i] += t * t;
      }
    }

    const __m256d sv = _mm256_set1_pd(sigma2);
    i = 0;
    for (; i + 4 <= n; i += 4) {
      const __m256d neg =
          _mm256_sub_pd(_mm256_setzero_pd(), _mm256_loadu_pd(col + i));
      _mm256_storeu_pd(col + i, _mm256_mul_pd(sv, exp4(neg)));
    }
    for (; i < n; ++i) col[i] = sigma2 * std::exp(-col[i]);
  }
}

double weighted_sqdiff_sum(const double* a, int n, int m, const double* xc,
                           const double* yc) {
  __m256d acc = _mm256_setzero_pd();
  double tail = 0.0;
  for (int j = 0; j < m; ++j) {
    const double* col = a + static_cast<std::size_t>(j) * n;
    const __m256d yv = _mm256_set1_pd(yc[j]);
    int i = 0;
    for (; i + 4 <= n; i += 4) {
      const __m256d diff = _mm256_sub_pd(_mm256_loadu_pd(xc + i), yv);
      acc = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_loadu_pd(col + i), diff),
                            diff, acc);
    }
    for (; i < n; ++i) {
      const double diff = xc[i] - yc[j];
      tail += col[i] * diff * diff;
    }
  }
  return hsum(acc) + tail;
}

void weighted_diff_rowsum(const double* a, int n, int m, const double* xc,
                          const double* yc, double* g) {
  for (int j = 0; j < m; ++j) {
    const double* col = a + static_cast<std::size_t>(j) * n;
    const __m256d yv = _mm256_set1_pd(yc[j]);
    int i = 0;
    for (; i + 4 <= n; i += 4) {
      const __m256d diff = _mm256_sub_pd(_mm256_loadu_pd(xc + i), yv);
      _mm256_storeu_pd(g + i, _mm256_fmadd_pd(_mm256_loadu_pd(col + i), diff,
                                              _mm256_loadu_pd(g + i)));
    }
    for (; i < n; ++i) g[i] += col[i] * (xc[i] - yc[j]);
  }
}

}  // namespace begp::kernels::avx2

#endif  // BEGP_HAVE_AVX2
