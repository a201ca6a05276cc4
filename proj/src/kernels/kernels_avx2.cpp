// Built with -mavx2 -mfma; only called after a runtime CPU check.

#include <immintrin.h>

#include "randtree/kernels.hpp"

namespace randtree::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

// Below this weight every remaining term is negligible and the powers would
// only walk into subnormals.
constexpr double kWeightFloor = 1e-300;

}  // namespace

bool available() {
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  __m256d acc3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), acc2);
    acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), acc3);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double s = hsum(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double discounted_sum(const double* v, std::size_t n, double q) {
  const double q2 = q * q;
  const double q4 = q2 * q2;
  const double q8 = q4 * q4;
  __m256d w0 = _mm256_set_pd(q2 * q, q2, q, 1.0);
  __m256d w1 = _mm256_mul_pd(w0, _mm256_set1_pd(q4));
  const __m256d step = _mm256_set1_pd(q8);
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  double lead = 1.0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(v + i), w0, acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(v + i + 4), w1, acc1);
    w0 = _mm256_mul_pd(w0, step);
    w1 = _mm256_mul_pd(w1, step);
    lead *= q8;
    if (lead < kWeightFloor) return hsum(_mm256_add_pd(acc0, acc1));
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  double w = lead;
  for (; i < n; ++i) {
    s += v[i] * w;
    w *= q;
  }
  return s;
}

}  // namespace randtree::kernels::avx2
