// AArch64 variant; NEON is part of the base ISA there, so no runtime probe.

#include <arm_neon.h>

#include "randtree/kernels.hpp"

namespace randtree::kernels::neon {

namespace {
constexpr double kWeightFloor = 1e-300;
}  // namespace

bool available() { return true; }

double dot(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double discounted_sum(const double* v, std::size_t n, double q) {
  const double q2 = q * q;
  const double q4 = q2 * q2;
  const double init[2] = {1.0, q};
  float64x2_t w0 = vld1q_f64(init);
  float64x2_t w1 = vmulq_n_f64(w0, q2);
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  double lead = 1.0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(v + i), w0);
    acc1 = vfmaq_f64(acc1, vld1q_f64(v + i + 2), w1);
    w0 = vmulq_n_f64(w0, q4);
    w1 = vmulq_n_f64(w1, q4);
    lead *= q4;
    if (lead < kWeightFloor) return vaddvq_f64(vaddq_f64(acc0, acc1));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  double w = lead;
  for (; i < n; ++i) {
    s += v[i] * w;
    w *= q;
  }
  return s;
}

}  // namespace randtree::kernels::neon
