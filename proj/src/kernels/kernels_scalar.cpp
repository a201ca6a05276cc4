#include "randtree/kernels.hpp"

namespace randtree::kernels::scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double discounted_sum(const double* v, std::size_t n, double q) {
  double s = 0.0;
  double w = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    s += v[i] * w;
    w *= q;
    if (w < 1e-300) break;
  }
  return s;
}

}  // namespace randtree::kernels::scalar
