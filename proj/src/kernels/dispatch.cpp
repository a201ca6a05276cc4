#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "randtree/kernels.hpp"

namespace randtree::kernels {

#ifndef RANDTREE_HAVE_AVX2
namespace avx2 {
bool available() { return false; }
double dot(const double* a, const double* b, std::size_t n) { return scalar::dot(a, b, n); }
double discounted_sum(const double* v, std::size_t n, double q) {
  return scalar::discounted_sum(v, n, q);
}
}  // namespace avx2
#endif

#ifndef RANDTREE_HAVE_NEON
namespace neon {
bool available() { return false; }
double dot(const double* a, const double* b, std::size_t n) { return scalar::dot(a, b, n); }
double discounted_sum(const double* v, std::size_t n, double q) {
  return scalar::discounted_sum(v, n, q);
}
}  // namespace neon
#endif

namespace {

bool runnable(Isa isa) {
  switch (isa) {
    case Isa::Avx2:
      return avx2::available();
    case Isa::Neon:
      return neon::available();
    case Isa::Scalar:
      return true;
  }
  return false;
}

Isa detect() {
  if (const char* env = std::getenv("RANDTREE_SIMD")) {
    if (std::string(env) == "scalar") return Isa::Scalar;
  }
  if (runnable(Isa::Avx2)) return Isa::Avx2;
  if (runnable(Isa::Neon)) return Isa::Neon;
  return Isa::Scalar;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
    case Isa::Neon:
      return "neon";
  }
  return "unknown";
}

Isa active_isa() { return current().load(std::memory_order_relaxed); }

Isa select_isa(Isa requested) {
  Isa chosen = runnable(requested) ? requested : Isa::Scalar;
  current().store(chosen, std::memory_order_relaxed);
  return chosen;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("kernels::dot: length mismatch");
  switch (active_isa()) {
    case Isa::Avx2:
      return avx2::dot(a.data(), b.data(), a.size());
    case Isa::Neon:
      return neon::dot(a.data(), b.data(), a.size());
    case Isa::Scalar:
      break;
  }
  return scalar::dot(a.data(), b.data(), a.size());
}

double discounted_sum(std::span<const double> v, double q) {
  switch (active_isa()) {
    case Isa::Avx2:
      return avx2::discounted_sum(v.data(), v.size(), q);
    case Isa::Neon:
      return neon::discounted_sum(v.data(), v.size(), q);
    case Isa::Scalar:
      break;
  }
  return scalar::discounted_sum(v.data(), v.size(), q);
}

}  // namespace randtree::kernels
