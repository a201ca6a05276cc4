#pragma once

// Data-parallel inner loops used by the quadrature code. Each kernel has a
// scalar reference implementation and, where the target supports it, a
// vectorized variant. The variant is chosen once at startup from the CPU
// features; RANDTREE_SIMD=scalar in the environment forces the reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace randtree::kernels {

enum class Isa { Scalar, Avx2, Neon };

std::string_view isa_name(Isa isa);

/// Instruction set used by the dispatched kernels in this process.
Isa active_isa();

/// Overrides the dispatch decision (tests use this to compare variants).
/// Requesting an ISA the host cannot run falls back to Scalar. Returns the
/// ISA actually selected.
Isa select_isa(Isa requested);

/// Sum of a[i] * b[i]. Spans must have equal length.
double dot(std::span<const double> a, std::span<const double> b);

/// Sum of v[i] * q^i, with the powers of q built by repeated multiplication.
double discounted_sum(std::span<const double> v, double q);

// Per-ISA entry points, exposed for equivalence tests.
namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double discounted_sum(const double* v, std::size_t n, double q);
}  // namespace scalar

namespace avx2 {
bool available();
double dot(const double* a, const double* b, std::size_t n);
double discounted_sum(const double* v, std::size_t n, double q);
}  // namespace avx2

namespace neon {
bool available();
double dot(const double* a, const double* b, std::size_t n);
double discounted_sum(const double* v, std::size_t n, double q);
}  // namespace neon

}  // namespace randtree::kernels
