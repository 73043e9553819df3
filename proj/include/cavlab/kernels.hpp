#pragma once
// Dense float64 inner-loop kernels with a scalar reference implementation and
// vector variants (AVX2 on x86-64, NEON on AArch64) selected at runtime.
//
// Every variant produces bit-identical results. Reductions use one canonical
// order: four interleaved partial sums (element i goes to lane i % 4) over the
// largest multiple-of-four prefix, folded as (l0 + l1) + (l2 + l3), followed by
// the remaining tail elements added left to right. Products and sums are
// separate roundings (no FMA); the build passes -ffp-contract=off.

#include <cstddef>
#include <string_view>

namespace cavlab::kernels {

struct KernelTable {
  std::string_view name;
  /// sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n) noexcept;
  /// sum_i x[i]
  double (*sum)(const double* x, std::size_t n) noexcept;
  /// y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n) noexcept;
  /// x[i] *= alpha
  void (*scal)(double alpha, double* x, std::size_t n) noexcept;
  /// out[i] = a[i] - b[i]
  void (*sub)(const double* a, const double* b, double* out, std::size_t n) noexcept;
};

const KernelTable& scalar() noexcept;
/// nullptr when the binary was built without the variant or the CPU lacks it.
const KernelTable* avx2() noexcept;
const KernelTable* neon() noexcept;

/// The table used by the rest of the library. Chosen on first use: the
/// CAVLAB_KERNELS environment variable ("scalar", "avx2", "neon") wins if the
/// variant is available, otherwise the widest supported variant.
const KernelTable& active() noexcept;

/// Overrides the active table. Returns false (and changes nothing) when the
/// named variant is unavailable.
bool select(std::string_view name) noexcept;

inline double dot(const double* a, const double* b, std::size_t n) noexcept {
  return active().dot(a, b, n);
}
inline double sum(const double* x, std::size_t n) noexcept { return active().sum(x, n); }
inline void axpy(double alpha, const double* x, double* y, std::size_t n) noexcept {
  active().axpy(alpha, x, y, n);
}
inline void scal(double alpha, double* x, std::size_t n) noexcept { active().scal(alpha, x, n); }
inline void sub(const double* a, const double* b, double* out, std::size_t n) noexcept {
  active().sub(a, b, out, n);
}

}  // namespace cavlab::kernels
