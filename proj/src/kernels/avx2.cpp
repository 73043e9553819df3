// Compiled with -mavx2 only (no -mfma): the multiply and add stay separate
// instructions so every lane rounds exactly like the scalar reference.
#include <immintrin.h>

#include "cavlab/kernels.hpp"

namespace cavlab::kernels {
namespace {

inline double fold(__m256d acc) noexcept {
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

double dot_avx2(const double* a, const double* b, std::size_t n) noexcept {
  __m256d acc = _mm256_setzero_pd();
  const std::size_t body = n & ~std::size_t{3};
  for (std::size_t i = 0; i < body; i += 4) {
    const __m256d prod = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_add_pd(acc, prod);
  }
  double total = fold(acc);
  for (std::size_t i = body; i < n; ++i) total += a[i] * b[i];
  return total;
}

double sum_avx2(const double* x, std::size_t n) noexcept {
  __m256d acc = _mm256_setzero_pd();
  const std::size_t body = n & ~std::size_t{3};
  for (std::size_t i = 0; i < body; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double total = fold(acc);
  for (std::size_t i = body; i < n; ++i) total += x[i];
  return total;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) noexcept {
  const __m256d va = _mm256_set1_pd(alpha);
  const std::size_t body = n & ~std::size_t{3};
  for (std::size_t i = 0; i < body; i += 4) {
    const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
  }
  for (std::size_t i = body; i < n; ++i) y[i] += alpha * x[i];
}

void scal_avx2(double alpha, double* x, std::size_t n) noexcept {
  const __m256d va = _mm256_set1_pd(alpha);
  const std::size_t body = n & ~std::size_t{3};
  for (std::size_t i = 0; i < body; i += 4)
    _mm256_storeu_pd(x + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), va));
  for (std::size_t i = body; i < n; ++i) x[i] *= alpha;
}

void sub_avx2(const double* a, const double* b, double* out, std::size_t n) noexcept {
  const std::size_t body = n & ~std::size_t{3};
  for (std::size_t i = 0; i < body; i += 4)
    _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (std::size_t i = body; i < n; ++i) out[i] = a[i] - b[i];
}

}  // namespace

const KernelTable& avx2_table() noexcept {
  static const KernelTable table{"avx2", dot_avx2, sum_avx2, axpy_avx2, scal_avx2, sub_avx2};
  return table;
}

}  // namespace cavlab::kernels
