// AArch64 variant. Two float64x2 accumulators hold lanes {0,1} and {2,3} of the
// canonical four-lane order.
#include <arm_neon.h>

#include "cavlab/kernels.hpp"

namespace cavlab::kernels {
namespace {

inline double fold(float64x2_t lo, float64x2_t hi) noexcept {
  return (vgetq_lane_f64(lo, 0) + vgetq_lane_f64(lo, 1)) +
         (vgetq_lane_f64(hi, 0) + vgetq_lane_f64(hi, 1));
}

double dot_neon(const double* a, const double* b, std::size_t n) noexcept {
  float64x2_t lo = vdupq_n_f64(0.0), hi = vdupq_n_f64(0.0);
  const std::size_t body = n & ~std::size_t{3};
  for (std::size_t i = 0; i < body; i += 4) {
    lo = vaddq_f64(lo, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    hi = vaddq_f64(hi, vmulq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2)));
  }
  double total = fold(lo, hi);
  for (std::size_t i = body; i < n; ++i) total += a[i] * b[i];
  return total;
}

double sum_neon(const double* x, std::size_t n) noexcept {
  float64x2_t lo = vdupq_n_f64(0.0), hi = vdupq_n_f64(0.0);
  const std::size_t body = n & ~std::size_t{3};
  for (std::size_t i = 0; i < body; i += 4) {
    lo = vaddq_f64(lo, vld1q_f64(x + i));
    hi = vaddq_f64(hi, vld1q_f64(x + i + 2));
  }
  double total = fold(lo, hi);
  for (std::size_t i = body; i < n; ++i) total += x[i];
  return total;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) noexcept {
  const float64x2_t va = vdupq_n_f64(alpha);
  const std::size_t body = n & ~std::size_t{1};
  for (std::size_t i = 0; i < body; i += 2)
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i))));
  for (std::size_t i = body; i < n; ++i) y[i] += alpha * x[i];
}

void scal_neon(double alpha, double* x, std::size_t n) noexcept {
  const float64x2_t va = vdupq_n_f64(alpha);
  const std::size_t body = n & ~std::size_t{1};
  for (std::size_t i = 0; i < body; i += 2) vst1q_f64(x + i, vmulq_f64(vld1q_f64(x + i), va));
  for (std::size_t i = body; i < n; ++i) x[i] *= alpha;
}

void sub_neon(const double* a, const double* b, double* out, std::size_t n) noexcept {
  const std::size_t body = n & ~std::size_t{1};
  for (std::size_t i = 0; i < body; i += 2)
    vst1q_f64(out + i, vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (std::size_t i = body; i < n; ++i) out[i] = a[i] - b[i];
}

}  // namespace

const KernelTable& neon_table() noexcept {
  static const KernelTable table{"neon", dot_neon, sum_neon, axpy_neon, scal_neon, sub_neon};
  return table;
}

}  // namespace cavlab::kernels
