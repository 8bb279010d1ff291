// NEON variants (aarch64, where Advanced SIMD is architectural).

#include <arm_neon.h>

#include "caflow/kernels.hpp"

namespace caflow::kernels {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0), acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void matvec_neon(const double* m, const double* x, double* y, std::size_t rows,
                 std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot_neon(m + r * cols, x, cols);
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t av = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), av, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void lincomb_neon(const double* base, double alpha, const double* x, double* out,
                  std::size_t n) {
  const float64x2_t av = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(out + i, vfmaq_f64(vld1q_f64(base + i), av, vld1q_f64(x + i)));
  for (; i < n; ++i) out[i] = base[i] + alpha * x[i];
}

void lincomb4_neon(const double* base, double c1, const double* k1, double c2,
                   const double* k2, double c3, const double* k3, double c4,
                   const double* k4, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t acc = vmulq_n_f64(vld1q_f64(k1 + i), c1);
    acc = vfmaq_n_f64(acc, vld1q_f64(k2 + i), c2);
    acc = vfmaq_n_f64(acc, vld1q_f64(k3 + i), c3);
    acc = vfmaq_n_f64(acc, vld1q_f64(k4 + i), c4);
    vst1q_f64(out + i, vaddq_f64(vld1q_f64(base + i), acc));
  }
  for (; i < n; ++i)
    out[i] = base[i] + (c1 * k1[i] + c2 * k2[i] + c3 * k3[i] + c4 * k4[i]);
}

}  // namespace

const KernelTable* neon_table() {
  static const KernelTable table{"neon", dot_neon, matvec_neon, axpy_neon, lincomb_neon,
                                 lincomb4_neon};
  return &table;
}

}  // namespace caflow::kernels
