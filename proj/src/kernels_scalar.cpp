#include "caflow/kernels.hpp"

namespace caflow::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void matvec_scalar(const double* m, const double* x, double* y, std::size_t rows,
                   std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot_scalar(m + r * cols, x, cols);
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void lincomb_scalar(const double* base, double alpha, const double* x, double* out,
                    std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = base[i] + alpha * x[i];
}

void lincomb4_scalar(const double* base, double c1, const double* k1, double c2,
                     const double* k2, double c3, const double* k3, double c4,
                     const double* k4, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    out[i] = base[i] + (c1 * k1[i] + c2 * k2[i] + c3 * k3[i] + c4 * k4[i]);
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{"scalar", dot_scalar, matvec_scalar, axpy_scalar,
                                 lincomb_scalar, lincomb4_scalar};
  return table;
}

}  // namespace caflow::kernels
