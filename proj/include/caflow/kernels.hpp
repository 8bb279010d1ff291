#pragma once
// Data-parallel inner loops used by the differentiation and time-stepping
// code. Each kernel has a scalar reference implementation and, where the
// target supports it, an AVX2 (x86-64) or NEON (aarch64) variant. The active
// table is chosen once at startup from CPU features; CAFLOW_SIMD=scalar in
// the environment forces the reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace caflow::kernels {

struct KernelTable {
  std::string_view name;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y = M x, M row-major rows x cols
  void (*matvec)(const double* m, const double* x, double* y, std::size_t rows,
                 std::size_t cols);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // out = base + alpha * x
  void (*lincomb)(const double* base, double alpha, const double* x, double* out,
                  std::size_t n);
  // out = base + c1*k1 + c2*k2 + c3*k3 + c4*k4 (RK4 update)
  void (*lincomb4)(const double* base, double c1, const double* k1, double c2,
                   const double* k2, double c3, const double* k3, double c4,
                   const double* k4, double* out, std::size_t n);
};

const KernelTable& scalar_table();
const KernelTable* avx2_table();  // nullptr when not compiled in
const KernelTable* neon_table();  // nullptr when not compiled in

// Best table supported by the running CPU (honours CAFLOW_SIMD).
const KernelTable& active();

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline void matvec(std::span<const double> m, std::span<const double> x, std::span<double> y) {
  active().matvec(m.data(), x.data(), y.data(), y.size(), x.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), y.size());
}
inline void lincomb(std::span<const double> base, double alpha, std::span<const double> x,
                    std::span<double> out) {
  active().lincomb(base.data(), alpha, x.data(), out.data(), out.size());
}

}  // namespace caflow::kernels
