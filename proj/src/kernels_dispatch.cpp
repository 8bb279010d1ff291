#include <cstdlib>
#include <string_view>

#include "caflow/kernels.hpp"

namespace caflow::kernels {

#ifndef CAFLOW_HAVE_AVX2
const KernelTable* avx2_table() { return nullptr; }
#endif
#ifndef CAFLOW_HAVE_NEON
const KernelTable* neon_table() { return nullptr; }
#endif

namespace {

const KernelTable& select() {
  if (const char* env = std::getenv("CAFLOW_SIMD"); env && std::string_view(env) == "scalar")
    return scalar_table();
#if defined(CAFLOW_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return *avx2_table();
#endif
#if defined(CAFLOW_HAVE_NEON)
  return *neon_table();
#endif
  return scalar_table();
}

}  // namespace

const KernelTable& active() {
  static const KernelTable& table = select();
  return table;
}

}  // namespace caflow::kernels
