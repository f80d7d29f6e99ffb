#include <cstdlib>
#include <string>

#include "kernels_impl.hpp"

namespace minerlink::kernels {

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
  }
  return "unknown";
}

const KernelTable& scalar_table() {
  static const KernelTable table{Isa::Scalar,
                                 &scalar::affine_rows,
                                 &scalar::weighted_column_sums,
                                 &scalar::sum,
                                 &scalar::standardize,
                                 &scalar::axpy};
  return table;
}

const KernelTable* avx2_table() {
#if defined(MINERLINK_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2");
  static const KernelTable table{Isa::Avx2,
                                 &avx2::affine_rows,
                                 &avx2::weighted_column_sums,
                                 &avx2::sum,
                                 &avx2::standardize,
                                 &avx2::axpy};
  return supported ? &table : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() {
  static const KernelTable& chosen = [&]() -> const KernelTable& {
    const char* forced = std::getenv("MINERLINK_SIMD");
    if (forced != nullptr && std::string(forced) == "scalar") {
      return scalar_table();
    }
    if (const KernelTable* t = avx2_table()) return *t;
    return scalar_table();
  }();
  return chosen;
}

}  // namespace minerlink::kernels
