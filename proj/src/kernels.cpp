#include "scl/kernels.hpp"

#include <cstdlib>
#include <cstring>
#include <string>

#include "scl/error.hpp"

namespace scl::kernels {

extern const Ops kScalarOps;
#if defined(SCL_HAVE_AVX2)
extern const Ops kAvx2Ops;
#endif

bool avx2_available() {
#if defined(SCL_HAVE_AVX2)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Ops* by_name(const char* name) {
  if (std::strcmp(name, "scalar") == 0) return &kScalarOps;
#if defined(SCL_HAVE_AVX2)
  if (std::strcmp(name, "avx2") == 0 && avx2_available()) return &kAvx2Ops;
#endif
  return nullptr;
}

const Ops& active() {
  static const Ops* ops = [] {
    if (const char* env = std::getenv("SCL_KERNELS")) {
      const Ops* o = by_name(env);
      if (!o)
        fail(errc::config, std::string("SCL_KERNELS=") + env +
                               " is unknown or unsupported on this CPU");
      return o;
    }
#if defined(SCL_HAVE_AVX2)
    if (avx2_available()) return &kAvx2Ops;
#endif
    return &kScalarOps;
  }();
  return *ops;
}

}  // namespace scl::kernels
