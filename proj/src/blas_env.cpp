#include "gwit/blas_env.hpp"

#include <cstdlib>
#include <mutex>

namespace gwit {

void init_blas_env() {
  static std::once_flag flag;
  std::call_once(flag, [] {
#if defined(__x86_64__) || defined(__i386__)
    if (std::getenv("OPENBLAS_CORETYPE") == nullptr) {
      __builtin_cpu_init();
      if (__builtin_cpu_supports("avx512f"))
        setenv("OPENBLAS_CORETYPE", "SKYLAKEX", 0);
      else if (__builtin_cpu_supports("avx2"))
        setenv("OPENBLAS_CORETYPE", "HASWELL", 0);
    }
#endif
  });
}

}  // namespace gwit
