#pragma once

namespace gwit {

// Must run before the first BLAS/LAPACK call. OpenBLAS's DYNAMIC_ARCH
// dispatch can misread a virtualized CPUID and fall back to generic SSE2
// kernels; when OPENBLAS_CORETYPE is unset this picks the widest kernel the
// CPU actually supports. Idempotent and cheap, safe to call from anywhere.
void init_blas_env();

}  // namespace gwit
