#pragma once
#include <cstdint>

// Dense kernels. Every kernel has a serial reference implementation
// (suffix _serial) used by tests and the benchmark; the unsuffixed entry
// points are OpenMP-parallel and bit-deterministic for any thread count
// (each output element is produced by exactly one thread with a fixed
// floating-point evaluation order).

namespace hoin::kernels {

// Honors HOIN_THREADS (caps omp_get_max_threads). Call once at startup;
// safe to call repeatedly.
void set_threads_from_env();
int max_threads();

// C[m x n] = A[m x k] * B[k x n], or += when acc. Optional row-broadcast
// bias (length n) added on the non-accumulating path.
void mm_serial(const double* A, const double* B, double* C, int m, int k, int n,
               bool acc = false, const double* bias = nullptr);
void mm(const double* A, const double* B, double* C, int m, int k, int n,
        bool acc = false, const double* bias = nullptr);

// C[m x n] = A^T * B (or +=) where A is stored [k x m], B is [k x n].
// This is the grad-of-weights shape: gW += X^T * G.
void mm_AtB_serial(const double* A, const double* B, double* C, int m, int k, int n,
                   bool acc = false);
void mm_AtB(const double* A, const double* B, double* C, int m, int k, int n,
            bool acc = false);

// T[n x m] = A[m x n]^T
void transpose(const double* A, double* T, int m, int n);

// column sums: out[j] (+)= sum_i A[i*n + j]
void colsum(const double* A, double* out, int m, int n, bool acc = false);

// s[i] = sin(w0*x[i]), c[i] = cos(w0*x[i]). Vectorizable polynomial
// implementation (Cody-Waite reduction), |err| < ~4e-15 for |w0*x| < 1e5,
// falls back to libm beyond. c may be null.
void sincos_w0(const double* x, double w0, double* s, double* c, int64_t n);
void sincos_w0_serial(const double* x, double w0, double* s, double* c, int64_t n);

double dot(const double* a, const double* b, int64_t n);

} // namespace hoin::kernels
