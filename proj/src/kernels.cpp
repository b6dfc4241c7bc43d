#include "hoin/kernels.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <omp.h>

namespace hoin::kernels {

void set_threads_from_env() {
    if (const char* e = std::getenv("HOIN_THREADS")) {
        int v = std::atoi(e);
        if (v > 0) omp_set_num_threads(v);
    }
}

int max_threads() { return omp_get_max_threads(); }

// ---------------------------------------------------------------- matmul

namespace {

// Wide vector type; GCC lowers it to the best available ISA (zmm on AVX-512,
// split ymm pairs elsewhere). aligned(8) makes loads/stores unaligned-safe.
typedef double v8 __attribute__((vector_size(64), aligned(8)));

inline v8 loadu(const double* p) { return *(const v8*)p; }
inline void storeu(double* p, v8 v) { *(v8*)p = v; }
inline v8 splat(double x) { return v8{} + x; }

// 4-row register-blocked micro kernel: C rows live in accumulator registers
// for the whole k loop (4 rows x 32 columns per panel), so C is touched once.
// Per-element evaluation order is k-ascending with one fused chain per
// element -- the same arithmetic as the serial reference -- so results are
// bit-identical for any thread count.  a_stride is the distance between the
// four A rows (k for mm, 1 with row-major steps of m handled by the caller's
// pointer choice for AtB).
template <bool kContig>
inline void mm_block4(const double* __restrict A, int a_stride,
                      const double* __restrict B, double* __restrict C, int k,
                      int n, bool acc, const double* __restrict bias) {
    // kContig: A rows are contiguous runs (mm, stride a_stride = k, step 1);
    // otherwise A is [k x m] and the four entries per p sit at A[p*m + r].
    const double* a0 = A;
    const double* a1 = A + (kContig ? (size_t)a_stride : 1);
    const double* a2 = A + (kContig ? (size_t)2 * a_stride : 2);
    const double* a3 = A + (kContig ? (size_t)3 * a_stride : 3);
    const size_t astep = kContig ? 1 : (size_t)a_stride;
    int j0 = 0;
    for (; j0 + 32 <= n; j0 += 32) {
        v8 c00, c01, c02, c03, c10, c11, c12, c13;
        v8 c20, c21, c22, c23, c30, c31, c32, c33;
        if (acc) {
            const double* r0 = C + j0;
            const double* r1 = C + (size_t)n + j0;
            const double* r2 = C + (size_t)2 * n + j0;
            const double* r3 = C + (size_t)3 * n + j0;
            c00 = loadu(r0), c01 = loadu(r0 + 8), c02 = loadu(r0 + 16), c03 = loadu(r0 + 24);
            c10 = loadu(r1), c11 = loadu(r1 + 8), c12 = loadu(r1 + 16), c13 = loadu(r1 + 24);
            c20 = loadu(r2), c21 = loadu(r2 + 8), c22 = loadu(r2 + 16), c23 = loadu(r2 + 24);
            c30 = loadu(r3), c31 = loadu(r3 + 8), c32 = loadu(r3 + 16), c33 = loadu(r3 + 24);
        } else if (bias) {
            const v8 b0 = loadu(bias + j0), b1 = loadu(bias + j0 + 8);
            const v8 b2 = loadu(bias + j0 + 16), b3 = loadu(bias + j0 + 24);
            c00 = b0, c01 = b1, c02 = b2, c03 = b3;
            c10 = b0, c11 = b1, c12 = b2, c13 = b3;
            c20 = b0, c21 = b1, c22 = b2, c23 = b3;
            c30 = b0, c31 = b1, c32 = b2, c33 = b3;
        } else {
            c00 = c01 = c02 = c03 = v8{};
            c10 = c11 = c12 = c13 = v8{};
            c20 = c21 = c22 = c23 = v8{};
            c30 = c31 = c32 = c33 = v8{};
        }
        for (int p = 0; p < k; ++p) {
            const double* __restrict bp = B + (size_t)p * n + j0;
            const v8 b0 = loadu(bp), b1 = loadu(bp + 8);
            const v8 b2 = loadu(bp + 16), b3 = loadu(bp + 24);
            v8 a;
            a = splat(a0[p * astep]);
            c00 += a * b0, c01 += a * b1, c02 += a * b2, c03 += a * b3;
            a = splat(a1[p * astep]);
            c10 += a * b0, c11 += a * b1, c12 += a * b2, c13 += a * b3;
            a = splat(a2[p * astep]);
            c20 += a * b0, c21 += a * b1, c22 += a * b2, c23 += a * b3;
            a = splat(a3[p * astep]);
            c30 += a * b0, c31 += a * b1, c32 += a * b2, c33 += a * b3;
        }
        double* r0 = C + j0;
        double* r1 = C + (size_t)n + j0;
        double* r2 = C + (size_t)2 * n + j0;
        double* r3 = C + (size_t)3 * n + j0;
        storeu(r0, c00), storeu(r0 + 8, c01), storeu(r0 + 16, c02), storeu(r0 + 24, c03);
        storeu(r1, c10), storeu(r1 + 8, c11), storeu(r1 + 16, c12), storeu(r1 + 24, c13);
        storeu(r2, c20), storeu(r2 + 8, c21), storeu(r2 + 16, c22), storeu(r2 + 24, c23);
        storeu(r3, c30), storeu(r3 + 8, c31), storeu(r3 + 16, c32), storeu(r3 + 24, c33);
    }
    for (; j0 + 8 <= n; j0 += 8) {
        v8 c0, c1, c2, c3;
        if (acc) {
            c0 = loadu(C + j0), c1 = loadu(C + (size_t)n + j0);
            c2 = loadu(C + (size_t)2 * n + j0), c3 = loadu(C + (size_t)3 * n + j0);
        } else if (bias) {
            c0 = c1 = c2 = c3 = loadu(bias + j0);
        } else {
            c0 = c1 = c2 = c3 = v8{};
        }
        for (int p = 0; p < k; ++p) {
            const v8 b = loadu(B + (size_t)p * n + j0);
            c0 += splat(a0[p * astep]) * b;
            c1 += splat(a1[p * astep]) * b;
            c2 += splat(a2[p * astep]) * b;
            c3 += splat(a3[p * astep]) * b;
        }
        storeu(C + j0, c0), storeu(C + (size_t)n + j0, c1);
        storeu(C + (size_t)2 * n + j0, c2), storeu(C + (size_t)3 * n + j0, c3);
    }
    for (; j0 < n; ++j0) {
        double t0, t1, t2, t3;
        if (acc) {
            t0 = C[j0], t1 = C[(size_t)n + j0];
            t2 = C[(size_t)2 * n + j0], t3 = C[(size_t)3 * n + j0];
        } else {
            t0 = t1 = t2 = t3 = bias ? bias[j0] : 0.0;
        }
        for (int p = 0; p < k; ++p) {
            const double b = B[(size_t)p * n + j0];
            t0 = std::fma(a0[p * astep], b, t0);
            t1 = std::fma(a1[p * astep], b, t1);
            t2 = std::fma(a2[p * astep], b, t2);
            t3 = std::fma(a3[p * astep], b, t3);
        }
        C[j0] = t0, C[(size_t)n + j0] = t1;
        C[(size_t)2 * n + j0] = t2, C[(size_t)3 * n + j0] = t3;
    }
}

inline void mm_block1(const double* __restrict A, const double* __restrict B,
                      double* __restrict C, int k, int n) {
    for (int p = 0; p < k; ++p) {
        const double a0 = A[p];
        const double* __restrict bp = B + (size_t)p * n;
#pragma omp simd
        for (int j = 0; j < n; ++j) C[j] = std::fma(a0, bp[j], C[j]);
    }
}

inline void init_rows(double* C, int rows, int n, bool acc, const double* bias) {
    if (acc) return;
    for (int r = 0; r < rows; ++r) {
        if (bias)
            std::memcpy(C + (size_t)r * n, bias, sizeof(double) * (size_t)n);
        else
            std::memset(C + (size_t)r * n, 0, sizeof(double) * (size_t)n);
    }
}

inline void atb_block1(const double* __restrict A, const double* __restrict B,
                       double* __restrict C, int m, int k, int n) {
    for (int p = 0; p < k; ++p) {
        const double a0 = A[(size_t)p * m];
        const double* __restrict bp = B + (size_t)p * n;
#pragma omp simd
        for (int j = 0; j < n; ++j) C[j] = std::fma(a0, bp[j], C[j]);
    }
}

constexpr int kBlockRows = 8;

} // namespace

void mm(const double* A, const double* B, double* C, int m, int k, int n,
        bool acc, const double* bias) {
    const int nblocks = (m + kBlockRows - 1) / kBlockRows;
#pragma omp parallel for schedule(static)
    for (int blk = 0; blk < nblocks; ++blk) {
        const int i0 = blk * kBlockRows;
        const int rows = std::min(kBlockRows, m - i0);
        const double* Ab = A + (size_t)i0 * k;
        double* Cb = C + (size_t)i0 * n;
        int r = 0;
        for (; r + 4 <= rows; r += 4)
            mm_block4<true>(Ab + (size_t)r * k, k, B, Cb + (size_t)r * n, k, n, acc, bias);
        if (r < rows) {
            init_rows(Cb + (size_t)r * n, rows - r, n, acc, bias);
            for (; r < rows; ++r)
                mm_block1(Ab + (size_t)r * k, B, Cb + (size_t)r * n, k, n);
        }
    }
}

// The serial references spell out the per-element contract -- one fused
// multiply-add per k step, k ascending -- that every blocked variant above
// must reproduce bit-for-bit.
void mm_serial(const double* A, const double* B, double* C, int m, int k, int n,
               bool acc, const double* bias) {
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            double t = acc ? C[(size_t)i * n + j] : (bias ? bias[j] : 0.0);
            for (int p = 0; p < k; ++p)
                t = std::fma(A[(size_t)i * k + p], B[(size_t)p * n + j], t);
            C[(size_t)i * n + j] = t;
        }
    }
}

void mm_AtB(const double* A, const double* B, double* C, int m, int k, int n,
            bool acc) {
    // Chunk the long reduction so the streamed A/B slices stay cache-resident
    // across the row blocks (C is typically small: weight gradients).  Chunks
    // resume each element's fma chain through memory, so k order -- and the
    // result -- is unchanged.
    constexpr int kChunk = 512;
    const int nblocks = (m + kBlockRows - 1) / kBlockRows;
    for (int p0 = 0; p0 < k; p0 += kChunk) {
        const int kk = std::min(kChunk, k - p0);
        const bool a2 = acc || p0 > 0;
        const double* As = A + (size_t)p0 * m;
        const double* Bs = B + (size_t)p0 * n;
#pragma omp parallel for schedule(static)
        for (int blk = 0; blk < nblocks; ++blk) {
            const int i0 = blk * kBlockRows;
            const int rows = std::min(kBlockRows, m - i0);
            double* Cb = C + (size_t)i0 * n;
            int r = 0;
            for (; r + 4 <= rows; r += 4)
                mm_block4<false>(As + i0 + r, m, Bs, Cb + (size_t)r * n, kk, n, a2, nullptr);
            if (r < rows) {
                init_rows(Cb + (size_t)r * n, rows - r, n, a2, nullptr);
                for (; r < rows; ++r)
                    atb_block1(As + i0 + r, Bs, Cb + (size_t)r * n, m, kk, n);
            }
        }
    }
}

void mm_AtB_serial(const double* A, const double* B, double* C, int m, int k, int n,
                   bool acc) {
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            double t = acc ? C[(size_t)i * n + j] : 0.0;
            for (int p = 0; p < k; ++p)
                t = std::fma(A[(size_t)p * m + i], B[(size_t)p * n + j], t);
            C[(size_t)i * n + j] = t;
        }
    }
}

void transpose(const double* A, double* T, int m, int n) {
    constexpr int BS = 32;
    for (int ib = 0; ib < m; ib += BS)
        for (int jb = 0; jb < n; jb += BS) {
            const int ie = std::min(ib + BS, m), je = std::min(jb + BS, n);
            for (int i = ib; i < ie; ++i)
                for (int j = jb; j < je; ++j) T[(size_t)j * m + i] = A[(size_t)i * n + j];
        }
}

void colsum(const double* A, double* out, int m, int n, bool acc) {
    if (!acc) std::memset(out, 0, sizeof(double) * (size_t)n);
    for (int i = 0; i < m; ++i) {
        const double* ai = A + (size_t)i * n;
#pragma omp simd
        for (int j = 0; j < n; ++j) out[j] += ai[j];
    }
}

double dot(const double* a, const double* b, int64_t n) {
    double t = 0.0;
    for (int64_t i = 0; i < n; ++i) t += a[i] * b[i];
    return t;
}

// ---------------------------------------------------------------- sincos
//
// Quadrant reduction y = r + q*(pi/2), |r| <= pi/4, with a two-term
// Cody-Waite pi/2 (exact products for |q| < 2^19), then minimax polynomials
// on [-pi/4, pi/4]. Entries with |y| > 1e5 (or non-finite) are redone with
// libm in a scalar cleanup pass.

namespace {

constexpr double kTwoOverPi = 0.636619772367581343075535053490057448;
constexpr double kPiO2Hi = 1.57079632673412561417e+00;  // high 33 bits of pi/2
constexpr double kPiO2Lo = 6.07710050650619224932e-11;  // pi/2 - kPiO2Hi
constexpr double kShift = 6755399441055744.0;           // 1.5 * 2^52
constexpr double kPolyLimit = 1.0e5;

constexpr double S1 = -1.66666666666666307295e-1;
constexpr double S2 = 8.33333333332211858878e-3;
constexpr double S3 = -1.98412698295895385996e-4;
constexpr double S4 = 2.75573136213857245213e-6;
constexpr double S5 = -2.50507477628578072866e-8;
constexpr double S6 = 1.58962301576546568060e-10;

constexpr double C1 = 4.16666666666665929218e-2;
constexpr double C2 = -1.38888888888730564116e-3;
constexpr double C3 = 2.48015872888517179954e-5;
constexpr double C4 = -2.75573141792967388112e-7;
constexpr double C5 = 2.08757008419747316778e-9;
constexpr double C6 = -1.13585365213876817300e-11;

inline void sincos_body(const double* __restrict x, double w0,
                        double* __restrict s, double* __restrict c, int64_t lo,
                        int64_t hi) {
#pragma omp simd
    for (int64_t i = lo; i < hi; ++i) {
        const double y = w0 * x[i];
        double fn = y * kTwoOverPi + kShift;
        const int64_t qi = std::bit_cast<int64_t>(fn);
        fn -= kShift;
        const double r = (y - fn * kPiO2Hi) - fn * kPiO2Lo;
        const double z = r * r;
        const double sp =
            r + r * z * (S1 + z * (S2 + z * (S3 + z * (S4 + z * (S5 + z * S6)))));
        const double cp =
            1.0 - 0.5 * z +
            z * z * (C1 + z * (C2 + z * (C3 + z * (C4 + z * (C5 + z * C6)))));
        const bool swap = qi & 1;
        const double sv = swap ? cp : sp;
        const double cv = swap ? sp : cp;
        const double ss = (qi & 2) ? -sv : sv;
        const double cs = ((qi + 1) & 2) ? -cv : cv;
        s[i] = ss;
        if (c) c[i] = cs;
    }
    // rare/never: huge or non-finite arguments
    for (int64_t i = lo; i < hi; ++i) {
        const double y = w0 * x[i];
        if (!(std::fabs(y) <= kPolyLimit)) {
            s[i] = std::sin(y);
            if (c) c[i] = std::cos(y);
        }
    }
}

} // namespace

void sincos_w0(const double* x, double w0, double* s, double* c, int64_t n) {
    constexpr int64_t kChunk = 16384;
    const int64_t nchunks = (n + kChunk - 1) / kChunk;
#pragma omp parallel for schedule(static)
    for (int64_t ch = 0; ch < nchunks; ++ch) {
        const int64_t lo = ch * kChunk;
        sincos_body(x, w0, s, c, lo, std::min(lo + kChunk, n));
    }
}

void sincos_w0_serial(const double* x, double w0, double* s, double* c, int64_t n) {
    sincos_body(x, w0, s, c, 0, n);
}

} // namespace hoin::kernels
