// serial reference vs OpenMP kernel timings; sanity for the parallel speedup
// and a quick GF/s readout on the build machine
#include "hoin/kernels.hpp"
#include "hoin/operators.hpp"
#include "hoin/rng.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

using hoin::Rng;
namespace k = hoin::kernels;

namespace {

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

template <typename F> double time_best_ms(F&& f, int reps) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const double t0 = now_ms();
        f();
        best = std::min(best, now_ms() - t0);
    }
    return best;
}

void fill(std::vector<double>& v, Rng& rng) {
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
}

} // namespace

int main() {
    k::set_threads_from_env();
    std::printf("threads: %d\n\n", k::max_threads());
    Rng rng(1234, "bench");

    {
        const int m = 4096, kk = 256, n = 256;
        std::vector<double> A((size_t)m * kk), B((size_t)kk * n), C((size_t)m * n);
        fill(A, rng);
        fill(B, rng);
        const double flops = 2.0 * m * kk * n;
        const double ts = time_best_ms([&] { k::mm_serial(A.data(), B.data(), C.data(), m, kk, n); }, 3);
        const double tp = time_best_ms([&] { k::mm(A.data(), B.data(), C.data(), m, kk, n); }, 5);
        std::printf("mm        %dx%dx%d   serial %8.2f ms (%5.1f GF/s)   omp %8.2f ms (%5.1f GF/s)\n",
                    m, kk, n, ts, flops / ts * 1e-6, tp, flops / tp * 1e-6);
        std::vector<double> At((size_t)kk * m);
        k::transpose(A.data(), At.data(), m, kk);
        const double ts2 =
            time_best_ms([&] { k::mm_AtB_serial(At.data(), B.data(), C.data(), m, kk, n); }, 3);
        const double tp2 = time_best_ms([&] { k::mm_AtB(At.data(), B.data(), C.data(), m, kk, n); }, 5);
        std::printf("mm_AtB    %dx%dx%d   serial %8.2f ms (%5.1f GF/s)   omp %8.2f ms (%5.1f GF/s)\n",
                    m, kk, n, ts2, flops / ts2 * 1e-6, tp2, flops / tp2 * 1e-6);
    }

    {
        const int n = 1 << 22;
        std::vector<double> x((size_t)n), s((size_t)n), c((size_t)n);
        fill(x, rng);
        const double ts = time_best_ms([&] { k::sincos_w0_serial(x.data(), 30.0, s.data(), c.data(), n); }, 3);
        const double tp = time_best_ms([&] { k::sincos_w0(x.data(), 30.0, s.data(), c.data(), n); }, 5);
        std::printf("sincos    n=%d      serial %8.2f ms (%5.2f ns/el) omp %8.2f ms (%5.2f ns/el)\n",
                    n, ts, ts * 1e6 / n, tp, tp * 1e6 / n);
    }

    {
        const int n = 256, angles = 90;
        auto g = hoin::RadonGeometry::make(n, angles);
        std::vector<double> img((size_t)n * n), sino((size_t)g.angles * g.n_det);
        fill(img, rng);
        const double ts = time_best_ms([&] { hoin::radon_serial(img.data(), g, sino.data()); }, 3);
        const double tp = time_best_ms([&] { hoin::radon_omp(img.data(), g, sino.data()); }, 5);
        std::printf("radon     %d^2 x %d   serial %8.2f ms              omp %8.2f ms\n", n, angles,
                    ts, tp);
        std::vector<double> back((size_t)n * n);
        const double tas =
            time_best_ms([&] { hoin::radon_adjoint_serial(sino.data(), g, back.data()); }, 3);
        const double tap =
            time_best_ms([&] { hoin::radon_adjoint_omp(sino.data(), g, back.data()); }, 5);
        std::printf("radon^T   %d^2 x %d   serial %8.2f ms              omp %8.2f ms\n", n, angles,
                    tas, tap);
    }
    return 0;
}
