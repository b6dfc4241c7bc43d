#include "helpers.hpp"
#include "hoin/kernels.hpp"

#include <cmath>
#include <omp.h>
#include <vector>

using namespace hoin;
namespace k = hoin::kernels;
using testing::rel_err;

namespace {

std::vector<double> randv(size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

} // namespace

TEST_CASE("mm matches serial reference bit-exactly") {
    Rng rng(1, "test");
    for (int m : {1, 3, 8, 17, 64}) {
        for (int n : {1, 5, 32}) {
            const int kk = 11;
            auto A = randv((size_t)m * kk, rng);
            auto B = randv((size_t)kk * n, rng);
            auto bias = randv((size_t)n, rng);
            std::vector<double> C((size_t)m * n), Cs((size_t)m * n);
            k::mm(A.data(), B.data(), C.data(), m, kk, n, false, bias.data());
            k::mm_serial(A.data(), B.data(), Cs.data(), m, kk, n, false, bias.data());
            CHECK(C == Cs);
            k::mm(A.data(), B.data(), C.data(), m, kk, n, true);
            k::mm_serial(A.data(), B.data(), Cs.data(), m, kk, n, true);
            CHECK(C == Cs);
        }
    }
}

TEST_CASE("mm is bit-deterministic across thread counts") {
    Rng rng(2, "test");
    const int m = 37, kk = 19, n = 23;
    auto A = randv((size_t)m * kk, rng);
    auto B = randv((size_t)kk * n, rng);
    const int saved = omp_get_max_threads();
    std::vector<std::vector<double>> results;
    for (int t : {1, 2, 4}) {
        omp_set_num_threads(t);
        std::vector<double> C((size_t)m * n);
        k::mm(A.data(), B.data(), C.data(), m, kk, n);
        results.push_back(std::move(C));
    }
    omp_set_num_threads(saved);
    CHECK(results[0] == results[1]);
    CHECK(results[0] == results[2]);
}

TEST_CASE("mm_AtB equals transpose-then-mm") {
    Rng rng(3, "test");
    const int m = 29, kk = 13, n = 9;
    auto At = randv((size_t)kk * m, rng); // A stored [k x m]
    auto B = randv((size_t)kk * n, rng);
    std::vector<double> C1((size_t)m * n), C2((size_t)m * n), A((size_t)m * kk);
    k::mm_AtB(At.data(), B.data(), C1.data(), m, kk, n);
    k::transpose(At.data(), A.data(), kk, m); // A[m x k]
    k::mm_serial(A.data(), B.data(), C2.data(), m, kk, n);
    for (size_t i = 0; i < C1.size(); ++i) CHECK(rel_err(C1[i], C2[i]) < 1e-13);
    std::vector<double> C3 = C1;
    k::mm_AtB_serial(At.data(), B.data(), C2.data(), m, kk, n);
    k::mm_AtB(At.data(), B.data(), C3.data(), m, kk, n);
    CHECK(C3 == C2);
}

TEST_CASE("transpose round trip and colsum") {
    Rng rng(4, "test");
    const int m = 18, n = 7;
    auto A = randv((size_t)m * n, rng);
    std::vector<double> T((size_t)n * m), back((size_t)m * n);
    k::transpose(A.data(), T.data(), m, n);
    k::transpose(T.data(), back.data(), n, m);
    CHECK(A == back);

    std::vector<double> cs(n, 0.0);
    k::colsum(A.data(), cs.data(), m, n);
    for (int j = 0; j < n; ++j) {
        double want = 0.0;
        for (int i = 0; i < m; ++i) want += A[(size_t)i * n + j];
        CHECK(rel_err(cs[j], want) < 1e-13);
    }
    k::colsum(A.data(), cs.data(), m, n, true); // accumulate doubles it
    for (int j = 0; j < n; ++j) {
        double want = 0.0;
        for (int i = 0; i < m; ++i) want += A[(size_t)i * n + j];
        CHECK(rel_err(cs[j], 2.0 * want) < 1e-13);
    }
}

TEST_CASE("dot") {
    std::vector<double> a{1, 2, 3}, b{4, -5, 6};
    CHECK(k::dot(a.data(), b.data(), 3) == 1 * 4 - 2 * 5 + 3 * 6);
}

TEST_CASE("sincos_w0 accuracy against libm") {
    Rng rng(5, "test");
    const int n = 20000;
    std::vector<double> x(n), s(n), c(n);
    for (int i = 0; i < n; ++i) {
        const double mag = std::pow(10.0, rng.uniform(-3.0, 4.9)); // up to ~8e4
        x[(size_t)i] = rng.uniform(-1.0, 1.0) * mag;
    }
    x[0] = 0.0;
    x[1] = 1e7; // beyond the polynomial range: exercises the libm fallback
    x[2] = -1e7;
    for (double w0 : {1.0, 30.0}) {
        k::sincos_w0(x.data(), w0, s.data(), c.data(), n);
        for (int i = 0; i < n; ++i) {
            CHECK(std::fabs(s[(size_t)i] - std::sin(w0 * x[(size_t)i])) < 5e-14);
            CHECK(std::fabs(c[(size_t)i] - std::cos(w0 * x[(size_t)i])) < 5e-14);
        }
    }
}

TEST_CASE("sincos_w0 parallel matches serial bit-exactly, any thread count") {
    Rng rng(6, "test");
    const int n = 50000;
    std::vector<double> x(n), s1(n), c1(n), s2(n), c2(n);
    for (double& v : x) v = rng.uniform(-1000.0, 1000.0);
    k::sincos_w0_serial(x.data(), 30.0, s1.data(), c1.data(), n);
    const int saved = omp_get_max_threads();
    for (int t : {1, 3, 4}) {
        omp_set_num_threads(t);
        k::sincos_w0(x.data(), 30.0, s2.data(), c2.data(), n);
        CHECK(s1 == s2);
        CHECK(c1 == c2);
    }
    omp_set_num_threads(saved);
    k::sincos_w0(x.data(), 30.0, s2.data(), nullptr, n); // null cos output
    CHECK(s1 == s2);
}
