#include "helpers.hpp"
#include "hoin/metrics.hpp"

#include <cmath>

using namespace hoin;
using namespace hoin::testing;

TEST_CASE("psnr identities") {
    CHECK(psnr_from_mse(0.01, 1.0) == 20.0); // exact, not approximate
    CHECK(std::isinf(psnr_from_mse(0.0)));
    ImageGrid a(8, 8, 1), b(8, 8, 1);
    for (auto& v : b.pix) v = 0.1;
    // 0.1*0.1 rounds up a ulp in binary, so the image path is approximate
    CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-14));
    CHECK(psnr(b, a) == psnr(a, b));
    CHECK(std::isinf(psnr(a, a)));
    ImageGrid c(4, 4, 1);
    CHECK_THROWS_AS((void)psnr(a, c), ShapeError);
}

TEST_CASE("ssim identities and closed forms") {
    Rng rng(50, "test");
    ImageGrid a(16, 16, 1);
    for (auto& v : a.pix) v = rng.uniform(0, 1);
    CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-14));

    // constants: variance terms vanish, luminance term remains
    const double m1 = 0.3, m2 = 0.8;
    ImageGrid c1(12, 12, 1), c2(12, 12, 1);
    for (auto& v : c1.pix) v = m1;
    for (auto& v : c2.pix) v = m2;
    const double C1 = 1e-4;
    const double want = (2 * m1 * m2 + C1) / (m1 * m1 + m2 * m2 + C1);
    CHECK(ssim(c1, c2) == doctest::Approx(want).epsilon(1e-12));

    // binary image vs its negation: strong anticorrelation
    ImageGrid bin(16, 16, 1), neg(16, 16, 1);
    for (size_t i = 0; i < bin.pix.size(); ++i) {
        bin.pix[i] = (i / 16 + i % 16) % 2 ? 1.0 : 0.0;
        neg.pix[i] = 1.0 - bin.pix[i];
    }
    CHECK(ssim(bin, neg) < 0.0);

    // symmetry
    ImageGrid r1(16, 16, 3), r2(16, 16, 3);
    for (auto& v : r1.pix) v = rng.uniform(0, 1);
    for (auto& v : r2.pix) v = rng.uniform(0, 1);
    CHECK(std::fabs(ssim(r1, r2) - ssim(r2, r1)) < 1e-12);

    ImageGrid tiny(8, 8, 1);
    CHECK_THROWS_AS((void)ssim(tiny, tiny), ShapeError);
}

TEST_CASE("fft2: impulse, constant, parseval, round trip") {
    std::vector<double> imp(64, 0.0);
    imp[0] = 1.0;
    auto S = fft2(imp, 8, 8);
    for (auto& z : S.f) {
        CHECK(z.real() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::fabs(z.imag()) < 1e-12);
    }

    std::vector<double> cst(64, 0.25);
    auto Sc = fft2(cst, 8, 8);
    CHECK(Sc.f[0].real() == doctest::Approx(64 * 0.25).epsilon(1e-12));
    for (size_t i = 1; i < Sc.f.size(); ++i) CHECK(std::abs(Sc.f[i]) < 1e-12);

    Rng rng(51, "test");
    std::vector<double> x((size_t)32 * 32);
    for (auto& v : x) v = rng.uniform(-1, 1);
    auto Sx = fft2(x, 32, 32);
    double e_space = 0.0, e_freq = 0.0;
    for (double v : x) e_space += v * v;
    for (auto& z : Sx.f) e_freq += std::norm(z);
    CHECK(rel_err(e_space, e_freq / (32.0 * 32.0)) < 1e-9);

    auto back = ifft2(Sx);
    REQUIRE(back.size() == x.size());
    for (size_t i = 0; i < x.size(); ++i) CHECK(std::fabs(back[i] - x[i]) < 1e-12);

    // non-power-of-two dims round trip through padding
    std::vector<double> odd((size_t)12 * 20);
    for (auto& v : odd) v = rng.uniform(-1, 1);
    auto So = fft2(odd, 12, 20);
    CHECK(So.h == 16);
    CHECK(So.w == 32);
    CHECK(So.orig_h == 12);
    auto ob = ifft2(So);
    REQUIRE(ob.size() == odd.size());
    for (size_t i = 0; i < odd.size(); ++i) CHECK(std::fabs(ob[i] - odd[i]) < 1e-12);
}

TEST_CASE("band correspondence: identity, scaling, band-aligned low-pass") {
    Rng rng(52, "test");
    const int n = 32, N = 4;
    ImageGrid tgt(n, n, 1);
    for (auto& v : tgt.pix) v = rng.uniform(0.05, 0.95);

    auto id = band_correspondence(tgt, tgt, N);
    REQUIRE((int)id.values.size() == N);
    for (int b = 0; b < N; ++b) {
        CHECK(id.defined[(size_t)b] == 1);
        CHECK(id.values[(size_t)b] == 1.0); // exact by construction
    }

    ImageGrid half = tgt;
    for (auto& v : half.pix) v *= 0.25;
    auto sc = band_correspondence(half, tgt, N);
    for (int b = 0; b < N; ++b) CHECK(sc.values[(size_t)b] == doctest::Approx(0.25).epsilon(1e-12));

    ImageGrid twice = tgt;
    for (auto& v : twice.pix) v *= 3.0; // clips at 2
    auto cl = band_correspondence(twice, tgt, N);
    for (int b = 0; b < N; ++b) CHECK(cl.values[(size_t)b] == 2.0);

    // zero the top-half annuli in the spectrum: those bands drop to 0 exactly,
    // the untouched bands stay at 1 (the same binning rule is applied here)
    auto S = fft2(tgt.pix, n, n);
    const double rmax = std::hypot(n / 2.0, n / 2.0);
    for (int u = 0; u < n; ++u)
        for (int v = 0; v < n; ++v) {
            const double fu = u <= n / 2 ? u : u - n;
            const double fv = v <= n / 2 ? v : v - n;
            int band = (int)(std::hypot(fu, fv) / rmax * N);
            if (band >= N) band = N - 1;
            if (band >= N / 2) S.f[(size_t)u * n + v] = 0.0;
        }
    ImageGrid lp(n, n, 1);
    lp.pix = ifft2(S);
    auto bc = band_correspondence(lp, tgt, N);
    for (int b = 0; b < N / 2; ++b) {
        CHECK(bc.defined[(size_t)b] == 1);
        CHECK(bc.values[(size_t)b] == doctest::Approx(1.0).epsilon(1e-9));
    }
    for (int b = N / 2; b < N; ++b) {
        CHECK(bc.defined[(size_t)b] == 1);
        CHECK(bc.values[(size_t)b] == doctest::Approx(0.0).epsilon(1e-9));
    }

    ImageGrid zero(n, n, 1);
    CHECK_THROWS_AS((void)band_correspondence(tgt, zero, N), ShapeError);
    CHECK_THROWS_AS((void)band_correspondence(tgt, tgt, 1), ShapeError);
}
