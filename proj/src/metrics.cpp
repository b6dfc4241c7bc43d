#include "hoin/metrics.hpp"

#include "hoin/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hoin {

double psnr_from_mse(double mse, double peak) {
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

double psnr(const ImageGrid& a, const ImageGrid& b, double peak) {
    if (a.h != b.h || a.w != b.w || a.c != b.c) throw ShapeError("psnr: shape mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < a.pix.size(); ++i) {
        const double e = a.pix[i] - b.pix[i];
        acc += e * e;
    }
    return psnr_from_mse(acc / double(a.pix.size()), peak);
}

// ---------------------------------------------------------------- ssim

namespace {

constexpr int kWin = 11;

std::vector<double> gaussian_taps() {
    std::vector<double> t(kWin);
    const double s = 1.5;
    double sum = 0.0;
    for (int i = 0; i < kWin; ++i) {
        const double d = i - (kWin - 1) / 2.0;
        t[i] = std::exp(-d * d / (2.0 * s * s));
        sum += t[i];
    }
    for (double& v : t) v /= sum;
    return t;
}

// separable valid-region filter: in (h x w) -> out ((h-10) x (w-10))
void filt_valid(const std::vector<double>& in, int h, int w, const std::vector<double>& taps,
                std::vector<double>& tmp, std::vector<double>& out) {
    const int ow = w - kWin + 1, oh = h - kWin + 1;
    tmp.assign((size_t)h * ow, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kWin; ++k) acc += taps[k] * in[(size_t)y * w + x + k];
            tmp[(size_t)y * ow + x] = acc;
        }
    out.assign((size_t)oh * ow, 0.0);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kWin; ++k) acc += taps[k] * tmp[(size_t)(y + k) * ow + x];
            out[(size_t)y * ow + x] = acc;
        }
}

} // namespace

double ssim(const ImageGrid& a, const ImageGrid& b) {
    if (a.h != b.h || a.w != b.w || a.c != b.c) throw ShapeError("ssim: shape mismatch");
    if (a.h < kWin || a.w < kWin) throw ShapeError("ssim: image smaller than 11x11 window");
    static const std::vector<double> taps = gaussian_taps();
    constexpr double C1 = 0.01 * 0.01, C2 = 0.03 * 0.03; // L = 1
    const size_t npix = (size_t)a.h * a.w;
    std::vector<double> x(npix), y(npix), xx(npix), yy(npix), xy(npix);
    std::vector<double> mu1, mu2, m11, m22, m12, tmp;
    double total = 0.0;
    for (int ch = 0; ch < a.c; ++ch) {
        for (size_t i = 0; i < npix; ++i) {
            x[i] = a.pix[i * a.c + ch];
            y[i] = b.pix[i * a.c + ch];
            xx[i] = x[i] * x[i];
            yy[i] = y[i] * y[i];
            xy[i] = x[i] * y[i];
        }
        filt_valid(x, a.h, a.w, taps, tmp, mu1);
        filt_valid(y, a.h, a.w, taps, tmp, mu2);
        filt_valid(xx, a.h, a.w, taps, tmp, m11);
        filt_valid(yy, a.h, a.w, taps, tmp, m22);
        filt_valid(xy, a.h, a.w, taps, tmp, m12);
        double acc = 0.0;
        for (size_t i = 0; i < mu1.size(); ++i) {
            const double u1 = mu1[i], u2 = mu2[i];
            const double s1 = m11[i] - u1 * u1;
            const double s2 = m22[i] - u2 * u2;
            const double s12 = m12[i] - u1 * u2;
            acc += ((2.0 * u1 * u2 + C1) * (2.0 * s12 + C2)) /
                   ((u1 * u1 + u2 * u2 + C1) * (s1 + s2 + C2));
        }
        total += acc / double(mu1.size());
    }
    return total / double(a.c);
}

// ---------------------------------------------------------------- fft

namespace {

int next_pow2(int n) {
    int p = 1;
    while (p < n) p <<= 1;
    return p;
}

// iterative radix-2 Cooley-Tukey, in place; sign = -1 forward, +1 inverse
void fft1(std::complex<double>* a, int n, int sign) {
    for (int i = 1, j = 0; i < n; ++i) { // bit reversal
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (int len = 2; len <= n; len <<= 1) {
        const double ang = sign * 2.0 * M_PI / len;
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (int i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (int j = 0; j < len / 2; ++j) {
                const std::complex<double> u = a[i + j];
                const std::complex<double> v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

void fft2_inplace(std::vector<std::complex<double>>& f, int h, int w, int sign) {
    for (int y = 0; y < h; ++y) fft1(f.data() + (size_t)y * w, w, sign);
    std::vector<std::complex<double>> col((size_t)h);
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) col[(size_t)y] = f[(size_t)y * w + x];
        fft1(col.data(), h, sign);
        for (int y = 0; y < h; ++y) f[(size_t)y * w + x] = col[(size_t)y];
    }
}

} // namespace

Spectrum fft2(const std::vector<double>& chan, int h, int w) {
    if ((size_t)h * w != chan.size()) throw ShapeError("fft2: size mismatch");
    Spectrum s;
    s.orig_h = h;
    s.orig_w = w;
    s.h = next_pow2(h);
    s.w = next_pow2(w);
    s.f.assign((size_t)s.h * s.w, {0.0, 0.0});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) s.f[(size_t)y * s.w + x] = chan[(size_t)y * w + x];
    fft2_inplace(s.f, s.h, s.w, -1);
    return s;
}

std::vector<double> ifft2(const Spectrum& s) {
    std::vector<std::complex<double>> f = s.f;
    fft2_inplace(f, s.h, s.w, +1);
    const double scale = 1.0 / ((double)s.h * (double)s.w);
    std::vector<double> out((size_t)s.orig_h * s.orig_w);
    for (int y = 0; y < s.orig_h; ++y)
        for (int x = 0; x < s.orig_w; ++x)
            out[(size_t)y * s.orig_w + x] = f[(size_t)y * s.w + x].real() * scale;
    return out;
}

// ------------------------------------------------- band correspondence

BandCorrespondence band_correspondence(const ImageGrid& out, const ImageGrid& target, int N) {
    if (out.h != target.h || out.w != target.w)
        throw ShapeError("band_correspondence: shape mismatch");
    if (N < 2) throw ShapeError("band_correspondence: need N >= 2 bands");
    const Spectrum so = fft2(luma(out), out.h, out.w);
    const Spectrum st = fft2(luma(target), target.h, target.w);
    double maxmag = 0.0;
    for (const auto& v : st.f) maxmag = std::max(maxmag, std::abs(v));
    if (maxmag == 0.0) throw ShapeError("band_correspondence: target spectrum is zero");
    const double eps_mag = 1e-8 * maxmag;

    BandCorrespondence bc;
    bc.values.assign((size_t)N, 0.0);
    bc.defined.assign((size_t)N, 0);
    std::vector<int64_t> counts((size_t)N, 0);
    const double rmax = std::hypot(st.h / 2.0, st.w / 2.0);
    for (int u = 0; u < st.h; ++u) {
        const double fu = u <= st.h / 2 ? u : u - st.h; // signed frequency
        for (int v = 0; v < st.w; ++v) {
            const double fv = v <= st.w / 2 ? v : v - st.w;
            const double tm = std::abs(st.f[(size_t)u * st.w + v]);
            if (!(tm > eps_mag)) continue;
            const double om = std::abs(so.f[(size_t)u * st.w + v]);
            const double ratio = std::clamp(om / tm, 0.0, 2.0);
            int band = (int)(std::hypot(fu, fv) / rmax * N);
            if (band > N - 1) band = N - 1;
            bc.values[(size_t)band] += ratio;
            counts[(size_t)band] += 1;
        }
    }
    for (int n = 0; n < N; ++n) {
        if (counts[(size_t)n] > 0) {
            bc.values[(size_t)n] /= double(counts[(size_t)n]);
            bc.defined[(size_t)n] = 1;
        } else {
            bc.values[(size_t)n] = 0.0; // flagged missing via defined
        }
    }
    return bc;
}

} // namespace hoin
