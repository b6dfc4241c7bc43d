#include "hoin/phantom.hpp"

#include "hoin/metrics.hpp"
#include "hoin/rng.hpp"
#include "hoin/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace hoin {

namespace {

ImageGrid disk_phantom(int n) {
    ImageGrid img(n, n, 1);
    const double cx = (n - 1) / 2.0, cy = (n - 1) / 2.0;
    const double r = n * 5.0 / 16.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double d = std::hypot(j - cx, i - cy);
            img.at(i, j, 0) = std::clamp(r - d + 0.5, 0.0, 1.0); // ~pixel-coverage edge
        }
    return img;
}

ImageGrid squares_phantom(int n) {
    ImageGrid img(n, n, 1);
    auto box = [&](double y0, double y1, double x0, double x1, double v) {
        for (int i = (int)(y0 * n); i < (int)(y1 * n); ++i)
            for (int j = (int)(x0 * n); j < (int)(x1 * n); ++j)
                if (i >= 0 && i < n && j >= 0 && j < n) img.at(i, j, 0) = v;
    };
    box(0.10, 0.55, 0.10, 0.55, 0.40);
    box(0.30, 0.80, 0.35, 0.85, 0.75);
    box(0.55, 0.75, 0.15, 0.35, 1.00);
    box(0.62, 0.72, 0.55, 0.65, 0.20);
    return img;
}

struct Ellipse {
    double v, a, b, x0, y0, phi_deg;
};

ImageGrid shepp_like_phantom(int n) {
    // classic Shepp-Logan ellipse table (modified intensities for contrast)
    static const Ellipse es[] = {
        {1.00, 0.69, 0.92, 0.0, 0.0, 0},      {-0.80, 0.6624, 0.874, 0.0, -0.0184, 0},
        {-0.20, 0.11, 0.31, 0.22, 0.0, -18},  {-0.20, 0.16, 0.41, -0.22, 0.0, 18},
        {0.10, 0.21, 0.25, 0.0, 0.35, 0},     {0.10, 0.046, 0.046, 0.0, 0.1, 0},
        {0.10, 0.046, 0.046, 0.0, -0.1, 0},   {0.10, 0.046, 0.023, -0.08, -0.605, 0},
        {0.10, 0.023, 0.023, 0.0, -0.606, 0}, {0.10, 0.023, 0.046, 0.06, -0.605, 0},
    };
    ImageGrid img(n, n, 1);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double x = n == 1 ? 0.0 : 2.0 * j / (n - 1) - 1.0;
            const double y = n == 1 ? 0.0 : 2.0 * i / (n - 1) - 1.0;
            double v = 0.0;
            for (const Ellipse& e : es) {
                const double ph = e.phi_deg * M_PI / 180.0;
                const double dx = x - e.x0, dy = y - e.y0;
                const double xr = dx * std::cos(ph) + dy * std::sin(ph);
                const double yr = -dx * std::sin(ph) + dy * std::cos(ph);
                if (xr * xr / (e.a * e.a) + yr * yr / (e.b * e.b) <= 1.0) v += e.v;
            }
            img.at(i, j, 0) = std::clamp(v, 0.0, 1.0);
        }
    return img;
}

} // namespace

ImageGrid make_phantom(const std::string& name, int n) {
    if (n < 1) throw ShapeError("phantom: size must be >= 1");
    if (name == "disk") return disk_phantom(n);
    if (name == "squares") return squares_phantom(n);
    if (name == "shepp-like") return shepp_like_phantom(n);
    throw ShapeError("phantom: unknown name '" + name + "' (disk|squares|shepp-like)");
}

ImageGrid make_scene(int n, uint64_t seed) {
    if (n < 4) throw ShapeError("scene: size must be >= 4");
    Rng rng(seed, "scene");

    // 1/f-shaped noise: white noise filtered in the frequency domain
    std::vector<double> noise((size_t)n * n);
    for (double& v : noise) v = rng.normal();
    Spectrum sp = fft2(noise, n, n);
    for (int u = 0; u < sp.h; ++u)
        for (int v = 0; v < sp.w; ++v) {
            const double fu = u <= sp.h / 2 ? u : u - sp.h;
            const double fv = v <= sp.w / 2 ? v : v - sp.w;
            const double r = std::hypot(fu, fv);
            sp.f[(size_t)u * sp.w + v] *= 1.0 / std::pow(1.0 + r, 1.2);
        }
    std::vector<double> base = ifft2(sp);

    ImageGrid img(n, n, 1);
    img.pix = base;

    // sharp shapes on top keep high-frequency content in the target
    const double cx = rng.uniform(0.25, 0.75) * n;
    const double cy = rng.uniform(0.25, 0.75) * n;
    const double rad = rng.uniform(0.10, 0.22) * n;
    const double amp = rng.uniform(0.8, 1.2);
    const int bx0 = (int)(rng.uniform(0.05, 0.45) * n), bw = (int)(rng.uniform(0.15, 0.3) * n);
    const int by0 = (int)(rng.uniform(0.05, 0.45) * n), bh = (int)(rng.uniform(0.15, 0.3) * n);
    const double bamp = rng.uniform(-1.2, -0.8);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double v = img.at(i, j, 0);
            if (std::hypot(j - cx, i - cy) <= rad) v += amp;
            if (i >= by0 && i < by0 + bh && j >= bx0 && j < bx0 + bw) v += bamp;
            if ((i + j) % std::max(2, n / 8) < std::max(1, n / 32)) v += 0.5; // diagonal stripes
            img.at(i, j, 0) = v;
        }

    double lo = img.pix[0], hi = img.pix[0];
    for (double v : img.pix) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = hi > lo ? hi - lo : 1.0;
    for (double& v : img.pix) v = 0.05 + 0.9 * (v - lo) / span;
    return img;
}

} // namespace hoin
