#include "hoin/operators.hpp"

#include "hoin/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace hoin {

ImageGrid add_gaussian_noise(const ImageGrid& img, double sigma_8bit, uint64_t seed) {
    if (sigma_8bit < 0) throw ShapeError("add_gaussian_noise: sigma must be >= 0");
    ImageGrid out = img;
    if (sigma_8bit == 0) return out;
    Rng rng(seed, "noise");
    const double s = sigma_8bit / 255.0;
    for (double& v : out.pix) v += s * rng.normal();
    return out;
}

ImageGrid downsample(const ImageGrid& img, int k) {
    if (k < 1) throw ShapeError("downsample: factor must be >= 1");
    if (k == 1) return img;
    const int oh = img.h / k, ow = img.w / k;
    if (oh == 0 || ow == 0) throw ShapeError("downsample: image smaller than factor");
    ImageGrid out(oh, ow, img.c);
    const double inv = 1.0 / double(k * k);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x)
            for (int ch = 0; ch < img.c; ++ch) {
                double acc = 0.0;
                for (int dy = 0; dy < k; ++dy)
                    for (int dx = 0; dx < k; ++dx) acc += img.at(y * k + dy, x * k + dx, ch);
                out.at(y, x, ch) = acc * inv;
            }
    return out;
}

Mask make_mask(int h, int w, double keep_fraction, uint64_t seed) {
    Mask m;
    m.h = h;
    m.w = w;
    m.keep_fraction = keep_fraction;
    m.keep.resize((size_t)h * w);
    Rng rng(seed, "mask");
    for (auto& k : m.keep) k = rng.uniform01() < keep_fraction ? 1 : 0;
    return m;
}

ImageGrid apply_mask(const ImageGrid& img, const Mask& mask) {
    if (img.h != mask.h || img.w != mask.w) throw ShapeError("apply_mask: shape mismatch");
    if (mask.kept() == 0) throw ShapeError("apply_mask: empty mask");
    ImageGrid out = img;
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            if (!mask.keep[(size_t)y * img.w + x])
                for (int ch = 0; ch < img.c; ++ch) out.at(y, x, ch) = 0.0;
    return out;
}

// ---------------------------------------------------------------- radon

RadonGeometry RadonGeometry::make(int img_n, int angles) {
    if (angles < 1) throw ShapeError("radon: need at least one angle");
    RadonGeometry g;
    g.angles = angles;
    g.img_n = img_n;
    g.n_det = (int)std::ceil(std::hypot((double)img_n, (double)img_n));
    g.step = 0.5;
    return g;
}

namespace {

// One detector row for one angle: integrate (forward) or scatter (adjoint).
// Exactly the same sample points and weights on both paths, so the adjoint
// is the exact transpose of the forward linear map.
template <bool Adjoint>
void radon_angle(const double* img, double* sino_row, const double* sino_row_in,
                 double* img_out, const RadonGeometry& g, int a) {
    const int n = g.img_n;
    const double c = (n - 1) * 0.5;
    const double theta = M_PI * (double)a / (double)g.angles;
    const double ux = std::cos(theta), uy = std::sin(theta);
    const double vx = -uy, vy = ux;
    const double S = g.n_det * 0.5;
    const int ns = (int)std::floor(2.0 * S / g.step) + 1;
    for (int i = 0; i < g.n_det; ++i) {
        const double t = i - (g.n_det - 1) * 0.5;
        double acc = 0.0;
        const double w_in = Adjoint ? g.step * sino_row_in[i] : 0.0;
        for (int k = 0; k < ns; ++k) {
            const double s = -S + k * g.step;
            const double x = c + t * ux + s * vx;
            const double y = c + t * uy + s * vy;
            const int ix = (int)std::floor(x), iy = (int)std::floor(y);
            if (ix < -1 || ix > n - 1 || iy < -1 || iy > n - 1) continue;
            const double fx = x - ix, fy = y - iy;
            const double w00 = (1 - fx) * (1 - fy), w10 = fx * (1 - fy);
            const double w01 = (1 - fx) * fy, w11 = fx * fy;
            const bool x0 = ix >= 0, x1 = ix + 1 <= n - 1;
            const bool y0 = iy >= 0, y1 = iy + 1 <= n - 1;
            if constexpr (Adjoint) {
                if (x0 && y0) img_out[(size_t)iy * n + ix] += w00 * w_in;
                if (x1 && y0) img_out[(size_t)iy * n + ix + 1] += w10 * w_in;
                if (x0 && y1) img_out[(size_t)(iy + 1) * n + ix] += w01 * w_in;
                if (x1 && y1) img_out[(size_t)(iy + 1) * n + ix + 1] += w11 * w_in;
            } else {
                double v = 0.0;
                if (x0 && y0) v += w00 * img[(size_t)iy * n + ix];
                if (x1 && y0) v += w10 * img[(size_t)iy * n + ix + 1];
                if (x0 && y1) v += w01 * img[(size_t)(iy + 1) * n + ix];
                if (x1 && y1) v += w11 * img[(size_t)(iy + 1) * n + ix + 1];
                acc += v;
            }
        }
        if constexpr (!Adjoint) sino_row[i] = g.step * acc;
    }
}

constexpr int kAdjChunks = 8; // fixed accumulation chunking (thread-count invariant)

} // namespace

void radon_serial(const double* img, const RadonGeometry& g, double* sino) {
    for (int a = 0; a < g.angles; ++a)
        radon_angle<false>(img, sino + (size_t)a * g.n_det, nullptr, nullptr, g, a);
}

void radon_omp(const double* img, const RadonGeometry& g, double* sino) {
#pragma omp parallel for schedule(static)
    for (int a = 0; a < g.angles; ++a)
        radon_angle<false>(img, sino + (size_t)a * g.n_det, nullptr, nullptr, g, a);
}

void radon_adjoint_serial(const double* sino, const RadonGeometry& g, double* img) {
    std::memset(img, 0, sizeof(double) * (size_t)g.img_n * g.img_n);
    for (int a = 0; a < g.angles; ++a)
        radon_angle<true>(nullptr, nullptr, sino + (size_t)a * g.n_det, img, g, a);
}

void radon_adjoint_omp(const double* sino, const RadonGeometry& g, double* img) {
    const size_t npix = (size_t)g.img_n * g.img_n;
    const int nchunks = std::min(kAdjChunks, g.angles);
    std::vector<std::vector<double>> parts((size_t)nchunks);
#pragma omp parallel for schedule(static)
    for (int ch = 0; ch < nchunks; ++ch) {
        auto& part = parts[(size_t)ch];
        part.assign(npix, 0.0);
        const int a0 = (int)((int64_t)ch * g.angles / nchunks);
        const int a1 = (int)((int64_t)(ch + 1) * g.angles / nchunks);
        for (int a = a0; a < a1; ++a)
            radon_angle<true>(nullptr, nullptr, sino + (size_t)a * g.n_det, part.data(), g, a);
    }
    std::memset(img, 0, sizeof(double) * npix);
    for (int ch = 0; ch < nchunks; ++ch) {
        const double* p = parts[(size_t)ch].data();
        for (size_t i = 0; i < npix; ++i) img[i] += p[i];
    }
}

ImageGrid radon(const ImageGrid& img, const RadonGeometry& g) {
    if (img.c != 1) throw ShapeError("radon: single-channel input required");
    if (img.h != img.w || img.h != g.img_n) throw ShapeError("radon: square image required");
    ImageGrid sino(g.angles, g.n_det, 1);
    radon_omp(img.pix.data(), g, sino.pix.data());
    return sino;
}

ImageGrid radon_adjoint(const ImageGrid& sino, const RadonGeometry& g) {
    if (sino.c != 1 || sino.h != g.angles || sino.w != g.n_det)
        throw ShapeError("radon_adjoint: sinogram shape mismatch");
    ImageGrid img(g.img_n, g.img_n, 1);
    radon_adjoint_omp(sino.pix.data(), g, img.pix.data());
    return img;
}

TP radon_op(const TP& img, const RadonGeometry& g) {
    if (img->shape.size() != 2 || img->shape[0] != g.img_n || img->shape[1] != g.img_n)
        throw ShapeError("radon_op: image tensor must be [n x n]");
    auto y = make_tensor({g.angles, g.n_det});
    y->op = "radon";
    y->requires_grad = img->requires_grad;
    radon_omp(img->d(), g, y->d());
    if (y->requires_grad) {
        y->parents = {img};
        y->backward_fn = [g](Tensor& self) {
            auto& img = self.parents[0];
            if (!img->requires_grad) return;
            const size_t npix = (size_t)g.img_n * g.img_n;
            Buffer tmp(npix);
            radon_adjoint_omp(self.grad.data(), g, tmp.data());
            double* gi = img->g();
            const double* t = tmp.data();
            for (size_t i = 0; i < npix; ++i) gi[i] += t[i];
        };
    }
    return y;
}

} // namespace hoin
