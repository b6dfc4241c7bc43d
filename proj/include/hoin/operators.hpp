#pragma once
#include "hoin/image.hpp"
#include "hoin/tensor.hpp"

#include <cstdint>
#include <memory>
#include <vector>

namespace hoin {

// i.i.d. N(0, (sigma_8bit/255)^2) per sample, seeded Box-Muller via the
// "noise" stream; measurements stay unclipped.
ImageGrid add_gaussian_noise(const ImageGrid& img, double sigma_8bit, uint64_t seed);

// k x k mean pooling after truncating H,W to multiples of k
ImageGrid downsample(const ImageGrid& img, int k);

struct Mask {
    int h = 0, w = 0;
    double keep_fraction = 1.0;
    std::vector<uint8_t> keep; // 1 = observed
    int64_t kept() const {
        int64_t n = 0;
        for (uint8_t k : keep) n += k;
        return n;
    }
};
Mask make_mask(int h, int w, double keep_fraction, uint64_t seed); // "mask" stream
ImageGrid apply_mask(const ImageGrid& img, const Mask& mask); // masked-out pixels zeroed

// Parallel-beam Radon. Rays sampled every `step` px with bilinear
// interpolation, scaled by step; a fixed linear map of the pixel vector.
struct RadonGeometry {
    int angles = 40;
    int n_det = 0;      // ceil(image diagonal)
    double step = 0.5;  // ray sampling step, px
    int img_n = 0;      // square image side
    static RadonGeometry make(int img_n, int angles);
};

// serial references + OMP versions (omp adjoint uses fixed angle-chunked
// accumulation, bit-deterministic for any thread count)
void radon_serial(const double* img, const RadonGeometry& g, double* sino);
void radon_omp(const double* img, const RadonGeometry& g, double* sino);
void radon_adjoint_serial(const double* sino, const RadonGeometry& g, double* img);
void radon_adjoint_omp(const double* sino, const RadonGeometry& g, double* img);

ImageGrid radon(const ImageGrid& img, const RadonGeometry& g);         // sinogram A x n_det
ImageGrid radon_adjoint(const ImageGrid& sino, const RadonGeometry& g); // back to img_n^2

// graph op: sinogram tensor from an [n x n] image tensor; backward applies
// the exact adjoint to the incoming gradient
TP radon_op(const TP& img, const RadonGeometry& g);

} // namespace hoin
