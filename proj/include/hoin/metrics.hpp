#pragma once
#include "hoin/image.hpp"

#include <complex>
#include <vector>

namespace hoin {

double psnr_from_mse(double mse, double peak = 1.0); // MSE 0 -> +inf sentinel
double psnr(const ImageGrid& a, const ImageGrid& b, double peak = 1.0);

// single-scale SSIM: 11x11 Gaussian window sigma=1.5, K1=0.01, K2=0.03, L=1,
// mean over the valid (fully-covered) region, averaged over channels
double ssim(const ImageGrid& a, const ImageGrid& b);

// 2-D FFT, DC at (0,0); inputs zero-padded to powers of two
struct Spectrum {
    int h = 0, w = 0;           // padded dims
    int orig_h = 0, orig_w = 0; // pre-padding dims
    std::vector<std::complex<double>> f;
};
Spectrum fft2(const std::vector<double>& chan, int h, int w);
std::vector<double> ifft2(const Spectrum& s); // cropped back to orig dims

struct BandCorrespondence {
    int epoch = 0;
    std::vector<double> values;  // per-band mean of |H|, clipped to [0,2]
    std::vector<uint8_t> defined; // 0 when every bin of the band was excluded
};

// H = F{out}/F{target} magnitude-wise where |F{target}| > 1e-8 * max|F{target}|,
// grouped into N radial annuli of the centered spectrum
BandCorrespondence band_correspondence(const ImageGrid& out, const ImageGrid& target, int N);

} // namespace hoin
