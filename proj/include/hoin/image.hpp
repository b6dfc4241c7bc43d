#pragma once
#include <stdexcept>
#include <string>
#include <vector>

namespace hoin {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Row-major, channel-interleaved, values nominally in [0,1] (measurements may
// exceed that range; only 8-bit export clamps).
struct ImageGrid {
    int h = 0, w = 0, c = 1;
    std::vector<double> pix;

    ImageGrid() = default;
    ImageGrid(int h_, int w_, int c_ = 1) : h(h_), w(w_), c(c_), pix((size_t)h_ * w_ * c_, 0.0) {}
    double& at(int y, int x, int ch = 0) { return pix[((size_t)y * w + x) * c + ch]; }
    double at(int y, int x, int ch = 0) const { return pix[((size_t)y * w + x) * c + ch]; }
    size_t size() const { return pix.size(); }
};

// Rec.601 luma; grayscale passes through.
std::vector<double> luma(const ImageGrid& img);

// NetPBM P5/P6, maxval 255 only; v/255 <-> round(clamp(v,0,1)*255).
// PFM "Pf"/"PF", little-endian float32, bottom-up rows, scale -1.0.
// Dispatch on extension: .pgm/.ppm/.pnm -> NetPBM, .pfm -> PFM.
ImageGrid read_image(const std::string& path);
void write_image(const std::string& path, const ImageGrid& img);

ImageGrid read_pnm(const std::string& path);
void write_pnm(const std::string& path, const ImageGrid& img);
ImageGrid read_pfm(const std::string& path);
void write_pfm(const std::string& path, const ImageGrid& img);

} // namespace hoin
