#include "hoin/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace hoin {

std::vector<double> luma(const ImageGrid& img) {
    std::vector<double> out((size_t)img.h * img.w);
    if (img.c == 1) {
        out.assign(img.pix.begin(), img.pix.end());
    } else {
        for (size_t i = 0; i < out.size(); ++i)
            out[i] = 0.299 * img.pix[i * 3] + 0.587 * img.pix[i * 3 + 1] +
                     0.114 * img.pix[i * 3 + 2];
    }
    return out;
}

namespace {

// whitespace/comment-aware header token reader
std::string next_token(std::istream& in) {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {
            }
            continue;
        }
        if (std::isspace(ch)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(char(ch));
    }
    if (tok.empty()) throw IoError("image: truncated header");
    return tok;
}

int parse_int(std::istream& in, const char* what) {
    std::string t = next_token(in);
    try {
        size_t pos = 0;
        int v = std::stoi(t, &pos);
        if (pos != t.size()) throw std::invalid_argument(t);
        return v;
    } catch (const std::exception&) {
        throw IoError(std::string("image: bad ") + what + " '" + t + "'");
    }
}

bool has_suffix(const std::string& s, const std::string& suf) {
    return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

} // namespace

ImageGrid read_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("image: cannot open " + path);
    std::string magic = next_token(in);
    int channels;
    if (magic == "P5")
        channels = 1;
    else if (magic == "P6")
        channels = 3;
    else
        throw IoError("image: unsupported magic '" + magic + "' in " + path);
    int w = parse_int(in, "width");
    int h = parse_int(in, "height");
    int maxval = parse_int(in, "maxval");
    if (w <= 0 || h <= 0) throw IoError("image: bad dimensions in " + path);
    if (maxval != 255) throw IoError("image: unsupported maxval (only 255) in " + path);
    // single whitespace byte after maxval, already consumed by tokenizer
    std::vector<uint8_t> raw((size_t)w * h * channels);
    in.read(reinterpret_cast<char*>(raw.data()), (std::streamsize)raw.size());
    if ((size_t)in.gcount() != raw.size()) throw IoError("image: truncated pixel data in " + path);
    ImageGrid img(h, w, channels);
    for (size_t i = 0; i < raw.size(); ++i) img.pix[i] = raw[i] / 255.0;
    return img;
}

void write_pnm(const std::string& path, const ImageGrid& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("image: cannot write " + path);
    if (img.c != 1 && img.c != 3) throw IoError("image: pnm needs 1 or 3 channels");
    out << (img.c == 1 ? "P5" : "P6") << "\n" << img.w << " " << img.h << "\n255\n";
    std::vector<uint8_t> raw(img.size());
    for (size_t i = 0; i < raw.size(); ++i) {
        double v = std::clamp(img.pix[i], 0.0, 1.0);
        raw[i] = (uint8_t)std::lround(v * 255.0);
    }
    out.write(reinterpret_cast<const char*>(raw.data()), (std::streamsize)raw.size());
    if (!out) throw IoError("image: short write to " + path);
}

ImageGrid read_pfm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("image: cannot open " + path);
    std::string magic = next_token(in);
    int channels;
    if (magic == "Pf")
        channels = 1;
    else if (magic == "PF")
        channels = 3;
    else
        throw IoError("image: unsupported pfm magic '" + magic + "' in " + path);
    int w = parse_int(in, "width");
    int h = parse_int(in, "height");
    std::string scale_tok = next_token(in);
    double scale = std::stod(scale_tok);
    if (scale >= 0) throw IoError("image: big-endian pfm not supported in " + path);
    std::vector<float> raw((size_t)w * h * channels);
    in.read(reinterpret_cast<char*>(raw.data()), (std::streamsize)(raw.size() * 4));
    if ((size_t)in.gcount() != raw.size() * 4) throw IoError("image: truncated pfm data in " + path);
    ImageGrid img(h, w, channels);
    // pfm rows are bottom-up
    for (int y = 0; y < h; ++y) {
        const float* src = raw.data() + (size_t)(h - 1 - y) * w * channels;
        double* dst = img.pix.data() + (size_t)y * w * channels;
        for (int i = 0; i < w * channels; ++i) dst[i] = src[i];
    }
    return img;
}

void write_pfm(const std::string& path, const ImageGrid& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("image: cannot write " + path);
    if (img.c != 1 && img.c != 3) throw IoError("image: pfm needs 1 or 3 channels");
    out << (img.c == 1 ? "Pf" : "PF") << "\n" << img.w << " " << img.h << "\n-1.0\n";
    std::vector<float> raw(img.size());
    for (int y = 0; y < img.h; ++y) {
        const double* src = img.pix.data() + (size_t)y * img.w * img.c;
        float* dst = raw.data() + (size_t)(img.h - 1 - y) * img.w * img.c;
        for (int i = 0; i < img.w * img.c; ++i) dst[i] = (float)src[i];
    }
    out.write(reinterpret_cast<const char*>(raw.data()), (std::streamsize)(raw.size() * 4));
    if (!out) throw IoError("image: short write to " + path);
}

ImageGrid read_image(const std::string& path) {
    if (has_suffix(path, ".pfm")) return read_pfm(path);
    if (has_suffix(path, ".pgm") || has_suffix(path, ".ppm") || has_suffix(path, ".pnm"))
        return read_pnm(path);
    throw IoError("image: unsupported extension on " + path);
}

void write_image(const std::string& path, const ImageGrid& img) {
    if (has_suffix(path, ".pfm")) return write_pfm(path, img);
    if (has_suffix(path, ".pgm") || has_suffix(path, ".ppm") || has_suffix(path, ".pnm"))
        return write_pnm(path, img);
    throw IoError("image: unsupported extension on " + path);
}

} // namespace hoin
