#pragma once
#include "hoin/image.hpp"

#include <cstdint>
#include <string>

namespace hoin {

// analytic test images in [0,1]: "disk" (radius 5n/16, smooth 1px edge),
// "squares" (overlapping axis-aligned squares), "shepp-like" (ellipse sum)
ImageGrid make_phantom(const std::string& name, int n);

// natural-image stand-in: 1/f-amplitude noise plus sharp geometric shapes,
// mapped to [0.05, 0.95]; deterministic in seed
ImageGrid make_scene(int n, uint64_t seed);

} // namespace hoin
