#pragma once

#include <string>

#include "fv/common/image.hpp"

namespace fv::app {

// Reads an 8-bit grayscale image (PNG or PGM, chosen by file magic) and
// normalises it to [0, 1]. Color and palette PNGs are converted to gray.
Image load_image(const std::string& path);

// Writes 8-bit grayscale PNG; values are clamped and rounded to 0..255.
void save_png(const std::string& path, const Image& img);

// Loads an annotation mask: every pixel must be exactly 0 or 255; the
// result holds 0/1 values.
Image load_mask(const std::string& path);

}  // namespace fv::app
