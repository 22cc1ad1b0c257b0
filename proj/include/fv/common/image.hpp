#pragma once

#include <cstdint>
#include <vector>

#include "fv/common/error.hpp"

namespace fv {

// Single-channel image, row-major, intensities in [0, 1].
struct Image {
  std::int64_t h = 0;
  std::int64_t w = 0;
  std::vector<float> pix;

  Image() = default;
  Image(std::int64_t height, std::int64_t width, float fill = 0.f)
      : h(height), w(width) {
    if (height <= 0 || width <= 0)
      throw ParamError("image dimensions must be positive");
    pix.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), fill);
  }

  float& at(std::int64_t y, std::int64_t x) {
    return pix[static_cast<std::size_t>(y * w + x)];
  }
  float at(std::int64_t y, std::int64_t x) const {
    return pix[static_cast<std::size_t>(y * w + x)];
  }

  std::size_t size() const { return pix.size(); }
  bool same_shape(const Image& o) const { return h == o.h && w == o.w; }
};

}  // namespace fv
