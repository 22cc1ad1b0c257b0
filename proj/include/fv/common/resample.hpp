#pragma once

#include <algorithm>
#include <cmath>

#include "fv/common/image.hpp"

namespace fv {

// Half-pixel-centre resampling shared by training, preprocessing and
// enhancement. Same-size calls reproduce the input exactly.

inline Image resample_bilinear(const Image& img, std::int64_t out_h, std::int64_t out_w) {
  if (img.h <= 0 || img.w <= 0) throw ParamError("resample: empty input image");
  if (out_h <= 0 || out_w <= 0) throw ParamError("resample: target size must be positive");
  Image out(out_h, out_w);
  const double ry = static_cast<double>(img.h) / static_cast<double>(out_h);
  const double rx = static_cast<double>(img.w) / static_cast<double>(out_w);
  for (std::int64_t y = 0; y < out_h; ++y) {
    const double sy = (static_cast<double>(y) + 0.5) * ry - 0.5;
    const double cy = std::clamp(sy, 0.0, static_cast<double>(img.h - 1));
    const std::int64_t y0 = static_cast<std::int64_t>(std::floor(cy));
    const std::int64_t y1 = std::min(y0 + 1, img.h - 1);
    const double fy = cy - static_cast<double>(y0);
    for (std::int64_t x = 0; x < out_w; ++x) {
      const double sx = (static_cast<double>(x) + 0.5) * rx - 0.5;
      const double cx = std::clamp(sx, 0.0, static_cast<double>(img.w - 1));
      const std::int64_t x0 = static_cast<std::int64_t>(std::floor(cx));
      const std::int64_t x1 = std::min(x0 + 1, img.w - 1);
      const double fx = cx - static_cast<double>(x0);
      const double v = (1.0 - fy) * ((1.0 - fx) * img.at(y0, x0) + fx * img.at(y0, x1)) +
                       fy * ((1.0 - fx) * img.at(y1, x0) + fx * img.at(y1, x1));
      out.at(y, x) = static_cast<float>(v);
    }
  }
  return out;
}

inline Image resample_nearest(const Image& img, std::int64_t out_h, std::int64_t out_w) {
  if (img.h <= 0 || img.w <= 0) throw ParamError("resample: empty input image");
  if (out_h <= 0 || out_w <= 0) throw ParamError("resample: target size must be positive");
  Image out(out_h, out_w);
  const double ry = static_cast<double>(img.h) / static_cast<double>(out_h);
  const double rx = static_cast<double>(img.w) / static_cast<double>(out_w);
  for (std::int64_t y = 0; y < out_h; ++y) {
    const double sy = (static_cast<double>(y) + 0.5) * ry - 0.5;
    const std::int64_t iy =
        std::clamp<std::int64_t>(static_cast<std::int64_t>(std::lround(sy)), 0, img.h - 1);
    for (std::int64_t x = 0; x < out_w; ++x) {
      const double sx = (static_cast<double>(x) + 0.5) * rx - 0.5;
      const std::int64_t ix =
          std::clamp<std::int64_t>(static_cast<std::int64_t>(std::lround(sx)), 0, img.w - 1);
      out.at(y, x) = img.at(iy, ix);
    }
  }
  return out;
}

}  // namespace fv
