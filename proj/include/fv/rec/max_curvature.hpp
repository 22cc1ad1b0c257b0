#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fv/common/image.hpp"

namespace fv::rec {

// Binary vein map extracted from a preprocessed presentation.
struct VeinTemplate {
  std::int64_t h = 0;
  std::int64_t w = 0;
  std::vector<std::uint8_t> map;  // row-major, values 0 or 1
  std::string source_id;

  std::uint8_t at(std::int64_t y, std::int64_t x) const {
    return map[static_cast<std::size_t>(y * w + x)];
  }
  std::uint8_t& at(std::int64_t y, std::int64_t x) {
    return map[static_cast<std::size_t>(y * w + x)];
  }
  std::int64_t count() const;
};

VeinTemplate make_template(std::int64_t h, std::int64_t w);

struct McOptions {
  double sigma = 4.0;  // profile smoothing scale in pixels
};

// Maximum-curvature vein extraction. Profiles of the smoothed image are
// examined along four directions (horizontal, vertical, both diagonals);
// each concave stretch (positive curvature, i.e. a dark ridge) votes for
// its curvature maximum with weight curvature x stretch width. Votes are
// accumulated over directions, linked through an 8-neighbourhood min/max
// filter and binarised at the median of the strictly positive responses.
// A response-free image (e.g. a constant one) yields an all-zero template.
VeinTemplate mc_extract(const Image& img, const McOptions& opt = {});

}  // namespace fv::rec
