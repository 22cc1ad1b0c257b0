#pragma once

#include <array>
#include <string>

#include "fv/common/image.hpp"

namespace fv::train {

struct TrainSample {
  Image image;
  Image mask;  // binary {0, 1}, same size as image
  std::string id;
};

// Validates the mask is strictly binary and matches the image size.
void check_sample(const TrainSample& s);

Image flip_h(const Image& img);
Image flip_v(const Image& img);

// Expands one sample into the fixed 4-sample set:
// original, h-flip, original, v-flip. Image and mask get the same transform.
std::array<TrainSample, 4> augment_flips(const TrainSample& s);

enum class Interp { bilinear, nearest };

// Resampling with half-pixel-centre coordinates. An identity-size call
// returns the input values unchanged.
Image rescale(const Image& img, std::int64_t out_h, std::int64_t out_w,
              Interp interp = Interp::bilinear);

// Nearest-neighbour resample followed by a 0.5 threshold, keeping masks
// strictly binary.
Image rescale_mask(const Image& mask, std::int64_t out_h, std::int64_t out_w);

TrainSample rescale_sample(const TrainSample& s, std::int64_t out_h, std::int64_t out_w);

}  // namespace fv::train
