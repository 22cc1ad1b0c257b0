#include "fv/train/augment.hpp"

#include <algorithm>
#include <cmath>

#include "fv/common/resample.hpp"

namespace fv::train {

void check_sample(const TrainSample& s) {
  if (s.image.h <= 0 || s.image.w <= 0)
    throw ParamError("sample " + s.id + ": empty image");
  if (!s.image.same_shape(s.mask))
    throw DataError("sample " + s.id + ": image and mask sizes differ");
  for (float v : s.mask.pix)
    if (v != 0.f && v != 1.f)
      throw DataError("sample " + s.id + ": mask is not binary");
}

Image flip_h(const Image& img) {
  Image out(img.h, img.w);
  for (std::int64_t y = 0; y < img.h; ++y)
    for (std::int64_t x = 0; x < img.w; ++x)
      out.at(y, x) = img.at(y, img.w - 1 - x);
  return out;
}

Image flip_v(const Image& img) {
  Image out(img.h, img.w);
  for (std::int64_t y = 0; y < img.h; ++y)
    for (std::int64_t x = 0; x < img.w; ++x)
      out.at(y, x) = img.at(img.h - 1 - y, x);
  return out;
}

std::array<TrainSample, 4> augment_flips(const TrainSample& s) {
  check_sample(s);
  std::array<TrainSample, 4> out;
  out[0] = TrainSample{s.image, s.mask, s.id + "#orig1"};
  out[1] = TrainSample{flip_h(s.image), flip_h(s.mask), s.id + "#hflip"};
  out[2] = TrainSample{s.image, s.mask, s.id + "#orig2"};
  out[3] = TrainSample{flip_v(s.image), flip_v(s.mask), s.id + "#vflip"};
  return out;
}

Image rescale(const Image& img, std::int64_t out_h, std::int64_t out_w, Interp interp) {
  return interp == Interp::nearest ? resample_nearest(img, out_h, out_w)
                                   : resample_bilinear(img, out_h, out_w);
}

Image rescale_mask(const Image& mask, std::int64_t out_h, std::int64_t out_w) {
  Image out = rescale(mask, out_h, out_w, Interp::nearest);
  for (float& v : out.pix) v = v >= 0.5f ? 1.f : 0.f;
  return out;
}

TrainSample rescale_sample(const TrainSample& s, std::int64_t out_h, std::int64_t out_w) {
  TrainSample out;
  out.image = rescale(s.image, out_h, out_w, Interp::bilinear);
  out.mask = rescale_mask(s.mask, out_h, out_w);
  out.id = s.id;
  return out;
}

}  // namespace fv::train
