#include "fv/rec/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "fv/common/error.hpp"
#include "fv/common/resample.hpp"

namespace fv::rec {
namespace {

// Mirror an index into [0, n) without repeating the edge sample.
std::int64_t reflect101(std::int64_t i, std::int64_t n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

std::vector<double> gaussian_kernel(double sigma) {
  const std::int64_t r = static_cast<std::int64_t>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * r + 1));
  double sum = 0.0;
  for (std::int64_t i = -r; i <= r; ++i) {
    const double v = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
    k[static_cast<std::size_t>(i + r)] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

std::vector<double> blur_separable(const Image& img, double sigma) {
  const std::vector<double> k = gaussian_kernel(sigma);
  const std::int64_t r = static_cast<std::int64_t>(k.size() / 2);
  const std::int64_t h = img.h, w = img.w;
  std::vector<double> rows(static_cast<std::size_t>(h * w));
  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::int64_t i = -r; i <= r; ++i)
        acc += k[static_cast<std::size_t>(i + r)] *
               img.pix[static_cast<std::size_t>(y * w + reflect101(x + i, w))];
      rows[static_cast<std::size_t>(y * w + x)] = acc;
    }
  std::vector<double> out(static_cast<std::size_t>(h * w));
  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::int64_t i = -r; i <= r; ++i)
        acc += k[static_cast<std::size_t>(i + r)] *
               rows[static_cast<std::size_t>(reflect101(y + i, h) * w + x)];
      out[static_cast<std::size_t>(y * w + x)] = acc;
    }
  return out;
}

double percentile(std::vector<double> vals, double q) {
  std::sort(vals.begin(), vals.end());
  const auto idx = static_cast<std::size_t>(
      std::llround(q * static_cast<double>(vals.size() - 1)));
  return vals[idx];
}

float sample_bilinear_zero(const Image& img, double sy, double sx) {
  const std::int64_t y0 = static_cast<std::int64_t>(std::floor(sy));
  const std::int64_t x0 = static_cast<std::int64_t>(std::floor(sx));
  const double fy = sy - static_cast<double>(y0);
  const double fx = sx - static_cast<double>(x0);
  auto px = [&](std::int64_t y, std::int64_t x) -> double {
    if (y < 0 || y >= img.h || x < 0 || x >= img.w) return 0.0;
    return img.pix[static_cast<std::size_t>(y * img.w + x)];
  };
  const double v = (1.0 - fy) * ((1.0 - fx) * px(y0, x0) + fx * px(y0, x0 + 1)) +
                   fy * ((1.0 - fx) * px(y0 + 1, x0) + fx * px(y0 + 1, x0 + 1));
  return static_cast<float>(v);
}

}  // namespace

Image preprocess_finger(const Image& input, const PreprocessOptions& opt,
                        PreprocessInfo* info) {
  if (opt.out_h < 1 || opt.out_w < 1)
    throw ParamError("preprocess: output size must be positive");
  if (!(opt.smooth_sigma > 0.0))
    throw ParamError("preprocess: smooth_sigma must be positive");
  if (opt.min_region_frac < 0.0 || opt.min_region_frac > 1.0)
    throw ParamError("preprocess: min_region_frac must lie in [0, 1]");

  const std::int64_t h = input.h, w = input.w;
  const std::vector<double> smooth = blur_separable(input, opt.smooth_sigma);

  // The finger is the bright region on a dark background; split at the
  // midpoint between the low and high intensity tails.
  const double thr =
      0.5 * (percentile(smooth, 0.05) + percentile(smooth, 0.95));
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(h * w));
  std::int64_t on = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = smooth[i] >= thr ? 1 : 0;
    on += mask[i];
  }
  const double frac = static_cast<double>(on) / static_cast<double>(h * w);
  if (frac < opt.min_region_frac)
    throw SegmentationError("preprocess: finger region covers only " +
                            std::to_string(frac) + " of the frame");

  // Midline through the per-column boundary midpoints, fitted by least
  // squares; its slope gives the rotation that levels the finger.
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::int64_t cols = 0;
  for (std::int64_t x = 0; x < w; ++x) {
    std::int64_t top = -1, bot = -1;
    for (std::int64_t y = 0; y < h; ++y)
      if (mask[static_cast<std::size_t>(y * w + x)]) {
        if (top < 0) top = y;
        bot = y;
      }
    if (top < 0) continue;
    const double mid = 0.5 * static_cast<double>(top + bot);
    sx += static_cast<double>(x);
    sy += mid;
    sxx += static_cast<double>(x) * static_cast<double>(x);
    sxy += static_cast<double>(x) * mid;
    ++cols;
  }
  double angle = 0.0;
  if (cols >= 2) {
    const double n = static_cast<double>(cols);
    const double denom = sxx - sx * sx / n;
    if (denom > 1e-12) angle = std::atan((sxy - sx * sy / n) / denom);
  }

  // Rotate by -angle about the image centre (inverse mapping), so the
  // fitted midline comes out horizontal. Samples outside the frame read 0,
  // matching the dark background.
  const double cy = 0.5 * static_cast<double>(h - 1);
  const double cx = 0.5 * static_cast<double>(w - 1);
  const double c = std::cos(angle), s = std::sin(angle);
  Image rot(h, w);
  std::vector<std::uint8_t> rot_mask(static_cast<std::size_t>(h * w), 0);
  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t x = 0; x < w; ++x) {
      const double dy = static_cast<double>(y) - cy;
      const double dx = static_cast<double>(x) - cx;
      const double src_x = cx + c * dx - s * dy;
      const double src_y = cy + s * dx + c * dy;
      rot.pix[static_cast<std::size_t>(y * w + x)] =
          sample_bilinear_zero(input, src_y, src_x);
      const std::int64_t ny = static_cast<std::int64_t>(std::lround(src_y));
      const std::int64_t nx = static_cast<std::int64_t>(std::lround(src_x));
      if (ny >= 0 && ny < h && nx >= 0 && nx < w)
        rot_mask[static_cast<std::size_t>(y * w + x)] =
            mask[static_cast<std::size_t>(ny * w + nx)];
    }

  std::int64_t y0 = h, y1 = -1, x0 = w, x1 = -1;
  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t x = 0; x < w; ++x)
      if (rot_mask[static_cast<std::size_t>(y * w + x)]) {
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
      }
  if (y1 < y0 || x1 < x0)
    throw SegmentationError("preprocess: finger region lost after rotation");

  Image crop(y1 - y0 + 1, x1 - x0 + 1);
  for (std::int64_t y = 0; y < crop.h; ++y)
    for (std::int64_t x = 0; x < crop.w; ++x)
      crop.pix[static_cast<std::size_t>(y * crop.w + x)] =
          rot.pix[static_cast<std::size_t>((y + y0) * w + (x + x0))];

  if (info != nullptr) {
    info->angle_rad = angle;
    info->region_frac = frac;
    info->box_y0 = y0;
    info->box_x0 = x0;
    info->box_h = crop.h;
    info->box_w = crop.w;
  }
  return resample_bilinear(crop, opt.out_h, opt.out_w);
}

}  // namespace fv::rec
