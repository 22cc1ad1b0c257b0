#include "fv/rec/miura.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <vector>

#include "fv/common/error.hpp"

namespace fv::rec {
namespace {

// Rows packed into u64 words, bit x stored at word x/64, bit x%64.
struct PackedMap {
  std::int64_t h = 0, w = 0, words = 0;
  std::vector<std::uint64_t> bits;
  const std::uint64_t* row(std::int64_t y) const {
    return bits.data() + y * words;
  }
};

PackedMap pack(const VeinTemplate& t) {
  PackedMap p;
  p.h = t.h;
  p.w = t.w;
  p.words = (t.w + 63) / 64;
  p.bits.assign(static_cast<std::size_t>(p.h * p.words), 0);
  for (std::int64_t y = 0; y < t.h; ++y) {
    std::uint64_t* row = p.bits.data() + y * p.words;
    for (std::int64_t x = 0; x < t.w; ++x)
      if (t.at(y, x))
        row[x >> 6] |= std::uint64_t{1} << (x & 63);
  }
  return p;
}

// dst[x] = src[x + shift] with zero fill, shift may be negative.
void shift_row(const std::uint64_t* src, std::int64_t words, int shift,
               std::uint64_t* dst) {
  if (shift >= 0) {
    const std::int64_t k = shift >> 6;
    const int b = shift & 63;
    for (std::int64_t i = 0; i < words; ++i) {
      std::uint64_t v = i + k < words ? src[i + k] >> b : 0;
      if (b != 0 && i + k + 1 < words) v |= src[i + k + 1] << (64 - b);
      dst[i] = v;
    }
  } else {
    const std::int64_t k = (-shift) >> 6;
    const int b = (-shift) & 63;
    for (std::int64_t i = words - 1; i >= 0; --i) {
      std::uint64_t v = i - k >= 0 ? src[i - k] << b : 0;
      if (b != 0 && i - k - 1 >= 0) v |= src[i - k - 1] >> (64 - b);
      dst[i] = v;
    }
  }
}

// Inclusive-exclusive rectangle sums over the vein map.
struct Integral {
  std::int64_t h = 0, w = 0;
  std::vector<std::int32_t> s;  // (h + 1) x (w + 1)
  std::int32_t rect(std::int64_t y0, std::int64_t y1, std::int64_t x0,
                    std::int64_t x1) const {
    const std::int64_t stride = w + 1;
    return s[static_cast<std::size_t>(y1 * stride + x1)] -
           s[static_cast<std::size_t>(y0 * stride + x1)] -
           s[static_cast<std::size_t>(y1 * stride + x0)] +
           s[static_cast<std::size_t>(y0 * stride + x0)];
  }
};

Integral integral_of(const VeinTemplate& t) {
  Integral in;
  in.h = t.h;
  in.w = t.w;
  const std::int64_t stride = t.w + 1;
  in.s.assign(static_cast<std::size_t>((t.h + 1) * stride), 0);
  for (std::int64_t y = 0; y < t.h; ++y)
    for (std::int64_t x = 0; x < t.w; ++x)
      in.s[static_cast<std::size_t>((y + 1) * stride + (x + 1))] =
          in.s[static_cast<std::size_t>(y * stride + (x + 1))] +
          in.s[static_cast<std::size_t>((y + 1) * stride + x)] -
          in.s[static_cast<std::size_t>(y * stride + x)] + t.at(y, x);
  return in;
}

}  // namespace

MiuraResult miura_match(const VeinTemplate& probe, const VeinTemplate& model,
                        int shift_h, int shift_w) {
  if (probe.h != model.h || probe.w != model.w)
    throw GeometryError("miura_match: template sizes differ");
  if (probe.h < 1 || probe.w < 1)
    throw ParamError("miura_match: empty template geometry");
  if (shift_h < 0 || shift_w < 0 || shift_h > probe.h / 2 ||
      shift_w > probe.w / 2)
    throw ParamError("miura_match: shift bounds must lie in [0, size/2]");

  MiuraResult res;
  if (probe.count() == 0 && model.count() == 0) {
    res.undefined = true;
    return res;
  }

  const PackedMap pm = pack(model);
  const PackedMap pp = pack(probe);
  const Integral im = integral_of(model);
  const Integral ip = integral_of(probe);
  const std::int64_t h = model.h, w = model.w, words = pm.words;

  std::vector<std::uint64_t> aligned(static_cast<std::size_t>(words));
  std::vector<std::uint64_t> colmask(static_cast<std::size_t>(words));
  double best = -1.0;

  // Offset (dy, dx) pairs model(y, x) with probe(y + dy, x + dx); a probe
  // that is the model shifted down-right by (dy, dx) peaks at (dy, dx).
  for (int dy = -shift_h; dy <= shift_h; ++dy) {
    const std::int64_t y0 = std::max<std::int64_t>(0, -dy);
    const std::int64_t y1 = std::min<std::int64_t>(h, h - dy);
    for (int dx = -shift_w; dx <= shift_w; ++dx) {
      const std::int64_t x0 = std::max<std::int64_t>(0, -dx);
      const std::int64_t x1 = std::min<std::int64_t>(w, w - dx);

      std::fill(colmask.begin(), colmask.end(), 0);
      for (std::int64_t x = x0; x < x1; ++x)
        colmask[static_cast<std::size_t>(x >> 6)] |= std::uint64_t{1}
                                                     << (x & 63);

      std::int64_t inter = 0;
      for (std::int64_t y = y0; y < y1; ++y) {
        shift_row(pp.row(y + dy), words, dx, aligned.data());
        const std::uint64_t* mrow = pm.row(y);
        for (std::int64_t i = 0; i < words; ++i)
          inter += std::popcount(mrow[i] & aligned[i] & colmask[i]);
      }

      const std::int64_t denom =
          im.rect(y0, y1, x0, x1) +
          ip.rect(y0 + dy, y1 + dy, x0 + dx, x1 + dx);
      const double score =
          denom > 0 ? static_cast<double>(inter) / static_cast<double>(denom)
                    : 0.0;
      if (score > best) {
        best = score;
        res.score = score;
        res.dy = dy;
        res.dx = dx;
      }
    }
  }
  return res;
}

}  // namespace fv::rec
