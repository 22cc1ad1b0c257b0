#pragma once

#include <cstdint>

#include "fv/common/image.hpp"

namespace fv::rec {

struct PreprocessOptions {
  int out_h = 240;
  int out_w = 320;
  double smooth_sigma = 2.0;
  // Minimum fraction of the frame the finger must cover.
  double min_region_frac = 0.10;
};

// Geometry recovered while normalising a presentation; mainly for tests
// and diagnostics.
struct PreprocessInfo {
  double angle_rad = 0.0;
  double region_frac = 0.0;
  std::int64_t box_y0 = 0;
  std::int64_t box_x0 = 0;
  std::int64_t box_h = 0;
  std::int64_t box_w = 0;
};

// Normalises a raw finger presentation: segments the bright finger region
// against the dark background, rotates the finger axis to horizontal using
// a least-squares line through the per-column boundary midpoints, crops to
// the finger bounding box and rescales to out_h x out_w.
// Throws SegmentationError when the segmented region covers less than
// min_region_frac of the frame.
Image preprocess_finger(const Image& input, const PreprocessOptions& opt = {},
                        PreprocessInfo* info = nullptr);

}  // namespace fv::rec
