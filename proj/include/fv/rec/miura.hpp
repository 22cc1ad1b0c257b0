#pragma once

#include <string>

#include "fv/rec/max_curvature.hpp"

namespace fv::rec {

// One probe-vs-model comparison, ready for the score CSV.
struct MatchScore {
  double value = 0.0;  // in [0, 0.5]
  std::string probe_id;
  std::string model_id;
  bool is_genuine = false;
};

struct MiuraResult {
  double score = 0.0;  // in [0, 0.5]
  int dy = 0;          // probe displacement at the best offset
  int dx = 0;
  bool undefined = false;  // both templates empty, score pinned to 0
};

// Slides the probe over the model within +-(shift_h, shift_w) pixels. At
// each offset the score is the vein overlap count divided by the total
// vein count of both maps inside the common region, so a self match peaks
// at exactly 0.5. Ties keep the first offset in (dy, dx) scan order.
// Templates must share dimensions; shifts must be non-negative and at most
// half the template size.
MiuraResult miura_match(const VeinTemplate& probe, const VeinTemplate& model,
                        int shift_h, int shift_w);

}  // namespace fv::rec
