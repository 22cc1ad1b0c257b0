#pragma once

#include <vector>

#include "fv/common/image.hpp"
#include "fv/nn/ops.hpp"

namespace fv::train {

struct LossBreakdown {
  double total = 0.0;
  double final_bce = 0.0;
  std::vector<double> level_bce;
};

// Deep-supervision objective: cross-entropy on the fused output plus, for
// each level, the channel-mean cross-entropy of the sigmoided side output
// against the same single-channel target.
LossBreakdown total_loss(const nn::Tensor& y, const std::vector<nn::Tensor>& s_hat,
                         const nn::Tensor& target);

struct LossGrads {
  nn::Tensor d_y;                   // w.r.t. the post-sigmoid fused output
  std::vector<nn::Tensor> d_s_hat;  // w.r.t. the pre-sigmoid side outputs
};

LossGrads total_loss_grads(const nn::Tensor& y, const std::vector<nn::Tensor>& s_hat,
                           const nn::Tensor& target);

// Stacks masks into a supervision target. Vein pixels (mask 1) train toward
// 0 and background toward 1, so the learned map darkens veins when blended
// into the presentation.
nn::Tensor target_from_masks(const std::vector<const Image*>& masks);
nn::Tensor batch_from_images(const std::vector<const Image*>& images);

}  // namespace fv::train
