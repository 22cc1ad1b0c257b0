#include "fv/train/loss.hpp"

#include <algorithm>
#include <cmath>

namespace fv::train {
namespace {

void check_shapes(const nn::Tensor& y, const std::vector<nn::Tensor>& s_hat,
                  const nn::Tensor& target) {
  if (!(y.shape() == target.shape()))
    throw ParamError("total_loss: output " + y.shape().str() + " vs target " +
                     target.shape().str());
  if (y.shape().c != 1)
    throw ParamError("total_loss: fused output must be single-channel");
  for (const nn::Tensor& s : s_hat) {
    const nn::Shape ss = s.shape();
    if (ss.n != y.shape().n || ss.h != y.shape().h || ss.w != y.shape().w)
      throw ParamError("total_loss: side output " + ss.str() +
                       " does not align with target " + target.shape().str());
  }
}

double stable_sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

}  // namespace

LossBreakdown total_loss(const nn::Tensor& y, const std::vector<nn::Tensor>& s_hat,
                         const nn::Tensor& target) {
  check_shapes(y, s_hat, target);
  LossBreakdown out;
  out.final_bce = nn::bce_loss(y, target);
  out.total = out.final_bce;

  const std::int64_t plane = target.shape().h * target.shape().w;
  const std::int64_t batch = target.shape().n;
  for (const nn::Tensor& s : s_hat) {
    const std::int64_t ch = s.shape().c;
    const std::int64_t m = batch * ch * plane;
    double acc = 0.0;
    for (std::int64_t n = 0; n < batch; ++n) {
      const float* pt = target.data() + n * plane;
      for (std::int64_t c = 0; c < ch; ++c) {
        const float* ps = s.data() + (n * ch + c) * plane;
        for (std::int64_t i = 0; i < plane; ++i) {
          const double p =
              std::clamp(stable_sigmoid(ps[i]), nn::kBceEps, 1.0 - nn::kBceEps);
          const double t = pt[i];
          acc -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
        }
      }
    }
    out.level_bce.push_back(acc / static_cast<double>(m));
    out.total += out.level_bce.back();
  }
  return out;
}

LossGrads total_loss_grads(const nn::Tensor& y, const std::vector<nn::Tensor>& s_hat,
                           const nn::Tensor& target) {
  check_shapes(y, s_hat, target);
  LossGrads g;
  g.d_y = nn::bce_loss_backward(y, target);

  const std::int64_t plane = target.shape().h * target.shape().w;
  const std::int64_t batch = target.shape().n;
  for (const nn::Tensor& s : s_hat) {
    const std::int64_t ch = s.shape().c;
    const double inv_m = 1.0 / static_cast<double>(batch * ch * plane);
    nn::Tensor ds(s.shape());
    for (std::int64_t n = 0; n < batch; ++n) {
      const float* pt = target.data() + n * plane;
      for (std::int64_t c = 0; c < ch; ++c) {
        const float* ps = s.data() + (n * ch + c) * plane;
        float* pd = ds.data() + (n * ch + c) * plane;
        for (std::int64_t i = 0; i < plane; ++i)
          pd[i] = static_cast<float>((stable_sigmoid(ps[i]) - pt[i]) * inv_m);
      }
    }
    g.d_s_hat.push_back(std::move(ds));
  }
  return g;
}

nn::Tensor target_from_masks(const std::vector<const Image*>& masks) {
  if (masks.empty()) throw ParamError("target_from_masks: empty batch");
  const Image& first = *masks[0];
  nn::Tensor t({static_cast<std::int64_t>(masks.size()), 1, first.h, first.w});
  float* pt = t.data();
  for (const Image* m : masks) {
    if (!m->same_shape(first))
      throw ParamError("target_from_masks: mask sizes differ within batch");
    for (float v : m->pix) *pt++ = 1.f - v;
  }
  return t;
}

nn::Tensor batch_from_images(const std::vector<const Image*>& images) {
  if (images.empty()) throw ParamError("batch_from_images: empty batch");
  const Image& first = *images[0];
  nn::Tensor t({static_cast<std::int64_t>(images.size()), 1, first.h, first.w});
  float* pt = t.data();
  for (const Image* im : images) {
    if (!im->same_shape(first))
      throw ParamError("batch_from_images: image sizes differ within batch");
    pt = std::copy(im->pix.begin(), im->pix.end(), pt);
  }
  return t;
}

}  // namespace fv::train
