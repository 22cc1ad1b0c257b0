#pragma once

#include <vector>

#include "fv/nn/tensor.hpp"

namespace fv::nn {

// Every op comes as an explicit forward/backward pair. Backward functions
// take whatever the forward cached (inputs or outputs) plus the incoming
// gradient and return gradients with the same shapes as the inputs.

// ---------------------------------------------------------------------------
// conv2d: cross-correlation with zero padding, identical stride/padding on
// both axes. weight is (c_out, c_in, kh, kw); bias is (1, c_out, 1, 1).

struct Conv2dParams {
  Tensor weight;
  Tensor bias;
  int stride = 1;
  int pad = 0;

  std::int64_t out_channels() const { return weight.shape().n; }
  std::int64_t in_channels() const { return weight.shape().c; }
  std::int64_t kh() const { return weight.shape().h; }
  std::int64_t kw() const { return weight.shape().w; }
};

Conv2dParams make_conv(std::int64_t c_out, std::int64_t c_in, std::int64_t kh,
                       std::int64_t kw, int stride, int pad);

Shape conv2d_out_shape(const Shape& in, const Conv2dParams& p);
Tensor conv2d(const Tensor& x, const Conv2dParams& p);

struct Conv2dGrads {
  Tensor x;
  Tensor weight;
  Tensor bias;
};
Conv2dGrads conv2d_backward(const Tensor& x, const Conv2dParams& p, const Tensor& grad_out);

// ---------------------------------------------------------------------------
// relu

Tensor relu(const Tensor& x);
// Gradient is masked wherever x <= 0.
Tensor relu_backward(const Tensor& x, const Tensor& grad_out);

// ---------------------------------------------------------------------------
// batchnorm: per-channel normalisation over (n, h, w).
// Train mode normalises with batch statistics (biased variance) and blends
// the running stats with momentum, using the unbiased variance estimate.
// Eval mode is a pure affine map from the running stats and mutates nothing.

enum class BnMode { train, eval };

struct BatchNormParams {
  Tensor gamma;         // (1, c, 1, 1)
  Tensor beta;          // (1, c, 1, 1)
  Tensor running_mean;  // (1, c, 1, 1)
  Tensor running_var;   // (1, c, 1, 1), strictly positive
  float eps = 1e-5f;
  float momentum = 0.1f;
  BnMode mode = BnMode::train;
};

BatchNormParams make_batchnorm(std::int64_t channels, float eps = 1e-5f,
                               float momentum = 0.1f);

struct BnCache {
  Tensor x_hat;                  // normalised input, train mode only
  std::vector<float> inv_std;    // per channel
  std::int64_t count = 0;        // n*h*w per channel
};

Tensor batchnorm(const Tensor& x, BatchNormParams& p, BnCache* cache = nullptr);

struct BnGrads {
  Tensor x;
  Tensor gamma;
  Tensor beta;
};
BnGrads batchnorm_backward(const BnCache& cache, const BatchNormParams& p,
                           const Tensor& grad_out);

// ---------------------------------------------------------------------------
// sigmoid

Tensor sigmoid(const Tensor& x);
// Takes the forward *output* y, not the input.
Tensor sigmoid_backward(const Tensor& y, const Tensor& grad_out);

// ---------------------------------------------------------------------------
// nearest-neighbour upsampling by an integer factor

Tensor upsample_nearest(const Tensor& x, int factor);
Tensor upsample_nearest_backward(const Shape& in_shape, int factor, const Tensor& grad_out);

// ---------------------------------------------------------------------------
// channel concatenation

Tensor concat_channels(const std::vector<const Tensor*>& xs);
std::vector<Tensor> concat_channels_backward(const std::vector<Shape>& in_shapes,
                                             const Tensor& grad_out);

// ---------------------------------------------------------------------------
// binary cross-entropy, mean over all elements, probabilities clamped to
// [eps, 1-eps] with eps = 1e-7 before the logs.

inline constexpr double kBceEps = 1e-7;

double bce_loss(const Tensor& y, const Tensor& target);
Tensor bce_loss_backward(const Tensor& y, const Tensor& target);

}  // namespace fv::nn
