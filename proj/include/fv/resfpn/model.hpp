#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "fv/common/image.hpp"
#include "fv/nn/adam.hpp"
#include "fv/nn/ops.hpp"

namespace fv::resfpn {

// Network hyperparameters. The defaults describe the stock model used by
// the CLI: four downscaling blocks over a single-channel input, an 8-channel
// side output per block, and a two-layer fusion head.
struct ModelConfig {
  int levels = 4;
  int input_channels = 1;
  std::vector<int> level_channels{24, 48, 96, 192};
  std::vector<int> cf_kernels{5, 5, 5, 5};
  int n_ch = 8;
  int fuse_hidden = 32;
  int fuse_kernel = 3;
  float alpha = 0.10f;
  float bn_eps = 1e-5f;
  float bn_momentum = 0.1f;
  int input_h = 240;
  int input_w = 320;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

// One downscaling block: a strided feature conv whose rectified output is
// the block's side feature, added to a 1x1 strided shortcut and normalised.
struct SdBlock {
  nn::Conv2dParams c_f;
  nn::Conv2dParams c_i;
  nn::BatchNormParams bn;
};

// Aggregation head: per-level 1x1 lateral convs brought to input resolution,
// concatenated and fused down to a single-channel map.
struct Fam {
  std::vector<nn::Conv2dParams> lateral;
  nn::Conv2dParams fuse1;
  nn::Conv2dParams fuse2;
};

struct SdBlockCache {
  nn::Tensor x_in;
  nn::Tensor cf_pre;  // feature conv output before relu
  nn::BnCache bn;
};

struct FamCache {
  std::vector<nn::Tensor> s_in;
  std::vector<nn::Shape> lat_shapes;
  nn::Tensor cat;
  nn::Tensor fuse1_pre;
  nn::Tensor y;  // post-sigmoid
};

struct ForwardCache {
  std::vector<SdBlockCache> blocks;
  FamCache fam;
};

struct ForwardResult {
  nn::Tensor y;                   // (n, 1, h, w), in (0, 1)
  std::vector<nn::Tensor> s_hat;  // per level, (n, n_ch, h, w), pre-sigmoid
};

class Model {
 public:
  // Fresh model with Kaiming-normal conv weights drawn from `seed`.
  static Model build(const ModelConfig& cfg, std::uint64_t seed);
  // Structure only, all conv weights zero; used by the checkpoint loader.
  static Model build_empty(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }
  std::vector<SdBlock>& blocks() { return blocks_; }
  const std::vector<SdBlock>& blocks() const { return blocks_; }
  Fam& fam() { return fam_; }
  const Fam& fam() const { return fam_; }

  void set_mode(nn::BnMode mode);
  nn::BnMode mode() const { return mode_; }

  // Overrides the blend weight used by enhance; must lie in [0, 1].
  void set_alpha(float alpha);

  // Trainable tensors in a fixed order.
  std::vector<nn::ParamSlot> parameters();
  // Trainable tensors plus batchnorm running stats; the checkpoint payload.
  std::vector<nn::ParamSlot> state_tensors();

  void zero_grad();

 private:
  ModelConfig cfg_;
  std::vector<SdBlock> blocks_;
  Fam fam_;
  nn::BnMode mode_ = nn::BnMode::train;
};

ForwardResult forward(Model& model, const nn::Tensor& input,
                      ForwardCache* cache = nullptr);

// Accumulates parameter gradients from dL/dy (post-sigmoid) and the
// per-level dL/ds_hat terms. Call Model::zero_grad first.
void backward(Model& model, const ForwardCache& cache, const nn::Tensor& grad_y,
              const std::vector<nn::Tensor>& grad_s_hat);

std::int64_t param_count(Model& model);

// Runs the network in eval mode and blends the vein map into the input:
// out = alpha * y + (1 - alpha) * input, clamped to [0, 1].
Image enhance(Model& model, const Image& input);

// enhance for arbitrary input sizes: dimensions the network can consume are
// processed natively; anything else is run through the configured working
// size, with the vein map resampled back before blending at full resolution.
Image enhance_fit(Model& model, const Image& input);

nn::Tensor to_tensor(const Image& img);
Image to_image(const nn::Tensor& t, std::int64_t n = 0, std::int64_t c = 0);

}  // namespace fv::resfpn
