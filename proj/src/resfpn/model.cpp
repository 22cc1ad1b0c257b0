#include "fv/resfpn/model.hpp"

#include <algorithm>
#include <cmath>

#include "fv/common/resample.hpp"
#include "fv/common/rng.hpp"

namespace fv::resfpn {

void ModelConfig::validate() const {
  if (levels < 1) throw ParamError("model config: levels must be >= 1");
  if (input_channels < 1) throw ParamError("model config: input_channels must be >= 1");
  if (static_cast<int>(level_channels.size()) != levels)
    throw ParamError("model config: level_channels must list one width per level");
  if (static_cast<int>(cf_kernels.size()) != levels)
    throw ParamError("model config: cf_kernels must list one kernel per level");
  for (int c : level_channels)
    if (c < 1) throw ParamError("model config: level widths must be >= 1");
  for (int k : cf_kernels)
    if (k < 1 || k % 2 == 0)
      throw ParamError("model config: feature kernels must be odd and >= 1");
  if (n_ch < 1) throw ParamError("model config: n_ch must be >= 1");
  if (fuse_hidden < 1) throw ParamError("model config: fuse_hidden must be >= 1");
  if (fuse_kernel < 1 || fuse_kernel % 2 == 0)
    throw ParamError("model config: fuse_kernel must be odd and >= 1");
  if (alpha < 0.f || alpha > 1.f)
    throw ParamError("model config: alpha must lie in [0, 1]");
  if (!(bn_eps > 0.f)) throw ParamError("model config: bn_eps must be positive");
  if (bn_momentum < 0.f || bn_momentum > 1.f)
    throw ParamError("model config: bn_momentum must lie in [0, 1]");
  if (input_h < 1 || input_w < 1)
    throw ParamError("model config: input size must be positive");
  const int div = 1 << levels;
  if (input_h % div != 0 || input_w % div != 0)
    throw ParamError("model config: input size must be divisible by 2^levels");
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"levels", c.levels},
                     {"input_channels", c.input_channels},
                     {"level_channels", c.level_channels},
                     {"cf_kernels", c.cf_kernels},
                     {"n_ch", c.n_ch},
                     {"fuse_hidden", c.fuse_hidden},
                     {"fuse_kernel", c.fuse_kernel},
                     {"alpha", c.alpha},
                     {"bn_eps", c.bn_eps},
                     {"bn_momentum", c.bn_momentum},
                     {"input_h", c.input_h},
                     {"input_w", c.input_w}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  c = ModelConfig{};
  j.at("levels").get_to(c.levels);
  j.at("input_channels").get_to(c.input_channels);
  j.at("level_channels").get_to(c.level_channels);
  j.at("cf_kernels").get_to(c.cf_kernels);
  j.at("n_ch").get_to(c.n_ch);
  j.at("fuse_hidden").get_to(c.fuse_hidden);
  j.at("fuse_kernel").get_to(c.fuse_kernel);
  j.at("alpha").get_to(c.alpha);
  j.at("bn_eps").get_to(c.bn_eps);
  j.at("bn_momentum").get_to(c.bn_momentum);
  j.at("input_h").get_to(c.input_h);
  j.at("input_w").get_to(c.input_w);
  c.validate();
}

namespace {

void kaiming_fill(nn::Tensor& w, Rng& rng) {
  const nn::Shape s = w.shape();
  const double fan_in = static_cast<double>(s.c * s.h * s.w);
  const double std_dev = std::sqrt(2.0 / fan_in);
  float* p = w.data();
  const std::int64_t n = w.numel();
  for (std::int64_t i = 0; i < n; ++i)
    p[i] = static_cast<float>(rng.normal() * std_dev);
}

Model build_impl(const ModelConfig& cfg, Rng* rng) {
  cfg.validate();
  Model model = Model::build_empty(cfg);
  if (rng) {
    for (SdBlock& b : model.blocks()) {
      kaiming_fill(b.c_f.weight, *rng);
      kaiming_fill(b.c_i.weight, *rng);
    }
    for (nn::Conv2dParams& lat : model.fam().lateral) kaiming_fill(lat.weight, *rng);
    kaiming_fill(model.fam().fuse1.weight, *rng);
    kaiming_fill(model.fam().fuse2.weight, *rng);
  }
  return model;
}

}  // namespace

Model Model::build_empty(const ModelConfig& cfg) {
  cfg.validate();
  Model model;
  model.cfg_ = cfg;
  int in_ch = cfg.input_channels;
  for (int l = 0; l < cfg.levels; ++l) {
    const int out_ch = cfg.level_channels[static_cast<std::size_t>(l)];
    const int k = cfg.cf_kernels[static_cast<std::size_t>(l)];
    SdBlock b;
    b.c_f = nn::make_conv(out_ch, in_ch, k, k, 2, k / 2);
    b.c_i = nn::make_conv(out_ch, in_ch, 1, 1, 2, 0);
    b.bn = nn::make_batchnorm(out_ch, cfg.bn_eps, cfg.bn_momentum);
    model.blocks_.push_back(std::move(b));
    in_ch = out_ch;
  }
  for (int l = 0; l < cfg.levels; ++l) {
    const int ch = cfg.level_channels[static_cast<std::size_t>(l)];
    model.fam_.lateral.push_back(nn::make_conv(cfg.n_ch, ch, 1, 1, 1, 0));
  }
  model.fam_.fuse1 = nn::make_conv(cfg.fuse_hidden, cfg.levels * cfg.n_ch,
                                   cfg.fuse_kernel, cfg.fuse_kernel, 1,
                                   cfg.fuse_kernel / 2);
  model.fam_.fuse2 = nn::make_conv(1, cfg.fuse_hidden, 1, 1, 1, 0);
  model.set_mode(nn::BnMode::train);
  return model;
}

Model Model::build(const ModelConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  return build_impl(cfg, &rng);
}

void Model::set_mode(nn::BnMode mode) {
  mode_ = mode;
  for (SdBlock& b : blocks_) b.bn.mode = mode;
}

void Model::set_alpha(float alpha) {
  if (!(alpha >= 0.f && alpha <= 1.f))
    throw ParamError("set_alpha: alpha must lie in [0, 1]");
  cfg_.alpha = alpha;
}

std::vector<nn::ParamSlot> Model::parameters() {
  std::vector<nn::ParamSlot> out;
  for (std::size_t l = 0; l < blocks_.size(); ++l) {
    const std::string p = "block" + std::to_string(l + 1) + ".";
    out.push_back({p + "cf.weight", &blocks_[l].c_f.weight});
    out.push_back({p + "cf.bias", &blocks_[l].c_f.bias});
    out.push_back({p + "ci.weight", &blocks_[l].c_i.weight});
    out.push_back({p + "ci.bias", &blocks_[l].c_i.bias});
    out.push_back({p + "bn.gamma", &blocks_[l].bn.gamma});
    out.push_back({p + "bn.beta", &blocks_[l].bn.beta});
  }
  for (std::size_t l = 0; l < fam_.lateral.size(); ++l) {
    const std::string p = "fam.lateral" + std::to_string(l + 1) + ".";
    out.push_back({p + "weight", &fam_.lateral[l].weight});
    out.push_back({p + "bias", &fam_.lateral[l].bias});
  }
  out.push_back({"fam.fuse1.weight", &fam_.fuse1.weight});
  out.push_back({"fam.fuse1.bias", &fam_.fuse1.bias});
  out.push_back({"fam.fuse2.weight", &fam_.fuse2.weight});
  out.push_back({"fam.fuse2.bias", &fam_.fuse2.bias});
  return out;
}

std::vector<nn::ParamSlot> Model::state_tensors() {
  std::vector<nn::ParamSlot> out = parameters();
  for (std::size_t l = 0; l < blocks_.size(); ++l) {
    const std::string p = "block" + std::to_string(l + 1) + ".bn.";
    out.push_back({p + "running_mean", &blocks_[l].bn.running_mean});
    out.push_back({p + "running_var", &blocks_[l].bn.running_var});
  }
  return out;
}

void Model::zero_grad() {
  for (const nn::ParamSlot& p : parameters()) p.tensor->zero_grad();
}

ForwardResult forward(Model& model, const nn::Tensor& input, ForwardCache* cache) {
  const ModelConfig& cfg = model.config();
  const nn::Shape is = input.shape();
  if (is.c != cfg.input_channels)
    throw ParamError("forward: expected " + std::to_string(cfg.input_channels) +
                     " input channels, got " + std::to_string(is.c));
  const std::int64_t div = std::int64_t{1} << cfg.levels;
  if (is.h % div != 0 || is.w % div != 0)
    throw GeometryError("forward: spatial dims " + std::to_string(is.h) + "x" +
                        std::to_string(is.w) + " must be divisible by " +
                        std::to_string(div));

  if (cache) {
    cache->blocks.assign(static_cast<std::size_t>(cfg.levels), SdBlockCache{});
    cache->fam = FamCache{};
  }

  std::vector<nn::Tensor> s_list;
  s_list.reserve(static_cast<std::size_t>(cfg.levels));
  nn::Tensor x = input;
  for (int l = 0; l < cfg.levels; ++l) {
    SdBlock& b = model.blocks()[static_cast<std::size_t>(l)];
    if (x.shape().h % 2 != 0 || x.shape().w % 2 != 0)
      throw GeometryError("forward: block input dims must be even, got " +
                          x.shape().str());
    nn::Tensor cf_pre = nn::conv2d(x, b.c_f);
    nn::Tensor s = nn::relu(cf_pre);
    nn::Tensor shortcut = nn::conv2d(x, b.c_i);
    nn::Tensor summed = nn::add(shortcut, s);
    SdBlockCache* bc = cache ? &cache->blocks[static_cast<std::size_t>(l)] : nullptr;
    nn::Tensor x_next = nn::batchnorm(summed, b.bn, bc ? &bc->bn : nullptr);
    if (bc) {
      bc->x_in = std::move(x);
      bc->cf_pre = std::move(cf_pre);
    }
    s_list.push_back(std::move(s));
    x = std::move(x_next);
  }

  Fam& fam = model.fam();
  std::vector<nn::Tensor> s_hat;
  s_hat.reserve(s_list.size());
  std::vector<nn::Shape> lat_shapes;
  for (int l = 0; l < cfg.levels; ++l) {
    // The lateral conv is 1x1, so it commutes with nearest-neighbour
    // upsampling; applying it at block resolution first is bit-identical
    // and far cheaper than convolving the upsampled map.
    nn::Tensor lat = nn::conv2d(s_list[static_cast<std::size_t>(l)],
                                fam.lateral[static_cast<std::size_t>(l)]);
    lat_shapes.push_back(lat.shape());
    const int factor = 1 << (l + 1);
    nn::Tensor up = nn::upsample_nearest(lat, factor);
    if (up.shape().h != is.h || up.shape().w != is.w)
      throw GeometryError("forward: level " + std::to_string(l + 1) +
                          " side output does not reach input resolution");
    s_hat.push_back(std::move(up));
  }

  std::vector<const nn::Tensor*> cat_in;
  for (const nn::Tensor& t : s_hat) cat_in.push_back(&t);
  nn::Tensor cat = nn::concat_channels(cat_in);
  nn::Tensor fuse1_pre = nn::conv2d(cat, fam.fuse1);
  nn::Tensor hidden = nn::relu(fuse1_pre);
  nn::Tensor y_hat = nn::conv2d(hidden, fam.fuse2);
  nn::Tensor y = nn::sigmoid(y_hat);

  if (cache) {
    cache->fam.s_in = std::move(s_list);
    cache->fam.lat_shapes = std::move(lat_shapes);
    cache->fam.cat = std::move(cat);
    cache->fam.fuse1_pre = std::move(fuse1_pre);
    cache->fam.y = y;
  }

  ForwardResult res;
  res.y = std::move(y);
  res.s_hat = std::move(s_hat);
  return res;
}

void backward(Model& model, const ForwardCache& cache, const nn::Tensor& grad_y,
              const std::vector<nn::Tensor>& grad_s_hat) {
  const ModelConfig& cfg = model.config();
  const std::size_t L = static_cast<std::size_t>(cfg.levels);
  if (cache.blocks.size() != L || cache.fam.s_in.size() != L)
    throw ParamError("backward: cache does not match model depth");
  if (grad_s_hat.size() != L)
    throw ParamError("backward: expected one side-output gradient per level");

  Fam& fam = model.fam();

  nn::Tensor d_yhat = nn::sigmoid_backward(cache.fam.y, grad_y);

  nn::Tensor hidden = nn::relu(cache.fam.fuse1_pre);
  nn::Conv2dGrads g2 = nn::conv2d_backward(hidden, fam.fuse2, d_yhat);
  add_grad(fam.fuse2.weight, g2.weight);
  add_grad(fam.fuse2.bias, g2.bias);

  nn::Tensor d_fuse1_pre = nn::relu_backward(cache.fam.fuse1_pre, g2.x);
  nn::Conv2dGrads g1 = nn::conv2d_backward(cache.fam.cat, fam.fuse1, d_fuse1_pre);
  add_grad(fam.fuse1.weight, g1.weight);
  add_grad(fam.fuse1.bias, g1.bias);

  std::vector<nn::Shape> cat_shapes;
  for (std::size_t l = 0; l < L; ++l) {
    nn::Shape s = cache.fam.lat_shapes[l];
    const int factor = 1 << (l + 1);
    s.h *= factor;
    s.w *= factor;
    cat_shapes.push_back(s);
  }
  std::vector<nn::Tensor> d_shat = nn::concat_channels_backward(cat_shapes, g1.x);

  // Gradients reaching each block's side feature: the fused path plus the
  // level's own supervision term, then back through upsample and lateral.
  std::vector<nn::Tensor> d_s(L);
  for (std::size_t l = 0; l < L; ++l) {
    if (!(grad_s_hat[l].shape() == d_shat[l].shape()))
      throw ParamError("backward: side-output gradient shape mismatch at level " +
                       std::to_string(l + 1));
    nn::add_into(d_shat[l], grad_s_hat[l]);
    const int factor = 1 << (l + 1);
    nn::Tensor d_lat =
        nn::upsample_nearest_backward(cache.fam.lat_shapes[l], factor, d_shat[l]);
    nn::Conv2dGrads gl = nn::conv2d_backward(cache.fam.s_in[l], fam.lateral[l], d_lat);
    add_grad(fam.lateral[l].weight, gl.weight);
    add_grad(fam.lateral[l].bias, gl.bias);
    d_s[l] = std::move(gl.x);
  }

  // Walk the blocks top-down. The deepest block's normalised output feeds
  // nothing, so its incoming gradient starts at zero.
  nn::Tensor d_xnext;
  for (std::size_t li = L; li-- > 0;) {
    SdBlock& b = model.blocks()[li];
    const SdBlockCache& bc = cache.blocks[li];
    if (d_xnext.numel() == 0) d_xnext = nn::Tensor(bc.bn.x_hat.shape());

    nn::BnGrads gbn = nn::batchnorm_backward(bc.bn, b.bn, d_xnext);
    add_grad(b.bn.gamma, gbn.gamma);
    add_grad(b.bn.beta, gbn.beta);

    // The sum node routes the batchnorm gradient to both the shortcut conv
    // and the rectified feature path.
    nn::Tensor d_s_total = std::move(d_s[li]);
    nn::add_into(d_s_total, gbn.x);

    nn::Tensor d_cf_pre = nn::relu_backward(bc.cf_pre, d_s_total);
    nn::Conv2dGrads gf = nn::conv2d_backward(bc.x_in, b.c_f, d_cf_pre);
    add_grad(b.c_f.weight, gf.weight);
    add_grad(b.c_f.bias, gf.bias);

    nn::Conv2dGrads gi = nn::conv2d_backward(bc.x_in, b.c_i, gbn.x);
    add_grad(b.c_i.weight, gi.weight);
    add_grad(b.c_i.bias, gi.bias);

    d_xnext = std::move(gf.x);
    nn::add_into(d_xnext, gi.x);
  }
}

std::int64_t param_count(Model& model) {
  std::int64_t total = 0;
  for (const nn::ParamSlot& p : model.parameters()) total += p.tensor->numel();
  return total;
}

Image enhance(Model& model, const Image& input) {
  const nn::BnMode prev = model.mode();
  model.set_mode(nn::BnMode::eval);
  ForwardResult res;
  try {
    res = forward(model, to_tensor(input));
  } catch (...) {
    model.set_mode(prev);
    throw;
  }
  model.set_mode(prev);

  const float alpha = model.config().alpha;
  Image out(input.h, input.w);
  const float* py = res.y.data();
  for (std::size_t i = 0; i < input.pix.size(); ++i) {
    const float v = alpha * py[i] + (1.f - alpha) * input.pix[i];
    out.pix[i] = std::clamp(v, 0.f, 1.f);
  }
  return out;
}

Image enhance_fit(Model& model, const Image& input) {
  const std::int64_t stride = std::int64_t{1} << model.config().levels;
  if (input.h % stride == 0 && input.w % stride == 0)
    return enhance(model, input);

  const nn::BnMode prev = model.mode();
  model.set_mode(nn::BnMode::eval);
  ForwardResult res;
  try {
    const Image work = resample_bilinear(input, model.config().input_h,
                                         model.config().input_w);
    res = forward(model, to_tensor(work));
  } catch (...) {
    model.set_mode(prev);
    throw;
  }
  model.set_mode(prev);

  const Image y = resample_bilinear(to_image(res.y), input.h, input.w);
  const float alpha = model.config().alpha;
  Image out(input.h, input.w);
  for (std::size_t i = 0; i < input.pix.size(); ++i) {
    const float v = alpha * y.pix[i] + (1.f - alpha) * input.pix[i];
    out.pix[i] = std::clamp(v, 0.f, 1.f);
  }
  return out;
}

nn::Tensor to_tensor(const Image& img) {
  nn::Tensor t({1, 1, img.h, img.w});
  std::copy(img.pix.begin(), img.pix.end(), t.data());
  return t;
}

Image to_image(const nn::Tensor& t, std::int64_t n, std::int64_t c) {
  const nn::Shape s = t.shape();
  if (n >= s.n || c >= s.c) throw ParamError("to_image: plane out of range");
  Image img(s.h, s.w);
  const float* src = t.data() + (n * s.c + c) * s.h * s.w;
  std::copy(src, src + s.h * s.w, img.pix.begin());
  return img;
}

}  // namespace fv::resfpn
