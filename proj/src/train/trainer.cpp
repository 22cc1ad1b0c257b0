#include "fv/train/trainer.hpp"

#include <algorithm>
#include <numeric>

#include <nlohmann/json.hpp>

#include "fv/common/rng.hpp"

namespace fv::train {

void TrainConfig::validate() const {
  if (!(lr >= 0.f)) throw ParamError("train config: lr must be non-negative");
  if (epochs < 1) throw ParamError("train config: epochs must be >= 1");
  if (batch_size < 2)
    throw ParamError("train config: batch_size must be >= 2 for train-mode batchnorm");
  if (alpha < 0.f || alpha > 1.f)
    throw ParamError("train config: alpha must lie in [0, 1]");
  if (target_h < 1 || target_w < 1)
    throw ParamError("train config: target size must be positive");
  if (val_fraction < 0.f || val_fraction >= 1.f)
    throw ParamError("train config: val_fraction must lie in [0, 1)");
}

namespace {

struct BnSnapshot {
  std::vector<std::vector<float>> mean;
  std::vector<std::vector<float>> var;

  static BnSnapshot take(resfpn::Model& model) {
    BnSnapshot s;
    for (resfpn::SdBlock& b : model.blocks()) {
      s.mean.push_back(b.bn.running_mean.vec());
      s.var.push_back(b.bn.running_var.vec());
    }
    return s;
  }

  void restore(resfpn::Model& model) const {
    for (std::size_t i = 0; i < model.blocks().size(); ++i) {
      model.blocks()[i].bn.running_mean.vec() = mean[i];
      model.blocks()[i].bn.running_var.vec() = var[i];
    }
  }
};

double run_batch(resfpn::Model& model, const std::vector<TrainSample>& samples,
                 const std::vector<std::size_t>& order, std::size_t begin,
                 std::size_t end, nn::AdamState& adam) {
  std::vector<const Image*> images;
  std::vector<const Image*> masks;
  for (std::size_t i = begin; i < end; ++i) {
    images.push_back(&samples[order[i]].image);
    masks.push_back(&samples[order[i]].mask);
  }
  nn::Tensor input = batch_from_images(images);
  nn::Tensor target = target_from_masks(masks);

  resfpn::ForwardCache cache;
  resfpn::ForwardResult res = resfpn::forward(model, input, &cache);
  const LossBreakdown loss = total_loss(res.y, res.s_hat, target);
  LossGrads grads = total_loss_grads(res.y, res.s_hat, target);

  model.zero_grad();
  resfpn::backward(model, cache, grads.d_y, grads.d_s_hat);
  std::vector<nn::ParamSlot> params = model.parameters();
  nn::adam_step(params, adam);
  return loss.total;
}

}  // namespace

EpochStats train_epoch(resfpn::Model& model, const std::vector<TrainSample>& samples,
                       const TrainConfig& cfg, nn::AdamState& adam, int epoch) {
  cfg.validate();
  if (samples.empty()) throw ParamError("train_epoch: no samples");
  model.set_mode(nn::BnMode::train);

  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
  for (std::size_t i = samples.size(); i > 1; --i) {
    const std::size_t j =
        static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(order[i - 1], order[j]);
  }

  EpochStats stats;
  stats.epoch = epoch;
  double loss_sum = 0.0;
  BnSnapshot last_good = BnSnapshot::take(model);
  for (std::size_t begin = 0; begin < samples.size();
       begin += static_cast<std::size_t>(cfg.batch_size)) {
    const std::size_t end =
        std::min(samples.size(), begin + static_cast<std::size_t>(cfg.batch_size));
    try {
      loss_sum += run_batch(model, samples, order, begin, end, adam) *
                  static_cast<double>(end - begin);
    } catch (const NumericError&) {
      // Adam refused the update, so parameters are untouched; only the
      // running stats moved during the failed forward. Put them back.
      last_good.restore(model);
      throw;
    }
    last_good = BnSnapshot::take(model);
    stats.batches += 1;
    stats.samples += static_cast<std::int64_t>(end - begin);
  }
  stats.mean_loss = loss_sum / static_cast<double>(stats.samples);
  return stats;
}

double validate(resfpn::Model& model, const std::vector<TrainSample>& samples) {
  if (samples.empty()) throw ParamError("validate: no samples");
  const nn::BnMode prev = model.mode();
  model.set_mode(nn::BnMode::eval);
  double acc = 0.0;
  try {
    for (const TrainSample& s : samples) {
      nn::Tensor input = batch_from_images({&s.image});
      nn::Tensor target = target_from_masks({&s.mask});
      resfpn::ForwardResult res = resfpn::forward(model, input);
      acc += total_loss(res.y, res.s_hat, target).total;
    }
  } catch (...) {
    model.set_mode(prev);
    throw;
  }
  model.set_mode(prev);
  return acc / static_cast<double>(samples.size());
}

FitReport fit(resfpn::Model& model, const std::vector<TrainSample>& train_set,
              const std::vector<TrainSample>& val_set, const TrainConfig& cfg,
              nn::AdamState& adam, std::ostream* log) {
  cfg.validate();
  if (train_set.empty()) throw ParamError("fit: empty training set");

  std::vector<TrainSample> augmented;
  augmented.reserve(train_set.size() * 4);
  for (const TrainSample& s : train_set) {
    TrainSample sized = rescale_sample(s, cfg.target_h, cfg.target_w);
    for (TrainSample& a : augment_flips(sized)) augmented.push_back(std::move(a));
  }
  std::vector<TrainSample> val_sized;
  for (const TrainSample& s : val_set)
    val_sized.push_back(rescale_sample(s, cfg.target_h, cfg.target_w));

  FitReport report;
  std::vector<std::vector<float>> best_params;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    EpochStats stats = train_epoch(model, augmented, cfg, adam, epoch);
    report.epochs.push_back(stats);

    double val = stats.mean_loss;
    if (!val_sized.empty()) val = validate(model, val_sized);
    report.val_losses.push_back(val);

    const bool best = report.best_epoch < 0 || val < report.best_val_loss;
    if (best) {
      report.best_epoch = epoch;
      report.best_val_loss = val;
      best_params.clear();
      for (const nn::ParamSlot& p : model.state_tensors())
        best_params.push_back(p.tensor->vec());
    }
    if (log) {
      nlohmann::json line{{"epoch", epoch},
                          {"train_loss", stats.mean_loss},
                          {"val_loss", val},
                          {"batches", stats.batches},
                          {"best", best}};
      (*log) << line.dump() << "\n";
    }
  }

  if (!best_params.empty()) {
    std::vector<nn::ParamSlot> slots = model.state_tensors();
    for (std::size_t i = 0; i < slots.size(); ++i)
      slots[i].tensor->vec() = best_params[i];
  }
  return report;
}

}  // namespace fv::train
