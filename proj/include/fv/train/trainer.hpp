#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "fv/nn/adam.hpp"
#include "fv/resfpn/model.hpp"
#include "fv/train/augment.hpp"
#include "fv/train/loss.hpp"

namespace fv::train {

struct TrainConfig {
  float lr = 1e-4f;
  int epochs = 100;
  int batch_size = 8;
  float alpha = 0.10f;
  std::uint64_t seed = 0;
  int target_h = 240;
  int target_w = 320;
  float val_fraction = 0.2f;

  void validate() const;
};

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;
  std::int64_t batches = 0;
  std::int64_t samples = 0;
};

// One pass over pre-augmented samples: reshuffles with (config.seed, epoch),
// then per batch runs forward, deep-supervision loss, backward and Adam.
// A poisoned gradient aborts the epoch; batchnorm running stats are rolled
// back to the last completed batch before the error propagates.
EpochStats train_epoch(resfpn::Model& model, const std::vector<TrainSample>& samples,
                       const TrainConfig& cfg, nn::AdamState& adam, int epoch);

// Mean loss over samples with eval-mode batchnorm; mutates nothing.
double validate(resfpn::Model& model, const std::vector<TrainSample>& samples);

struct FitReport {
  std::vector<EpochStats> epochs;
  std::vector<double> val_losses;
  int best_epoch = -1;
  double best_val_loss = 0.0;
};

// Full training driver: augments the train set, runs the epoch schedule and
// tracks the best-validation parameter snapshot, which is restored into
// `model` before returning. Per-epoch JSON lines go to `log` if given.
FitReport fit(resfpn::Model& model, const std::vector<TrainSample>& train_set,
              const std::vector<TrainSample>& val_set, const TrainConfig& cfg,
              nn::AdamState& adam, std::ostream* log = nullptr);

}  // namespace fv::train
