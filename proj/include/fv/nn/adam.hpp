#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fv/nn/tensor.hpp"

namespace fv::nn {

// Named handle to a trainable tensor. The tensor's grad buffer holds the
// gradient consumed by the optimiser.
struct ParamSlot {
  std::string name;
  Tensor* tensor = nullptr;
};

// First and second moment buffers plus the step counter. Buffers are laid
// out parallel to the parameter list handed to adam_step.
struct AdamState {
  float lr = 1e-4f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
  std::int64_t step = 0;
  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;
};

// One update over all parameters. Scans every gradient for non-finite
// values first and throws NumericError before touching any state, so the
// model is left exactly as it was on failure.
void adam_step(const std::vector<ParamSlot>& params, AdamState& state);

}  // namespace fv::nn
