#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "fv/nn/adam.hpp"
#include "fv/resfpn/model.hpp"

namespace fv::train {

// Binary container: magic, u32 format version, length-prefixed JSON metadata
// (architecture plus caller extras), then named tensors as
// u32 name length | name | u8 dtype tag | 4 x u64 dims | raw LE float32.
// Integers are little-endian throughout.

inline constexpr char kCheckpointMagic[8] = {'F', 'V', 'E', 'I', 'N', 'C', 'K', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  resfpn::Model model;
  std::optional<nn::AdamState> adam;
  nlohmann::json extra;  // metadata minus the architecture block
};

void checkpoint_save(const std::string& path, resfpn::Model& model,
                     const nn::AdamState* adam = nullptr,
                     const nlohmann::json& extra = nlohmann::json::object());

Checkpoint checkpoint_load(const std::string& path);

}  // namespace fv::train
