#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fv/eval/protocol.hpp"
#include "fv/rec/enroll.hpp"
#include "fv/resfpn/model.hpp"
#include "fv/train/trainer.hpp"

namespace fv::app {

inline constexpr const char* kConfigEnvVar = "FVKIT_CONFIG";

struct RecConfig {
  double mc_sigma = 4.0;
  int shift_h = 12;
  int shift_w = 12;
  rec::PreprocessOptions pre;
};

struct ProtocolConfig {
  std::array<double, 3> fractions{0.8, 0.1, 0.1};
  std::vector<int> train_sessions{1};
  std::vector<int> enroll_sessions{2, 3};
  std::vector<int> probe_sessions{4, 5, 6};
  std::optional<std::array<std::array<int, 2>, 3>> client_ranges;
};

// One run's complete configuration; its hash is embedded in every output
// artifact.
struct Config {
  resfpn::ModelConfig model;
  train::TrainConfig train;
  RecConfig rec;
  ProtocolConfig protocol;
  std::uint64_t seed = 0;
};

Config default_config();

nlohmann::json config_to_json(const Config& cfg);
// Accepts partial documents: absent keys keep their defaults, unknown keys
// are rejected.
Config config_from_json(const nlohmann::json& j);

Config load_config(const std::string& path);

// Resolution order: explicit path, then $FVKIT_CONFIG, then defaults.
Config resolve_config(const std::string& cli_path);

// FNV-1a 64 over the canonical JSON dump, as 16 hex digits.
std::string config_hash(const Config& cfg);

rec::ExtractOptions extract_options(const Config& cfg);
eval::SessionRoles session_roles(const Config& cfg);
eval::SplitSpec split_spec(const Config& cfg);

}  // namespace fv::app
