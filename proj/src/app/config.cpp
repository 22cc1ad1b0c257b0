#include "fv/app/config.hpp"

#include <cstdlib>
#include <fstream>

#include "fv/common/error.hpp"
#include "json_merge.hpp"

namespace fv::app {
namespace {

nlohmann::json rec_to_json(const RecConfig& r) {
  return {{"mc_sigma", r.mc_sigma},
          {"shift_h", r.shift_h},
          {"shift_w", r.shift_w},
          {"pre",
           {{"out_h", r.pre.out_h},
            {"out_w", r.pre.out_w},
            {"smooth_sigma", r.pre.smooth_sigma},
            {"min_region_frac", r.pre.min_region_frac}}}};
}

nlohmann::json train_to_json(const train::TrainConfig& t) {
  return {{"lr", t.lr},           {"epochs", t.epochs},
          {"batch_size", t.batch_size}, {"alpha", t.alpha},
          {"seed", t.seed},       {"target_h", t.target_h},
          {"target_w", t.target_w},     {"val_fraction", t.val_fraction}};
}

nlohmann::json protocol_to_json(const ProtocolConfig& p) {
  nlohmann::json j{{"fractions", p.fractions},
                   {"train_sessions", p.train_sessions},
                   {"enroll_sessions", p.enroll_sessions},
                   {"probe_sessions", p.probe_sessions},
                   {"client_ranges", nullptr}};
  if (p.client_ranges.has_value()) j["client_ranges"] = *p.client_ranges;
  return j;
}

template <typename T>
T get(const nlohmann::json& j, const char* key, const std::string& where) {
  return json_get<T>(j, key, where);
}

}  // namespace

Config default_config() { return Config{}; }

nlohmann::json config_to_json(const Config& cfg) {
  return {{"model", cfg.model},
          {"train", train_to_json(cfg.train)},
          {"rec", rec_to_json(cfg.rec)},
          {"protocol", protocol_to_json(cfg.protocol)},
          {"seed", cfg.seed}};
}

Config config_from_json(const nlohmann::json& j) {
  nlohmann::json doc = config_to_json(Config{});
  merge_strict(doc, j, "");

  Config cfg;
  try {
    doc.at("model").get_to(cfg.model);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("config: bad model section: ") + e.what());
  }

  const nlohmann::json& t = doc.at("train");
  cfg.train.lr = get<float>(t, "lr", "train.");
  cfg.train.epochs = get<int>(t, "epochs", "train.");
  cfg.train.batch_size = get<int>(t, "batch_size", "train.");
  cfg.train.alpha = get<float>(t, "alpha", "train.");
  cfg.train.seed = get<std::uint64_t>(t, "seed", "train.");
  cfg.train.target_h = get<int>(t, "target_h", "train.");
  cfg.train.target_w = get<int>(t, "target_w", "train.");
  cfg.train.val_fraction = get<float>(t, "val_fraction", "train.");
  cfg.train.validate();

  const nlohmann::json& r = doc.at("rec");
  cfg.rec.mc_sigma = get<double>(r, "mc_sigma", "rec.");
  cfg.rec.shift_h = get<int>(r, "shift_h", "rec.");
  cfg.rec.shift_w = get<int>(r, "shift_w", "rec.");
  const nlohmann::json& pre = r.at("pre");
  cfg.rec.pre.out_h = get<int>(pre, "out_h", "rec.pre.");
  cfg.rec.pre.out_w = get<int>(pre, "out_w", "rec.pre.");
  cfg.rec.pre.smooth_sigma = get<double>(pre, "smooth_sigma", "rec.pre.");
  cfg.rec.pre.min_region_frac =
      get<double>(pre, "min_region_frac", "rec.pre.");
  if (!(cfg.rec.mc_sigma > 0.0))
    throw DataError("config: rec.mc_sigma must be positive");
  if (cfg.rec.shift_h < 0 || cfg.rec.shift_w < 0)
    throw DataError("config: rec shift bounds must be non-negative");

  const nlohmann::json& p = doc.at("protocol");
  cfg.protocol.fractions = get<std::array<double, 3>>(p, "fractions", "protocol.");
  cfg.protocol.train_sessions =
      get<std::vector<int>>(p, "train_sessions", "protocol.");
  cfg.protocol.enroll_sessions =
      get<std::vector<int>>(p, "enroll_sessions", "protocol.");
  cfg.protocol.probe_sessions =
      get<std::vector<int>>(p, "probe_sessions", "protocol.");
  if (p.at("client_ranges").is_null())
    cfg.protocol.client_ranges.reset();
  else
    cfg.protocol.client_ranges =
        get<std::array<std::array<int, 2>, 3>>(p, "client_ranges", "protocol.");

  cfg.seed = get<std::uint64_t>(doc, "seed", "");
  return cfg;
}

Config load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("load_config: cannot open " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("load_config: " + path + ": " + e.what(), 0);
  }
  return config_from_json(j);
}

Config resolve_config(const std::string& cli_path) {
  if (!cli_path.empty()) return load_config(cli_path);
  if (const char* env = std::getenv(kConfigEnvVar); env != nullptr && *env != '\0')
    return load_config(env);
  return default_config();
}

std::string config_hash(const Config& cfg) {
  const std::string dump = config_to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const char c : dump) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = hex[h & 0xf];
    h >>= 4;
  }
  return out;
}

rec::ExtractOptions extract_options(const Config& cfg) {
  rec::ExtractOptions opt;
  opt.pre = cfg.rec.pre;
  opt.mc.sigma = cfg.rec.mc_sigma;
  return opt;
}

eval::SessionRoles session_roles(const Config& cfg) {
  return eval::SessionRoles{cfg.protocol.train_sessions,
                            cfg.protocol.enroll_sessions,
                            cfg.protocol.probe_sessions};
}

eval::SplitSpec split_spec(const Config& cfg) {
  eval::SplitSpec spec;
  spec.fractions = cfg.protocol.fractions;
  spec.client_ranges = cfg.protocol.client_ranges;
  return spec;
}

}  // namespace fv::app
