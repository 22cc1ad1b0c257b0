#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fv/common/image.hpp"

namespace fv::app {

struct SynthSpec {
  int height = 240;
  int width = 320;
  int veins_min = 4;
  int veins_max = 7;
  double width_min = 2.0;  // vein stroke width in pixels
  double width_max = 5.0;
  double contrast_min = 0.08;  // vein darkness against the finger
  double contrast_max = 0.20;
  double texture_amp = 0.05;  // surface texture amplitude
  double noise_sigma = 0.012;
  std::uint64_t seed = 0;
  double finger_fill = 0.62;   // fraction of the height the finger covers
  double session_rot_deg = 2.0;
  double session_shift_px = 4.0;
  double session_contrast_jitter = 0.2;
  double illum_amp = 0.06;  // per-session illumination gradient

  void validate() const;
};

nlohmann::json synth_spec_to_json(const SynthSpec& spec);
// Partial documents allowed; unknown keys rejected.
SynthSpec synth_spec_from_json(const nlohmann::json& j);
SynthSpec load_synth_spec(const std::string& path);

// One rendered presentation plus its vein annotation and the ground-truth
// session placement (rotation about the image centre, then translation).
struct SynthItem {
  Image image;
  Image mask;  // values 0/1
  std::string id;
  std::string client;
  int finger = 1;
  int session = 1;
  double rot_rad = 0.0;
  double shift_y = 0.0;
  double shift_x = 0.0;
};

// Renders every identity in every session. Identity geometry depends only
// on (seed, identity); session appearance only on (seed, identity, session),
// so any subset regenerates identically.
std::vector<SynthItem> synth_generate(const SynthSpec& spec, int n_identities,
                                      int n_sessions);

// Writes <id>.png, <id>.mask.png and manifest.csv into out_dir.
void synth_write(const std::vector<SynthItem>& items,
                 const std::string& out_dir);

}  // namespace fv::app
