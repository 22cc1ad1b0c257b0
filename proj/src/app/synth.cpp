#include "fv/app/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "fv/app/image_io.hpp"
#include "fv/common/error.hpp"
#include "fv/common/rng.hpp"
#include "json_merge.hpp"

namespace fv::app {

namespace {

constexpr double kBackgroundLevel = 0.06;
constexpr double kFingerLevel = 0.55;
constexpr double kPi = 3.14159265358979323846;

struct Vein {
  std::array<double, 5> ys{};  // control heights, evenly spaced in x
  double width = 0.0;
  double depth = 0.0;
  double mod_freq = 0.0;
  double mod_phase = 0.0;
};

struct IdentityScene {
  std::vector<double> cap;      // soft finger mask
  std::vector<double> texture;  // zero-mean surface texture
  std::vector<double> veins;    // peak darkness per pixel
  std::vector<std::uint8_t> mask;
};

double smoothstep01(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

// Uniform Catmull-Rom over four control values.
double catmull_rom(double p0, double p1, double p2, double p3, double t) {
  return 0.5 * ((2.0 * p1) + (-p0 + p2) * t +
                (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t * t +
                (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * t * t * t);
}

IdentityScene build_identity(const SynthSpec& spec, int identity_index) {
  const std::int64_t h = spec.height, w = spec.width;
  const double cy = 0.5 * static_cast<double>(h - 1);
  const double finger_r = 0.5 * spec.finger_fill * static_cast<double>(h);

  Rng rng(mix_seed(spec.seed, 0x1d57,
                   static_cast<std::uint64_t>(identity_index)));

  const int n_veins = static_cast<int>(
      rng.uniform_int(spec.veins_min, spec.veins_max));
  std::vector<Vein> veins(static_cast<std::size_t>(n_veins));
  const double band =
      std::max(2.0, finger_r - 0.5 * spec.width_max - 3.0);
  for (Vein& v : veins) {
    for (double& y : v.ys) y = cy + rng.uniform(-band, band);
    v.width = rng.uniform(spec.width_min, spec.width_max);
    v.depth = rng.uniform(spec.contrast_min, spec.contrast_max);
    v.mod_freq = rng.uniform(0.5, 1.5);
    v.mod_phase = rng.uniform(0.0, 1.0);
  }

  // Coarse value noise for the finger surface.
  const std::int64_t cell = 12;
  const std::int64_t gh = h / cell + 2, gw = w / cell + 2;
  std::vector<double> grid(static_cast<std::size_t>(gh * gw));
  for (double& g : grid) g = rng.uniform(-1.0, 1.0);

  IdentityScene scene;
  const std::size_t n = static_cast<std::size_t>(h * w);
  scene.cap.resize(n);
  scene.texture.resize(n);
  scene.veins.assign(n, 0.0);
  scene.mask.assign(n, 0);

  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t x = 0; x < w; ++x) {
      const double d = std::abs(static_cast<double>(y) - cy);
      scene.cap[static_cast<std::size_t>(y * w + x)] =
          smoothstep01((finger_r - d) / 3.0);
      const double gx = static_cast<double>(x) / static_cast<double>(cell);
      const double gy = static_cast<double>(y) / static_cast<double>(cell);
      const auto ix = static_cast<std::int64_t>(std::floor(gx));
      const auto iy = static_cast<std::int64_t>(std::floor(gy));
      const double fx = gx - static_cast<double>(ix);
      const double fy = gy - static_cast<double>(iy);
      const double g00 = grid[static_cast<std::size_t>(iy * gw + ix)];
      const double g01 = grid[static_cast<std::size_t>(iy * gw + ix + 1)];
      const double g10 = grid[static_cast<std::size_t>((iy + 1) * gw + ix)];
      const double g11 = grid[static_cast<std::size_t>((iy + 1) * gw + ix + 1)];
      scene.texture[static_cast<std::size_t>(y * w + x)] =
          (1.0 - fy) * ((1.0 - fx) * g00 + fx * g01) +
          fy * ((1.0 - fx) * g10 + fx * g11);
    }

  // Trace each vein spline and stamp Gaussian darkness plus the mask disk.
  for (const Vein& v : veins) {
    const double x_left = -0.1 * static_cast<double>(w);
    const double span = 1.2 * static_cast<double>(w) / 4.0;
    const double sigma = 0.5 * v.width;
    const auto stamp_r = static_cast<std::int64_t>(std::ceil(3.0 * sigma));
    const double mask_r = 0.5 * v.width;
    for (int seg = 0; seg < 4; ++seg) {
      const double y0 = v.ys[static_cast<std::size_t>(std::max(0, seg - 1))];
      const double y1 = v.ys[static_cast<std::size_t>(seg)];
      const double y2 = v.ys[static_cast<std::size_t>(seg + 1)];
      const double y3 = v.ys[static_cast<std::size_t>(std::min(4, seg + 2))];
      const int steps = static_cast<int>(std::ceil(span / 0.4));
      for (int i = 0; i <= steps; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(steps);
        const double px = x_left + span * (static_cast<double>(seg) + t);
        const double py = catmull_rom(y0, y1, y2, y3, t);
        const double mod =
            1.0 + 0.25 * std::sin(2.0 * kPi * (px / static_cast<double>(w) *
                                                   v.mod_freq +
                                               v.mod_phase));
        const double depth = v.depth * std::max(0.3, mod);
        const auto by = static_cast<std::int64_t>(std::llround(py));
        const auto bx = static_cast<std::int64_t>(std::llround(px));
        for (std::int64_t yy = std::max<std::int64_t>(0, by - stamp_r);
             yy <= std::min<std::int64_t>(h - 1, by + stamp_r); ++yy)
          for (std::int64_t xx = std::max<std::int64_t>(0, bx - stamp_r);
               xx <= std::min<std::int64_t>(w - 1, bx + stamp_r); ++xx) {
            const double dy = static_cast<double>(yy) - py;
            const double dx = static_cast<double>(xx) - px;
            const double r2 = dy * dy + dx * dx;
            const double g = depth * std::exp(-r2 / (2.0 * sigma * sigma));
            double& cur = scene.veins[static_cast<std::size_t>(yy * w + xx)];
            cur = std::max(cur, g);
            if (r2 <= mask_r * mask_r)
              scene.mask[static_cast<std::size_t>(yy * w + xx)] = 1;
          }
      }
    }
  }
  return scene;
}

}  // namespace

void SynthSpec::validate() const {
  if (height < 16 || width < 16)
    throw ParamError("synth spec: image size must be at least 16x16");
  if (veins_min < 1 || veins_max < veins_min)
    throw ParamError("synth spec: vein count range invalid");
  if (width_min < 1.0 || width_max < width_min)
    throw ParamError("synth spec: vein widths must be >= 1 px");
  if (!(contrast_min > 0.0) || contrast_max < contrast_min || contrast_max > 1.0)
    throw ParamError("synth spec: contrast range invalid");
  if (texture_amp < 0.0 || noise_sigma < 0.0)
    throw ParamError("synth spec: texture and noise amplitudes must be >= 0");
  if (!(finger_fill > 0.1) || !(finger_fill < 0.95))
    throw ParamError("synth spec: finger_fill must lie in (0.1, 0.95)");
  if (session_rot_deg < 0.0 || session_shift_px < 0.0 ||
      session_contrast_jitter < 0.0 || session_contrast_jitter > 0.9 ||
      illum_amp < 0.0)
    throw ParamError("synth spec: session jitter parameters invalid");
}

nlohmann::json synth_spec_to_json(const SynthSpec& s) {
  return {{"height", s.height},
          {"width", s.width},
          {"veins_min", s.veins_min},
          {"veins_max", s.veins_max},
          {"width_min", s.width_min},
          {"width_max", s.width_max},
          {"contrast_min", s.contrast_min},
          {"contrast_max", s.contrast_max},
          {"texture_amp", s.texture_amp},
          {"noise_sigma", s.noise_sigma},
          {"seed", s.seed},
          {"finger_fill", s.finger_fill},
          {"session_rot_deg", s.session_rot_deg},
          {"session_shift_px", s.session_shift_px},
          {"session_contrast_jitter", s.session_contrast_jitter},
          {"illum_amp", s.illum_amp}};
}

SynthSpec synth_spec_from_json(const nlohmann::json& j) {
  nlohmann::json doc = synth_spec_to_json(SynthSpec{});
  merge_strict(doc, j, "synth.");
  SynthSpec s;
  s.height = json_get<int>(doc, "height", "synth.");
  s.width = json_get<int>(doc, "width", "synth.");
  s.veins_min = json_get<int>(doc, "veins_min", "synth.");
  s.veins_max = json_get<int>(doc, "veins_max", "synth.");
  s.width_min = json_get<double>(doc, "width_min", "synth.");
  s.width_max = json_get<double>(doc, "width_max", "synth.");
  s.contrast_min = json_get<double>(doc, "contrast_min", "synth.");
  s.contrast_max = json_get<double>(doc, "contrast_max", "synth.");
  s.texture_amp = json_get<double>(doc, "texture_amp", "synth.");
  s.noise_sigma = json_get<double>(doc, "noise_sigma", "synth.");
  s.seed = json_get<std::uint64_t>(doc, "seed", "synth.");
  s.finger_fill = json_get<double>(doc, "finger_fill", "synth.");
  s.session_rot_deg = json_get<double>(doc, "session_rot_deg", "synth.");
  s.session_shift_px = json_get<double>(doc, "session_shift_px", "synth.");
  s.session_contrast_jitter =
      json_get<double>(doc, "session_contrast_jitter", "synth.");
  s.illum_amp = json_get<double>(doc, "illum_amp", "synth.");
  s.validate();
  return s;
}

SynthSpec load_synth_spec(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("load_synth_spec: cannot open " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("load_synth_spec: " + path + ": " + e.what(), 0);
  }
  return synth_spec_from_json(j);
}

std::vector<SynthItem> synth_generate(const SynthSpec& spec, int n_identities,
                                      int n_sessions) {
  spec.validate();
  if (n_identities < 1 || n_sessions < 1)
    throw ParamError("synth_generate: need at least one identity and session");

  const std::int64_t h = spec.height, w = spec.width;
  const double cy = 0.5 * static_cast<double>(h - 1);
  const double cx = 0.5 * static_cast<double>(w - 1);
  std::vector<SynthItem> items;
  items.reserve(static_cast<std::size_t>(n_identities) *
                static_cast<std::size_t>(n_sessions));

  for (int id = 0; id < n_identities; ++id) {
    const IdentityScene scene = build_identity(spec, id);
    char client[16];
    std::snprintf(client, sizeof(client), "c%03d", id + 1);

    for (int session = 1; session <= n_sessions; ++session) {
      Rng rng(mix_seed(spec.seed, static_cast<std::uint64_t>(id),
                       static_cast<std::uint64_t>(session)));
      const double theta =
          rng.uniform(-spec.session_rot_deg, spec.session_rot_deg) * kPi / 180.0;
      const double ty = rng.uniform(-spec.session_shift_px, spec.session_shift_px);
      const double tx = rng.uniform(-spec.session_shift_px, spec.session_shift_px);
      const double cscale = 1.0 + rng.uniform(-spec.session_contrast_jitter,
                                              spec.session_contrast_jitter);
      const double ax = rng.uniform(-1.0, 1.0);
      const double ay = rng.uniform(-1.0, 1.0);

      SynthItem item;
      item.image = Image(h, w);
      item.mask = Image(h, w);
      item.client = client;
      item.finger = 1;
      item.session = session;
      item.id = std::string(client) + "_f1_s" + std::to_string(session);
      item.rot_rad = theta;
      item.shift_y = ty;
      item.shift_x = tx;

      const double c = std::cos(theta), s = std::sin(theta);
      for (std::int64_t y = 0; y < h; ++y)
        for (std::int64_t x = 0; x < w; ++x) {
          // Inverse of rotate-about-centre followed by translation.
          const double dy = static_cast<double>(y) - cy - ty;
          const double dx = static_cast<double>(x) - cx - tx;
          const double sx = cx + c * dx + s * dy;
          const double sy = cy - s * dx + c * dy;

          double value = kBackgroundLevel;
          const auto ix = static_cast<std::int64_t>(std::floor(sx));
          const auto iy = static_cast<std::int64_t>(std::floor(sy));
          const double fx = sx - static_cast<double>(ix);
          const double fy = sy - static_cast<double>(iy);
          auto compose = [&](std::int64_t yy, std::int64_t xx) -> double {
            if (yy < 0 || yy >= h || xx < 0 || xx >= w) return kBackgroundLevel;
            const auto i = static_cast<std::size_t>(yy * w + xx);
            return kBackgroundLevel +
                   scene.cap[i] * (kFingerLevel - kBackgroundLevel +
                                   scene.texture[i] * spec.texture_amp -
                                   cscale * scene.veins[i]);
          };
          value = (1.0 - fy) * ((1.0 - fx) * compose(iy, ix) +
                                fx * compose(iy, ix + 1)) +
                  fy * ((1.0 - fx) * compose(iy + 1, ix) +
                        fx * compose(iy + 1, ix + 1));

          const double u =
              w > 1 ? 2.0 * (static_cast<double>(x) / static_cast<double>(w - 1) - 0.5)
                    : 0.0;
          const double v =
              h > 1 ? 2.0 * (static_cast<double>(y) / static_cast<double>(h - 1) - 0.5)
                    : 0.0;
          value *= 1.0 + spec.illum_amp * (ax * u + ay * v);

          item.image.pix[static_cast<std::size_t>(y * w + x)] =
              static_cast<float>(std::clamp(value, 0.0, 1.0));

          const auto ny = static_cast<std::int64_t>(std::llround(sy));
          const auto nx = static_cast<std::int64_t>(std::llround(sx));
          item.mask.pix[static_cast<std::size_t>(y * w + x)] =
              (ny >= 0 && ny < h && nx >= 0 && nx < w &&
               scene.mask[static_cast<std::size_t>(ny * w + nx)] != 0)
                  ? 1.0f
                  : 0.0f;
        }

      if (spec.noise_sigma > 0.0)
        for (float& p : item.image.pix)
          p = static_cast<float>(std::clamp(
              static_cast<double>(p) + spec.noise_sigma * rng.normal(), 0.0,
              1.0));

      items.push_back(std::move(item));
    }
  }
  return items;
}

void synth_write(const std::vector<SynthItem>& items,
                 const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw DataError("synth_write: cannot create " + out_dir);

  std::string manifest = "# file,client,finger,session\n";
  for (const SynthItem& item : items) {
    const std::string img_path = out_dir + "/" + item.id + ".png";
    const std::string mask_path = out_dir + "/" + item.id + ".mask.png";
    save_png(img_path, item.image);
    save_png(mask_path, item.mask);
    manifest += item.id + ".png," + item.client + "," +
                std::to_string(item.finger) + "," +
                std::to_string(item.session) + "\n";
  }
  const std::string mpath = out_dir + "/manifest.csv";
  const std::string tmp = mpath + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("synth_write: cannot open " + tmp);
    f << manifest;
    if (!f) throw DataError("synth_write: write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), mpath.c_str()) != 0)
    throw DataError("synth_write: cannot rename " + tmp);
}

}  // namespace fv::app
