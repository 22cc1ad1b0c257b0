#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fv/app/synth.hpp"
#include "fv/common/rng.hpp"
#include "fv/rec/enroll.hpp"
#include "fv/rec/max_curvature.hpp"
#include "fv/rec/miura.hpp"
#include "fv/rec/preprocess.hpp"
#include "fv/rec/template_io.hpp"

using namespace fv;
using namespace fv::rec;

namespace {

constexpr double kDeg = 3.14159265358979323846 / 180.0;

// Analytic dark-line render. The stroke fades to the background well before
// the left and right borders, and a (dy, dx)-shifted render evaluates the
// same expressions at shifted integer coordinates, so it is bit-identical
// to translating the base image.
double line_fade(double x) {
  if (x < 12.0 || x > 118.0) return 0.0;
  if (x < 26.0) return (x - 12.0) / 14.0;
  if (x > 104.0) return (118.0 - x) / 14.0;
  return 1.0;
}

double line_center(double x) { return 46.0 + 0.05 * (x - 65.0); }

Image vein_image(std::int64_t h, std::int64_t w, double contrast,
                 double line_sigma, int dy = 0, int dx = 0, bool faded = true) {
  Image img(h, w);
  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t x = 0; x < w; ++x) {
      const double yy = static_cast<double>(y - dy);
      const double xx = static_cast<double>(x - dx);
      const double d = yy - line_center(xx);
      const double amp = faded ? line_fade(xx) : 1.0;
      img.at(y, x) = static_cast<float>(
          0.6 - contrast * amp *
                    std::exp(-d * d / (2.0 * line_sigma * line_sigma)));
    }
  return img;
}

Image band_image(std::int64_t h, std::int64_t w, double mid_y, double slope,
                 double half_width, float bright, float dark) {
  Image img(h, w);
  const double cx = 0.5 * static_cast<double>(w - 1);
  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t x = 0; x < w; ++x) {
      const double center = mid_y + slope * (static_cast<double>(x) - cx);
      img.at(y, x) =
          std::abs(static_cast<double>(y) - center) <= half_width ? bright : dark;
    }
  return img;
}

VeinTemplate random_map(std::int64_t h, std::int64_t w, double density,
                        std::uint64_t seed) {
  VeinTemplate t = make_template(h, w);
  Rng rng(seed);
  for (std::uint8_t& v : t.map) v = rng.uniform() < density ? 1 : 0;
  return t;
}

// Direct O(shifts * pixels) re-computation of the sliding overlap score,
// with the same scan order and strict-improvement tie rule as the library.
MiuraResult miura_oracle(const VeinTemplate& probe, const VeinTemplate& model,
                         int sh, int sw) {
  const std::int64_t h = model.h, w = model.w;
  MiuraResult res;
  double best = -1.0;
  for (int dy = -sh; dy <= sh; ++dy)
    for (int dx = -sw; dx <= sw; ++dx) {
      const std::int64_t y0 = std::max<std::int64_t>(0, -dy);
      const std::int64_t y1 = std::min<std::int64_t>(h, h - dy);
      const std::int64_t x0 = std::max<std::int64_t>(0, -dx);
      const std::int64_t x1 = std::min<std::int64_t>(w, w - dx);
      std::int64_t inter = 0, cm = 0, cp = 0;
      for (std::int64_t y = y0; y < y1; ++y)
        for (std::int64_t x = x0; x < x1; ++x) {
          const int m = model.at(y, x);
          const int p = probe.at(y + dy, x + dx);
          inter += m & p;
          cm += m;
          cp += p;
        }
      const double score =
          cm + cp > 0
              ? static_cast<double>(inter) / static_cast<double>(cm + cp)
              : 0.0;
      if (score > best) {
        best = score;
        res.score = score;
        res.dy = dy;
        res.dx = dx;
      }
    }
  return res;
}

}  // namespace

TEST_CASE("a level finger reports zero rotation and a tight crop") {
  const Image img = band_image(100, 140, 49.5, 0.0, 20.0, 0.62f, 0.06f);
  PreprocessOptions opt;
  opt.out_h = 60;
  opt.out_w = 80;
  PreprocessInfo info;
  const Image out = preprocess_finger(img, opt, &info);

  CHECK(out.h == 60);
  CHECK(out.w == 80);
  CHECK(std::abs(info.angle_rad) < 0.2 * kDeg);
  // Bright rows are 30..69; each crop edge may move by the smoothing blur.
  CHECK(info.box_y0 >= 28);
  CHECK(info.box_y0 <= 32);
  CHECK(info.box_h >= 36);
  CHECK(info.box_h <= 44);
  CHECK(info.box_x0 <= 1);
  CHECK(info.box_w >= 138);
  CHECK(info.region_frac == doctest::Approx(0.41).epsilon(0.12));
}

TEST_CASE("a tilted finger is rotated level") {
  const double angle = 10.0 * kDeg;
  const Image tilted = band_image(160, 200, 79.5, std::tan(angle), 30.0, 0.62f, 0.06f);
  PreprocessOptions opt;
  opt.out_h = 60;
  opt.out_w = 80;
  PreprocessInfo info;
  const Image out = preprocess_finger(tilted, opt, &info);
  CHECK(info.angle_rad == doctest::Approx(angle).epsilon(0.1));

  // The flattened output should resemble the never-tilted rendering except
  // for the wedges the rotation clips at the frame corners.
  const Image level = band_image(160, 200, 79.5, 0.0, 30.0, 0.62f, 0.06f);
  const Image ref = preprocess_finger(level, opt);
  double diff = 0.0;
  for (std::size_t i = 0; i < out.pix.size(); ++i)
    diff += std::abs(out.pix[i] - ref.pix[i]);
  diff /= static_cast<double>(out.pix.size());
  CHECK(diff < 0.10);
}

TEST_CASE("normalisation is nearly a fixed point") {
  const Image img = band_image(100, 140, 49.5, 0.0, 20.0, 0.62f, 0.06f);
  PreprocessOptions opt;
  opt.out_h = 60;
  opt.out_w = 80;
  const Image once = preprocess_finger(img, opt);

  PreprocessInfo info;
  const Image twice = preprocess_finger(once, opt, &info);
  CHECK(std::abs(info.angle_rad) < 0.6 * kDeg);
  CHECK(info.box_h >= 56);
  CHECK(info.box_w >= 76);

  double diff = 0.0;
  for (std::size_t i = 0; i < once.pix.size(); ++i)
    diff += std::abs(once.pix[i] - twice.pix[i]);
  diff /= static_cast<double>(once.pix.size());
  CHECK(diff < 0.05);
}

TEST_CASE("undersized bright regions are rejected") {
  Image img(100, 140, 0.f);
  for (std::int64_t y = 36; y < 64; ++y)
    for (std::int64_t x = 52; x < 88; ++x) img.at(y, x) = 1.f;
  CHECK_THROWS_AS(preprocess_finger(img), SegmentationError);
}

TEST_CASE("preprocess validates its options") {
  const Image img = band_image(100, 140, 49.5, 0.0, 20.0, 0.62f, 0.06f);
  PreprocessOptions opt;
  opt.out_h = 0;
  CHECK_THROWS_AS(preprocess_finger(img, opt), ParamError);
  opt = {};
  opt.smooth_sigma = 0.0;
  CHECK_THROWS_AS(preprocess_finger(img, opt), ParamError);
  opt = {};
  opt.min_region_frac = 1.5;
  CHECK_THROWS_AS(preprocess_finger(img, opt), ParamError);
}

TEST_CASE("curvature extraction traces a planted dark line") {
  // Edge-to-edge stroke: a faded one ends in intensity saddles whose
  // concavity is detected legitimately but off the centre line.
  const Image img = vein_image(100, 130, 0.2, 2.0, 0, 0, false);
  const VeinTemplate tpl = mc_extract(img);
  REQUIRE(tpl.count() > 50);

  std::int64_t near = 0, total = 0;
  for (std::int64_t y = 0; y < tpl.h; ++y)
    for (std::int64_t x = 0; x < tpl.w; ++x)
      if (tpl.at(y, x)) {
        ++total;
        const double d = std::abs(static_cast<double>(y) -
                                  line_center(static_cast<double>(x)));
        if (d <= 1.0 + 1e-9) ++near;
      }
  CHECK(static_cast<double>(near) >= 0.9 * static_cast<double>(total));

  // The median binarisation keeps the top half of linked responses, so the
  // trace has gaps; still, most interior columns should carry it.
  std::int64_t covered = 0;
  for (std::int64_t x = 10; x <= 120; ++x) {
    bool hit = false;
    for (std::int64_t y = 0; y < tpl.h; ++y)
      if (tpl.at(y, x) &&
          std::abs(static_cast<double>(y) - line_center(static_cast<double>(x))) <=
              1.5)
        hit = true;
    covered += hit ? 1 : 0;
  }
  CHECK(covered >= 75);
}

TEST_CASE("flat images yield empty templates") {
  const Image img(64, 80, 0.5f);
  const VeinTemplate tpl = mc_extract(img);
  CHECK(tpl.count() == 0);
  CHECK(tpl.h == 64);
  CHECK(tpl.w == 80);
}

TEST_CASE("bright ridges are not mistaken for veins") {
  // Same geometry as the dark line but with the contrast inverted; the
  // concavity test is signed, so the centre line must stay clear.
  Image img(100, 130);
  for (std::int64_t y = 0; y < 100; ++y)
    for (std::int64_t x = 0; x < 130; ++x) {
      const double d = static_cast<double>(y) - line_center(static_cast<double>(x));
      img.at(y, x) =
          static_cast<float>(0.15 + 0.3 * std::exp(-d * d / (2.0 * 2.5 * 2.5)));
    }
  const VeinTemplate tpl = mc_extract(img);
  for (std::int64_t y = 0; y < tpl.h; ++y)
    for (std::int64_t x = 0; x < tpl.w; ++x)
      if (tpl.at(y, x))
        CHECK(std::abs(static_cast<double>(y) -
                       line_center(static_cast<double>(x))) > 2.0);
}

TEST_CASE("vein maps translate with their input") {
  const Image base = vein_image(100, 130, 0.2, 2.0);
  const Image moved = vein_image(100, 130, 0.2, 2.0, 3, 4);
  const VeinTemplate t1 = mc_extract(base);
  const VeinTemplate t2 = mc_extract(moved);
  REQUIRE(t1.count() > 50);
  CHECK(t1.count() == t2.count());
  for (std::int64_t y = 3; y < 100; ++y)
    for (std::int64_t x = 4; x < 130; ++x)
      CHECK(t2.at(y, x) == t1.at(y - 3, x - 4));
}

TEST_CASE("mc_extract rejects a non-positive sigma") {
  const Image img(16, 16, 0.5f);
  CHECK_THROWS_AS(mc_extract(img, McOptions{0.0}), ParamError);
}

TEST_CASE("a template matched with itself peaks at the centre") {
  const VeinTemplate tpl = mc_extract(vein_image(100, 130, 0.2, 2.0));
  const MiuraResult r = miura_match(tpl, tpl, 10, 10);
  CHECK(r.score == 0.5);
  CHECK(r.dy == 0);
  CHECK(r.dx == 0);
  CHECK_FALSE(r.undefined);
}

TEST_CASE("a planted translation is recovered at the matching offset") {
  const VeinTemplate model = mc_extract(vein_image(100, 130, 0.2, 2.0));
  const VeinTemplate probe = mc_extract(vein_image(100, 130, 0.2, 2.0, 3, 4));

  const MiuraResult hit = miura_match(probe, model, 6, 6);
  CHECK(hit.score == 0.5);
  CHECK(hit.dy == 3);
  CHECK(hit.dx == 4);

  // Too-small bounds cannot reach the alignment.
  const MiuraResult miss = miura_match(probe, model, 2, 2);
  CHECK(miss.score < 0.5);
}

TEST_CASE("matcher agrees with a direct reference") {
  Rng rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const std::int64_t h = rng.uniform_int(9, 16);
    const std::int64_t w = rng.uniform_int(9, 20);
    const double density = trial % 2 == 0 ? 0.2 : 0.4;
    const VeinTemplate probe = random_map(h, w, density, rng.bits());
    const VeinTemplate model = random_map(h, w, density, rng.bits());

    const MiuraResult got = miura_match(probe, model, 2, 3);
    const MiuraResult want = miura_oracle(probe, model, 2, 3);
    CHECK(got.score == want.score);
    CHECK(got.dy == want.dy);
    CHECK(got.dx == want.dx);
    CHECK(got.score >= 0.0);
    CHECK(got.score <= 0.5);
  }
}

TEST_CASE("the score is symmetric in its arguments") {
  Rng rng(78);
  for (int trial = 0; trial < 10; ++trial) {
    const VeinTemplate a = random_map(14, 18, 0.3, rng.bits());
    const VeinTemplate b = random_map(14, 18, 0.3, rng.bits());
    CHECK(miura_match(a, b, 3, 3).score == miura_match(b, a, 3, 3).score);
  }
}

TEST_CASE("degenerate matches are flagged or rejected") {
  const VeinTemplate empty_a = make_template(10, 12);
  const VeinTemplate empty_b = make_template(10, 12);
  const MiuraResult und = miura_match(empty_a, empty_b, 2, 2);
  CHECK(und.undefined);
  CHECK(und.score == 0.0);

  VeinTemplate one = make_template(10, 12);
  one.at(5, 6) = 1;
  const MiuraResult zero = miura_match(empty_a, one, 2, 2);
  CHECK_FALSE(zero.undefined);
  CHECK(zero.score == 0.0);

  const VeinTemplate other = make_template(10, 13);
  CHECK_THROWS_AS(miura_match(one, other, 2, 2), GeometryError);
  CHECK_THROWS_AS(miura_match(one, empty_a, -1, 2), ParamError);
  CHECK_THROWS_AS(miura_match(one, empty_a, 2, 7), ParamError);
  CHECK_NOTHROW(miura_match(one, empty_a, 5, 6));
  CHECK_THROWS_AS(make_template(0, 5), ParamError);
}

TEST_CASE("disjoint templates score zero") {
  VeinTemplate left = make_template(12, 20);
  VeinTemplate right = make_template(12, 20);
  for (std::int64_t y = 2; y < 10; ++y) {
    left.at(y, 3) = 1;
    right.at(y, 16) = 1;
  }
  CHECK(miura_match(left, right, 2, 2).score == 0.0);
}

TEST_CASE("template files survive a round trip") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "fv_tpl_test";
  fs::create_directories(dir);
  const std::string path = (dir / "probe.tpl").string();

  const VeinTemplate tpl = random_map(23, 13, 0.3, 991);
  save_template(path, tpl);
  const VeinTemplate back = load_template(path);
  CHECK(back.h == tpl.h);
  CHECK(back.w == tpl.w);
  CHECK(back.map == tpl.map);
  CHECK(back.source_id.empty());

  const std::string path2 = (dir / "copy.tpl").string();
  save_template(path2, back);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::stringstream b1, b2;
  b1 << f1.rdbuf();
  b2 << f2.rdbuf();
  CHECK(b1.str() == b2.str());
  fs::remove_all(dir);
}

TEST_CASE("damaged template files are rejected") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "fv_tpl_neg";
  fs::create_directories(dir);
  const std::string path = (dir / "base.tpl").string();
  save_template(path, random_map(9, 17, 0.4, 992));

  std::string bytes;
  {
    std::ifstream f(path, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    bytes = ss.str();
  }
  auto variant = [&](const std::string& name, const std::string& content) {
    const std::string p = (dir / name).string();
    std::ofstream f(p, std::ios::binary);
    f << content;
    return p;
  };

  std::string magic = bytes;
  magic[0] = 'Q';
  CHECK_THROWS_AS(load_template(variant("magic.tpl", magic)), FormatError);

  std::string version = bytes;
  version[8] = 2;
  CHECK_THROWS_AS(load_template(variant("ver.tpl", version)), VersionError);

  CHECK_THROWS_AS(load_template(variant("trunc.tpl", bytes.substr(0, bytes.size() - 3))),
                  FormatError);
  CHECK_THROWS_AS(load_template(variant("trail.tpl", bytes + "x")), FormatError);

  std::string zero_h = bytes;
  for (int i = 9; i < 17; ++i) zero_h[static_cast<std::size_t>(i)] = 0;
  CHECK_THROWS_AS(load_template(variant("dims.tpl", zero_h)), FormatError);

  CHECK_THROWS_AS(load_template((dir / "missing.tpl").string()), DataError);

  VeinTemplate bad = make_template(4, 4);
  bad.map[5] = 2;
  CHECK_THROWS_AS(save_template((dir / "bad.tpl").string(), bad), ParamError);
  VeinTemplate hollow;
  CHECK_THROWS_AS(save_template((dir / "hollow.tpl").string(), hollow), ParamError);
  fs::remove_all(dir);
}

TEST_CASE("enrolment builds per-identity models and records failures") {
  app::SynthSpec spec;
  spec.height = 120;
  spec.width = 160;
  spec.seed = 5;
  const std::vector<app::SynthItem> items = app::synth_generate(spec, 2, 2);
  REQUIRE(items.size() == 4);

  ExtractOptions opt;
  opt.pre.out_h = 96;
  opt.pre.out_w = 128;
  opt.mc.sigma = 2.5;

  std::vector<EnrollInput> inputs;
  for (const app::SynthItem& it : items)
    inputs.push_back({it.image, it.id, it.client});
  Image speck(120, 160, 0.f);
  for (std::int64_t y = 40; y < 70; ++y)
    for (std::int64_t x = 60; x < 100; ++x) speck.at(y, x) = 1.f;
  inputs.push_back({speck, "blank_s1", "zz"});

  std::vector<ExtractFailure> failures;
  const std::vector<EnrollmentModel> models = enroll(inputs, opt, nullptr, &failures);
  REQUIRE(models.size() == 2);
  CHECK(models[0].templates.size() == 2);
  CHECK(models[1].templates.size() == 2);
  REQUIRE(failures.size() == 1);
  CHECK(failures[0].id == "blank_s1");

  // A probe equal to an enrolled sample matches its own model perfectly
  // and beats the other identity.
  const VeinTemplate probe =
      extract_template(items[0].image, items[0].id, opt, nullptr);
  CHECK(probe.h == 96);
  CHECK(probe.w == 128);
  CHECK(probe.count() > 0);
  CHECK(probe.source_id == items[0].id);

  const MatchScore own = score_probe(probe, items[0].id, models[0], true, 8, 8);
  CHECK(own.value == 0.5);
  CHECK(own.probe_id == items[0].id);
  CHECK(own.model_id == models[0].model_id);
  CHECK(own.is_genuine);

  bool undefined = true;
  const MatchScore cross =
      score_probe(probe, items[0].id, models[1], false, 8, 8, &undefined);
  CHECK(cross.value < own.value);
  CHECK_FALSE(cross.is_genuine);
  CHECK_FALSE(undefined);

  CHECK_THROWS_AS(score_probe(probe, "p", EnrollmentModel{"e", {}}, false, 8, 8),
                  ParamError);

  EnrollmentModel hollow{"h", {make_template(96, 128)}};
  const VeinTemplate empty_probe = make_template(96, 128);
  bool und2 = false;
  const MatchScore s2 = score_probe(empty_probe, "p", hollow, false, 8, 8, &und2);
  CHECK(s2.value == 0.0);
  CHECK(und2);
}
