#include "fv/app/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include "fv/app/image_io.hpp"
#include "fv/app/scores_io.hpp"
#include "fv/app/synth.hpp"
#include "fv/common/error.hpp"
#include "fv/eval/metrics.hpp"
#include "fv/rec/template_io.hpp"
#include "fv/train/checkpoint.hpp"

namespace fv::app {

namespace fs = std::filesystem;

namespace {

void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot open " + tmp);
    f << content;
    if (!f) throw DataError("write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw DataError("cannot rename " + tmp + " to " + path);
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir);
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Presentation images in a directory, sorted by name; mask files excluded.
std::vector<fs::path> list_images(const std::string& dir) {
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir);
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    const std::string ext = entry.path().extension().string();
    if (ext != ".png" && ext != ".pgm") continue;
    if (ends_with(name, ".mask.png")) continue;
    out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<fs::path> list_templates(const std::string& dir) {
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir);
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".tpl")
      out.push_back(entry.path());
  std::sort(out.begin(), out.end());
  return out;
}

// "c001_f1_s4" -> "c001_f1"; ids without a session suffix pass through.
std::string identity_of(const std::string& id) {
  const std::size_t pos = id.rfind("_s");
  if (pos == std::string::npos || pos + 2 >= id.size()) return id;
  for (std::size_t i = pos + 2; i < id.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(id[i]))) return id;
  return id.substr(0, pos);
}

std::string format_double(double v, const char* fmt) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

nlohmann::json threshold_json(double t) {
  if (std::isfinite(t)) return t;
  return t > 0 ? "inf" : "-inf";
}

nlohmann::json report_section(const eval::MetricsReport& rep) {
  return {{"fmr", rep.fmr},
          {"fnmr", rep.fnmr},
          {"hter", rep.hter},
          {"fmr_pct", eval::render_percent(rep.fmr)},
          {"fnmr_pct", eval::render_percent(rep.fnmr)},
          {"hter_pct", eval::render_percent(rep.hter)},
          {"false_matches", rep.false_matches},
          {"impostor_total", rep.impostor_total},
          {"false_non_matches", rep.false_non_matches},
          {"genuine_total", rep.genuine_total}};
}

std::string roc_csv(const std::vector<eval::RocPoint>& pts) {
  std::string out = "fmr,tpr\n";
  for (const eval::RocPoint& p : pts)
    out += format_double(p.fmr, "%.9g") + "," + format_double(p.tpr, "%.9g") +
           "\n";
  return out;
}

std::string hist_csv(const eval::Histogram& h) {
  std::string out = "bin_lo,bin_hi,genuine,impostor\n";
  const auto bins = static_cast<std::int64_t>(h.genuine.size());
  const double width = bins > 0 ? (h.hi - h.lo) / static_cast<double>(bins) : 0.0;
  for (std::int64_t b = 0; b < bins; ++b) {
    const double lo = h.lo + static_cast<double>(b) * width;
    const double hi = b + 1 == bins ? h.hi : lo + width;
    out += format_double(lo, "%.9g") + "," + format_double(hi, "%.9g") + "," +
           std::to_string(h.genuine[static_cast<std::size_t>(b)]) + "," +
           std::to_string(h.impostor[static_cast<std::size_t>(b)]) + "\n";
  }
  return out;
}

std::string roc_svg(const std::vector<eval::RocPoint>& pts) {
  std::string svg =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 440 440\">\n"
      "<rect width=\"440\" height=\"440\" fill=\"white\"/>\n"
      "<line x1=\"40\" y1=\"420\" x2=\"420\" y2=\"420\" stroke=\"black\"/>\n"
      "<line x1=\"40\" y1=\"420\" x2=\"40\" y2=\"40\" stroke=\"black\"/>\n"
      "<line x1=\"40\" y1=\"420\" x2=\"420\" y2=\"40\" stroke=\"#cccccc\" "
      "stroke-dasharray=\"4 4\"/>\n"
      "<text x=\"210\" y=\"438\" font-size=\"12\" text-anchor=\"middle\">"
      "FMR</text>\n"
      "<text x=\"14\" y=\"230\" font-size=\"12\" text-anchor=\"middle\" "
      "transform=\"rotate(-90 14 230)\">1 - FNMR</text>\n"
      "<polyline fill=\"none\" stroke=\"#1f6fb2\" stroke-width=\"1.5\" "
      "points=\"";
  for (const eval::RocPoint& p : pts) {
    svg += format_double(40.0 + p.fmr * 380.0, "%.2f") + "," +
           format_double(420.0 - p.tpr * 380.0, "%.2f") + " ";
  }
  svg += "\"/>\n</svg>\n";
  return svg;
}

std::vector<eval::LabeledScore> to_labeled(const ScoresFile& file) {
  std::vector<eval::LabeledScore> out;
  out.reserve(file.rows.size());
  for (const rec::MatchScore& r : file.rows)
    out.push_back({r.value, r.is_genuine});
  return out;
}

}  // namespace

void run_synth(const std::string& spec_path, const std::string& out_dir,
               int n_identities, int n_sessions) {
  const SynthSpec spec = load_synth_spec(spec_path);
  const std::vector<SynthItem> items =
      synth_generate(spec, n_identities, n_sessions);
  synth_write(items, out_dir);
  std::printf("wrote %zu presentations for %d identities to %s\n",
              items.size(), n_identities, out_dir.c_str());
}

void run_protocol(const Config& cfg, const std::string& manifest_path,
                  const std::string& out_path) {
  const std::vector<eval::ManifestRow> rows = eval::parse_manifest(manifest_path);
  const eval::ProtocolSplit split =
      eval::build_nom_protocol(rows, split_spec(cfg), session_roles(cfg));

  auto files_of = [](const std::vector<eval::ManifestRow>& list) {
    std::vector<std::string> out;
    out.reserve(list.size());
    for (const eval::ManifestRow& r : list) out.push_back(r.file);
    return out;
  };

  nlohmann::json j{
      {"config_hash", config_hash(cfg)},
      {"sessions",
       {{"train", cfg.protocol.train_sessions},
        {"enroll", cfg.protocol.enroll_sessions},
        {"probe", cfg.protocol.probe_sessions}}},
      {"train",
       {{"identities", split.train_identities},
        {"files", files_of(split.train_files)}}},
      {"dev",
       {{"identities", split.dev_identities},
        {"enroll", files_of(split.dev_enroll)},
        {"probe", files_of(split.dev_probe)},
        {"comparisons", split.dev_comparisons.size()}}},
      {"eval",
       {{"identities", split.eval_identities},
        {"enroll", files_of(split.eval_enroll)},
        {"probe", files_of(split.eval_probe)},
        {"comparisons", split.eval_comparisons.size()}}}};
  write_text_atomic(out_path, j.dump(2) + "\n");

  const std::string dir = fs::path(out_path).parent_path().string();
  const std::string prefix = dir.empty() ? "" : dir + "/";
  auto write_list = [&](const char* name,
                        const std::vector<eval::ManifestRow>& list) {
    std::string text;
    for (const eval::ManifestRow& r : list) text += r.file + "\n";
    write_text_atomic(prefix + name, text);
  };
  write_list("train_files.txt", split.train_files);
  write_list("dev_enroll.txt", split.dev_enroll);
  write_list("dev_probe.txt", split.dev_probe);
  write_list("eval_enroll.txt", split.eval_enroll);
  write_list("eval_probe.txt", split.eval_probe);
  std::printf("protocol: %zu train / %zu dev / %zu eval identities\n",
              split.train_identities.size(), split.dev_identities.size(),
              split.eval_identities.size());
}

void run_train(const Config& cfg, const std::string& data_dir,
               const std::string& out_ckpt) {
  std::vector<train::TrainSample> samples;
  for (const fs::path& p : list_images(data_dir)) {
    const std::string stem = p.stem().string();
    const std::string mask_path =
        (p.parent_path() / (stem + ".mask.png")).string();
    if (!fs::exists(mask_path))
      throw DataError("run_train: missing mask " + mask_path);
    train::TrainSample s;
    s.image = load_image(p.string());
    s.mask = load_mask(mask_path);
    s.id = stem;
    samples.push_back(std::move(s));
  }
  if (samples.empty())
    throw DataError("run_train: no training images in " + data_dir);

  // Identity-disjoint validation split: the last val_fraction of the
  // sorted identity list is held out.
  std::vector<std::string> identities;
  for (const train::TrainSample& s : samples)
    identities.push_back(identity_of(s.id));
  std::sort(identities.begin(), identities.end());
  identities.erase(std::unique(identities.begin(), identities.end()),
                   identities.end());
  const auto n_val = static_cast<std::size_t>(
      std::floor(static_cast<double>(identities.size()) *
                 static_cast<double>(cfg.train.val_fraction)));
  const std::size_t val_from = identities.size() - n_val;

  std::vector<train::TrainSample> train_set, val_set;
  for (train::TrainSample& s : samples) {
    const std::string ident = identity_of(s.id);
    const auto it =
        std::lower_bound(identities.begin(), identities.end(), ident);
    const auto idx = static_cast<std::size_t>(it - identities.begin());
    (idx >= val_from ? val_set : train_set).push_back(std::move(s));
  }
  if (train_set.empty())
    throw DataError("run_train: validation split consumed every identity");

  resfpn::Model model = resfpn::Model::build(cfg.model, cfg.train.seed);
  nn::AdamState adam;
  adam.lr = cfg.train.lr;

  std::ofstream log(out_ckpt + ".log.jsonl", std::ios::trunc);
  if (!log) throw DataError("run_train: cannot open " + out_ckpt + ".log.jsonl");
  const train::FitReport report =
      train::fit(model, train_set, val_set, cfg.train, adam, &log);

  train::checkpoint_save(out_ckpt, model, &adam,
                         {{"config_hash", config_hash(cfg)},
                          {"config", config_to_json(cfg)}});
  std::printf("trained %d epochs on %zu samples (%zu held out); best epoch "
              "%d, val loss %.6f\n",
              cfg.train.epochs, train_set.size(), val_set.size(),
              report.best_epoch, report.best_val_loss);
}

void run_enhance(const std::string& ckpt_path, const std::string& in_dir,
                 const std::string& out_dir,
                 std::optional<float> alpha_override) {
  train::Checkpoint ckpt = train::checkpoint_load(ckpt_path);
  if (alpha_override.has_value()) ckpt.model.set_alpha(*alpha_override);
  ensure_dir(out_dir);
  std::size_t count = 0;
  for (const fs::path& p : list_images(in_dir)) {
    const Image out = resfpn::enhance_fit(ckpt.model, load_image(p.string()));
    save_png(out_dir + "/" + p.stem().string() + ".png", out);
    ++count;
  }
  std::printf("enhanced %zu presentations into %s\n", count, out_dir.c_str());
}

void run_extract(const Config& cfg, const std::string& in_dir,
                 const std::string& out_dir) {
  const rec::ExtractOptions opt = extract_options(cfg);
  ensure_dir(out_dir);
  std::size_t done = 0, skipped = 0;
  for (const fs::path& p : list_images(in_dir)) {
    const std::string stem = p.stem().string();
    rec::VeinTemplate tpl;
    try {
      tpl = rec::extract_template(load_image(p.string()), stem, opt, nullptr);
    } catch (const SegmentationError& e) {
      std::fprintf(stderr, "warning: skipping %s: %s\n", stem.c_str(),
                   e.what());
      ++skipped;
      continue;
    }
    rec::save_template(out_dir + "/" + stem + ".tpl", tpl);
    ++done;
  }
  std::printf("extracted %zu templates into %s (%zu skipped)\n", done,
              out_dir.c_str(), skipped);
}

void run_match(const Config& cfg, const std::string& probes_dir,
               const std::string& models_dir, const std::string& out_csv,
               std::optional<std::pair<int, int>> shift_override) {
  const int shift_h = shift_override ? shift_override->first : cfg.rec.shift_h;
  const int shift_w = shift_override ? shift_override->second : cfg.rec.shift_w;

  std::vector<rec::EnrollmentModel> models;
  std::map<std::string, std::size_t> index;
  for (const fs::path& p : list_templates(models_dir)) {
    const std::string stem = p.stem().string();
    rec::VeinTemplate tpl = rec::load_template(p.string());
    tpl.source_id = stem;
    const std::string ident = identity_of(stem);
    auto [it, fresh] = index.try_emplace(ident, models.size());
    if (fresh) models.push_back(rec::EnrollmentModel{ident, {}});
    models[it->second].templates.push_back(std::move(tpl));
  }
  if (models.empty())
    throw DataError("run_match: no model templates in " + models_dir);
  std::sort(models.begin(), models.end(),
            [](const rec::EnrollmentModel& a, const rec::EnrollmentModel& b) {
              return a.model_id < b.model_id;
            });

  const std::vector<fs::path> probe_files = list_templates(probes_dir);
  if (probe_files.empty())
    throw DataError("run_match: no probe templates in " + probes_dir);

  std::vector<rec::MatchScore> rows;
  rows.reserve(probe_files.size() * models.size());
  for (const fs::path& p : probe_files) {
    const std::string stem = p.stem().string();
    rec::VeinTemplate probe = rec::load_template(p.string());
    probe.source_id = stem;
    const std::string probe_ident = identity_of(stem);
    for (const rec::EnrollmentModel& model : models) {
      bool undefined = false;
      rows.push_back(rec::score_probe(probe, stem, model,
                                      probe_ident == model.model_id, shift_h,
                                      shift_w, &undefined));
      if (undefined)
        std::fprintf(stderr,
                     "warning: score for (%s, %s) is undefined (empty "
                     "templates); recorded as 0\n",
                     stem.c_str(), model.model_id.c_str());
    }
  }
  std::sort(rows.begin(), rows.end(),
            [](const rec::MatchScore& a, const rec::MatchScore& b) {
              return std::tie(a.probe_id, a.model_id) <
                     std::tie(b.probe_id, b.model_id);
            });
  save_scores(out_csv, rows, config_hash(cfg));
  std::printf("matched %zu probes against %zu models: %zu scores\n",
              probe_files.size(), models.size(), rows.size());
}

void run_evaluate(const Config& cfg, const std::string& dev_csv,
                  const std::string& eval_csv, const std::string& out_dir) {
  const ScoresFile dev_file = load_scores(dev_csv);
  const ScoresFile eval_file = load_scores(eval_csv);
  if (!dev_file.config_hash.empty() && !eval_file.config_hash.empty() &&
      dev_file.config_hash != eval_file.config_hash)
    std::fprintf(stderr,
                 "warning: dev and eval score files carry different config "
                 "hashes (%s vs %s)\n",
                 dev_file.config_hash.c_str(), eval_file.config_hash.c_str());

  const std::vector<eval::LabeledScore> dev = to_labeled(dev_file);
  const std::vector<eval::LabeledScore> evl = to_labeled(eval_file);

  const eval::EerResult eer = eval::eer_threshold(dev);
  const eval::MetricsReport dev_rep = eval::hter(dev, eer.threshold);
  const eval::MetricsReport eval_rep = eval::hter(evl, eer.threshold);

  ensure_dir(out_dir);
  nlohmann::json dev_j = report_section(dev_rep);
  dev_j["eer"] = eer.eer;
  dev_j["eer_pct"] = eval::render_percent(eer.eer);
  nlohmann::json j{{"config_hash", config_hash(cfg)},
                   {"dev_scores_hash", dev_file.config_hash},
                   {"eval_scores_hash", eval_file.config_hash},
                   {"threshold", threshold_json(eer.threshold)},
                   {"dev", dev_j},
                   {"eval", report_section(eval_rep)}};
  write_text_atomic(out_dir + "/report.json", j.dump(2) + "\n");
  write_text_atomic(out_dir + "/roc_dev.csv", roc_csv(dev_rep.roc));
  write_text_atomic(out_dir + "/roc_eval.csv", roc_csv(eval_rep.roc));
  write_text_atomic(out_dir + "/hist_dev.csv", hist_csv(dev_rep.hist));
  write_text_atomic(out_dir + "/hist_eval.csv", hist_csv(eval_rep.hist));
  write_text_atomic(out_dir + "/roc_eval.svg", roc_svg(eval_rep.roc));
  std::printf("dev EER %s%% at threshold %s; eval HTER %s%% (FMR %s%%, FNMR "
              "%s%%)\n",
              eval::render_percent(eer.eer).c_str(),
              std::isfinite(eer.threshold)
                  ? format_double(eer.threshold, "%.6f").c_str()
                  : (eer.threshold > 0 ? "inf" : "-inf"),
              eval::render_percent(eval_rep.hter).c_str(),
              eval::render_percent(eval_rep.fmr).c_str(),
              eval::render_percent(eval_rep.fnmr).c_str());
}

}  // namespace fv::app
