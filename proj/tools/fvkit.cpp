#include <cstdio>
#include <optional>
#include <string>
#include <utility>

#include <CLI11.hpp>

#include "fv/app/config.hpp"
#include "fv/app/pipeline.hpp"
#include "fv/common/error.hpp"

namespace {

std::pair<int, int> parse_shift(const std::string& s) {
  const std::size_t comma = s.find(',');
  if (comma == std::string::npos)
    throw fv::ParamError("--shift expects H,W (e.g. 12,12)");
  try {
    std::size_t pos = 0;
    const int h = std::stoi(s.substr(0, comma), &pos);
    if (pos != comma) throw std::invalid_argument(s);
    const std::string rest = s.substr(comma + 1);
    const int w = std::stoi(rest, &pos);
    if (pos != rest.size()) throw std::invalid_argument(s);
    return {h, w};
  } catch (const fv::Error&) {
    throw;
  } catch (const std::exception&) {
    throw fv::ParamError("--shift expects H,W (e.g. 12,12)");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"finger-vein enhancement and recognition toolkit"};
  cli.require_subcommand(1);
  cli.fallthrough();

  std::string config_path;
  cli.add_option("--config", config_path,
                 "JSON configuration file (default: $FVKIT_CONFIG, then "
                 "built-in defaults)");

  std::string data_dir, out_path, ckpt_path, in_dir, probes_dir, models_dir;
  std::string dev_csv, eval_csv, spec_path, manifest_path, shift_str;
  double alpha = -1.0;
  int n_identities = 60;
  int n_sessions = 4;

  CLI::App* train = cli.add_subcommand("train", "train the enhancement model");
  train->add_option("--data", data_dir, "directory of images with *.mask.png")
      ->required();
  train->add_option("--out", out_path, "checkpoint output path")->required();

  CLI::App* enhance =
      cli.add_subcommand("enhance", "write enhanced presentations");
  enhance->add_option("--ckpt", ckpt_path, "trained checkpoint")->required();
  enhance->add_option("--in", in_dir, "input image directory")->required();
  enhance->add_option("--out", out_path, "output directory")->required();
  CLI::Option* alpha_opt =
      enhance->add_option("--alpha", alpha, "override the blend weight");

  CLI::App* extract =
      cli.add_subcommand("extract", "extract vein templates from images");
  extract->add_option("--in", in_dir, "input image directory")->required();
  extract->add_option("--out", out_path, "template output directory")
      ->required();

  CLI::App* match = cli.add_subcommand("match", "score probes against models");
  match->add_option("--probes", probes_dir, "probe template directory")
      ->required();
  match->add_option("--models", models_dir, "model template directory")
      ->required();
  match->add_option("--out", out_path, "scores CSV output path")->required();
  match->add_option("--shift", shift_str, "override the search window as H,W");

  CLI::App* evaluate =
      cli.add_subcommand("evaluate", "threshold on dev scores, report on eval");
  evaluate->add_option("--dev", dev_csv, "development scores CSV")->required();
  evaluate->add_option("--eval", eval_csv, "evaluation scores CSV")
      ->required();
  evaluate->add_option("--out", out_path, "report output directory")
      ->required();

  CLI::App* synth = cli.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--spec", spec_path, "generator spec JSON")->required();
  synth->add_option("--out", out_path, "dataset output directory")->required();
  synth->add_option("--identities", n_identities, "identities to generate")
      ->capture_default_str();
  synth->add_option("--sessions", n_sessions, "sessions per identity")
      ->capture_default_str();

  CLI::App* protocol =
      cli.add_subcommand("protocol", "split a manifest into train/dev/eval");
  protocol->add_option("--manifest", manifest_path, "dataset manifest CSV")
      ->required();
  protocol->add_option("--out", out_path, "protocol JSON output path")
      ->required();

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return cli.exit(e);
    cli.exit(e);
    return 2;
  }

  try {
    if (cli.got_subcommand(synth)) {
      fv::app::run_synth(spec_path, out_path, n_identities, n_sessions);
    } else if (cli.got_subcommand(enhance)) {
      std::optional<float> alpha_override;
      if (alpha_opt->count() > 0) alpha_override = static_cast<float>(alpha);
      fv::app::run_enhance(ckpt_path, in_dir, out_path, alpha_override);
    } else {
      const fv::app::Config cfg = fv::app::resolve_config(config_path);
      if (cli.got_subcommand(train)) {
        fv::app::run_train(cfg, data_dir, out_path);
      } else if (cli.got_subcommand(extract)) {
        fv::app::run_extract(cfg, in_dir, out_path);
      } else if (cli.got_subcommand(match)) {
        std::optional<std::pair<int, int>> shift;
        if (!shift_str.empty()) shift = parse_shift(shift_str);
        fv::app::run_match(cfg, probes_dir, models_dir, out_path, shift);
      } else if (cli.got_subcommand(evaluate)) {
        fv::app::run_evaluate(cfg, dev_csv, eval_csv, out_path);
      } else if (cli.got_subcommand(protocol)) {
        fv::app::run_protocol(cfg, manifest_path, out_path);
      }
    }
    return 0;
  } catch (const fv::Error& e) {
    std::fprintf(stderr, "fvkit: error [%s]: %s\n", e.category().c_str(),
                 e.what());
    if (e.category() == "param") return 2;
    if (e.category() == "numeric") return 4;
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "fvkit: error [internal]: %s\n", e.what());
    return 3;
  }
}
