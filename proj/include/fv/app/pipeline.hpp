#pragma once

#include <optional>
#include <string>
#include <utility>

#include "fv/app/config.hpp"

namespace fv::app {

// Subcommand bodies. Each throws fv::Error subclasses; the CLI maps them
// to exit codes. All file outputs are written atomically (temp + rename).

void run_synth(const std::string& spec_path, const std::string& out_dir,
               int n_identities, int n_sessions);

void run_protocol(const Config& cfg, const std::string& manifest_path,
                  const std::string& out_path);

void run_train(const Config& cfg, const std::string& data_dir,
               const std::string& out_ckpt);

void run_enhance(const std::string& ckpt_path, const std::string& in_dir,
                 const std::string& out_dir,
                 std::optional<float> alpha_override);

void run_extract(const Config& cfg, const std::string& in_dir,
                 const std::string& out_dir);

void run_match(const Config& cfg, const std::string& probes_dir,
               const std::string& models_dir, const std::string& out_csv,
               std::optional<std::pair<int, int>> shift_override);

void run_evaluate(const Config& cfg, const std::string& dev_csv,
                  const std::string& eval_csv, const std::string& out_dir);

}  // namespace fv::app
