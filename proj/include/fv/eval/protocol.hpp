#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fv::eval {

struct ManifestRow {
  std::string file;
  std::string id;  // file stem, unique per sample
  std::string client;
  int finger = 0;
  int session = 0;
};

// Parses a manifest CSV with columns file,client,finger,session. Lines
// starting with '#' and blank lines are skipped.
std::vector<ManifestRow> parse_manifest(const std::string& path);

// Identity key for a row: "<client>_f<finger>"; every finger counts as a
// distinct identity.
std::string identity_of_row(const ManifestRow& row);

struct SessionRoles {
  std::vector<int> train;
  std::vector<int> enroll;
  std::vector<int> probe;
};

struct SplitSpec {
  // Cumulative-floor identity fractions for train/dev/eval.
  std::array<double, 3> fractions{0.8, 0.1, 0.1};
  // When set, clients are assigned by inclusive numeric id ranges instead
  // of fractions: [0] train, [1] dev, [2] eval.
  std::optional<std::array<std::array<int, 2>, 3>> client_ranges;
};

struct Comparison {
  std::string probe_id;
  std::string probe_file;
  std::string model_identity;
  bool is_genuine = false;
};

struct ProtocolSplit {
  std::vector<std::string> train_identities;
  std::vector<std::string> dev_identities;
  std::vector<std::string> eval_identities;
  std::vector<ManifestRow> train_files;
  std::vector<ManifestRow> dev_enroll;
  std::vector<ManifestRow> dev_probe;
  std::vector<ManifestRow> eval_enroll;
  std::vector<ManifestRow> eval_probe;
  std::vector<Comparison> dev_comparisons;
  std::vector<Comparison> eval_comparisons;
};

// Splits identities into disjoint train/dev/eval subsets, assigns files
// by session role and emits the exhaustive probe-vs-model comparison list
// for the dev and eval subsets. Ordering is deterministic throughout.
ProtocolSplit build_nom_protocol(const std::vector<ManifestRow>& rows,
                                 const SplitSpec& spec,
                                 const SessionRoles& roles);

}  // namespace fv::eval
