#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fv::eval {

struct LabeledScore {
  double score = 0.0;
  bool is_genuine = false;
};

// Exact count ratios; totals must be positive.
double fmr(std::int64_t false_matches, std::int64_t impostor_total);
double fnmr(std::int64_t false_non_matches, std::int64_t genuine_total);

// Renders a rate as a percentage with one decimal, rounding half away
// from zero ("0.12088" -> "12.1").
std::string render_percent(double rate);

// Error counts and rates under the decision rule score >= threshold.
struct RatesAtThreshold {
  double fmr = 0.0;
  double fnmr = 0.0;
  std::int64_t false_matches = 0;
  std::int64_t impostor_total = 0;
  std::int64_t false_non_matches = 0;
  std::int64_t genuine_total = 0;
};
RatesAtThreshold rates_at(const std::vector<LabeledScore>& scores,
                          double threshold);

struct EerResult {
  double threshold = 0.0;
  double eer = 0.0;
  double fmr_at = 0.0;
  double fnmr_at = 0.0;
};

// Picks the threshold minimising |FMR - FNMR| over the candidate set
// (midpoints between adjacent distinct scores plus -inf/+inf sentinels);
// ties go to the lower threshold. Throws ProtocolError unless both
// classes are present.
EerResult eer_threshold(const std::vector<LabeledScore>& scores);

struct RocPoint {
  double fmr = 0.0;
  double tpr = 0.0;  // 1 - FNMR
};

// One operating point per distinct score value plus the (0, 0) sentinel,
// sorted by FMR.
std::vector<RocPoint> roc_points(const std::vector<LabeledScore>& scores);

struct Histogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::int64_t> genuine;
  std::vector<std::int64_t> impostor;
};

// Equal-width bins spanning [min, max] of all scores; a degenerate range
// puts everything into the first bin.
Histogram histogram(const std::vector<LabeledScore>& scores, int n_bins);

struct MetricsReport {
  double threshold = 0.0;
  double fmr = 0.0;
  double fnmr = 0.0;
  double hter = 0.0;
  std::int64_t false_matches = 0;
  std::int64_t impostor_total = 0;
  std::int64_t false_non_matches = 0;
  std::int64_t genuine_total = 0;
  std::vector<RocPoint> roc;
  Histogram hist;
};

// Full fixed-threshold evaluation: rates, HTER = (FMR + FNMR) / 2, ROC
// points and score histograms.
MetricsReport hter(const std::vector<LabeledScore>& scores, double threshold,
                   int n_bins = 30);

}  // namespace fv::eval
