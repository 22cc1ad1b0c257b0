#include "fv/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fv/common/error.hpp"

namespace fv::eval {

double fmr(std::int64_t false_matches, std::int64_t impostor_total) {
  if (impostor_total <= 0)
    throw NumericError("fmr: rate undefined without impostor attempts");
  if (false_matches < 0 || false_matches > impostor_total)
    throw ParamError("fmr: count outside [0, total]");
  return static_cast<double>(false_matches) /
         static_cast<double>(impostor_total);
}

double fnmr(std::int64_t false_non_matches, std::int64_t genuine_total) {
  if (genuine_total <= 0)
    throw NumericError("fnmr: rate undefined without genuine attempts");
  if (false_non_matches < 0 || false_non_matches > genuine_total)
    throw ParamError("fnmr: count outside [0, total]");
  return static_cast<double>(false_non_matches) /
         static_cast<double>(genuine_total);
}

std::string render_percent(double rate) {
  if (!std::isfinite(rate)) throw ParamError("render_percent: non-finite rate");
  // Tenths of a percent, half away from zero. The tiny offset keeps values
  // that sit a binary ulp below a tie (0.0235 * 1000 = 23.499...) on the
  // side their decimal value implies.
  const double scaled = std::abs(rate) * 1000.0;
  auto tenths = static_cast<std::int64_t>(std::floor(scaled + 0.5 + 1e-9));
  std::string out = rate < 0 && tenths != 0 ? "-" : "";
  out += std::to_string(tenths / 10);
  out += '.';
  out += std::to_string(tenths % 10);
  return out;
}

namespace {

struct SplitScores {
  std::vector<double> genuine;
  std::vector<double> impostor;
};

SplitScores split_sorted(const std::vector<LabeledScore>& scores) {
  SplitScores s;
  for (const LabeledScore& r : scores)
    (r.is_genuine ? s.genuine : s.impostor).push_back(r.score);
  std::sort(s.genuine.begin(), s.genuine.end());
  std::sort(s.impostor.begin(), s.impostor.end());
  return s;
}

// Count of entries >= t in an ascending vector.
std::int64_t count_ge(const std::vector<double>& v, double t) {
  return static_cast<std::int64_t>(
      v.end() - std::lower_bound(v.begin(), v.end(), t));
}

}  // namespace

RatesAtThreshold rates_at(const std::vector<LabeledScore>& scores,
                          double threshold) {
  RatesAtThreshold r;
  for (const LabeledScore& s : scores) {
    if (s.is_genuine) {
      ++r.genuine_total;
      if (!(s.score >= threshold)) ++r.false_non_matches;
    } else {
      ++r.impostor_total;
      if (s.score >= threshold) ++r.false_matches;
    }
  }
  r.fmr = fmr(r.false_matches, r.impostor_total);
  r.fnmr = fnmr(r.false_non_matches, r.genuine_total);
  return r;
}

EerResult eer_threshold(const std::vector<LabeledScore>& scores) {
  const SplitScores s = split_sorted(scores);
  if (s.genuine.empty() || s.impostor.empty())
    throw ProtocolError("eer_threshold: need both genuine and impostor scores");

  std::vector<double> distinct;
  distinct.reserve(s.genuine.size() + s.impostor.size());
  std::merge(s.genuine.begin(), s.genuine.end(), s.impostor.begin(),
             s.impostor.end(), std::back_inserter(distinct));
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  std::vector<double> candidates;
  candidates.push_back(-std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i + 1 < distinct.size(); ++i)
    candidates.push_back(0.5 * (distinct[i] + distinct[i + 1]));
  candidates.push_back(std::numeric_limits<double>::infinity());

  const auto ng = static_cast<double>(s.genuine.size());
  const auto ni = static_cast<double>(s.impostor.size());
  EerResult best;
  double best_diff = std::numeric_limits<double>::infinity();
  for (const double t : candidates) {
    const double fm = static_cast<double>(count_ge(s.impostor, t)) / ni;
    const double fnm =
        static_cast<double>(static_cast<std::int64_t>(s.genuine.size()) -
                            count_ge(s.genuine, t)) /
        ng;
    const double diff = std::abs(fm - fnm);
    if (diff < best_diff) {
      best_diff = diff;
      best = EerResult{t, 0.5 * (fm + fnm), fm, fnm};
    }
  }
  return best;
}

std::vector<RocPoint> roc_points(const std::vector<LabeledScore>& scores) {
  const SplitScores s = split_sorted(scores);
  if (s.genuine.empty() || s.impostor.empty())
    throw ProtocolError("roc_points: need both genuine and impostor scores");

  std::vector<double> distinct;
  std::merge(s.genuine.begin(), s.genuine.end(), s.impostor.begin(),
             s.impostor.end(), std::back_inserter(distinct));
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  const auto ng = static_cast<double>(s.genuine.size());
  const auto ni = static_cast<double>(s.impostor.size());
  std::vector<RocPoint> pts;
  pts.push_back({0.0, 0.0});  // accept-nothing sentinel
  for (auto it = distinct.rbegin(); it != distinct.rend(); ++it) {
    const double t = *it;
    pts.push_back({static_cast<double>(count_ge(s.impostor, t)) / ni,
                   static_cast<double>(count_ge(s.genuine, t)) / ng});
  }
  return pts;
}

Histogram histogram(const std::vector<LabeledScore>& scores, int n_bins) {
  if (n_bins < 1) throw ParamError("histogram: n_bins must be >= 1");
  if (scores.empty()) throw ParamError("histogram: no scores");
  Histogram h;
  h.lo = scores.front().score;
  h.hi = scores.front().score;
  for (const LabeledScore& s : scores) {
    h.lo = std::min(h.lo, s.score);
    h.hi = std::max(h.hi, s.score);
  }
  h.genuine.assign(static_cast<std::size_t>(n_bins), 0);
  h.impostor.assign(static_cast<std::size_t>(n_bins), 0);
  const double span = h.hi - h.lo;
  for (const LabeledScore& s : scores) {
    std::int64_t bin = 0;
    if (span > 0.0) {
      bin = static_cast<std::int64_t>((s.score - h.lo) / span *
                                      static_cast<double>(n_bins));
      bin = std::clamp<std::int64_t>(bin, 0, n_bins - 1);
    }
    ++(s.is_genuine ? h.genuine : h.impostor)[static_cast<std::size_t>(bin)];
  }
  return h;
}

MetricsReport hter(const std::vector<LabeledScore>& scores, double threshold,
                   int n_bins) {
  const RatesAtThreshold r = rates_at(scores, threshold);
  MetricsReport rep;
  rep.threshold = threshold;
  rep.fmr = r.fmr;
  rep.fnmr = r.fnmr;
  rep.hter = 0.5 * (r.fmr + r.fnmr);
  rep.false_matches = r.false_matches;
  rep.impostor_total = r.impostor_total;
  rep.false_non_matches = r.false_non_matches;
  rep.genuine_total = r.genuine_total;
  rep.roc = roc_points(scores);
  rep.hist = histogram(scores, n_bins);
  return rep;
}

}  // namespace fv::eval
