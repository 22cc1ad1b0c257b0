#include "fv/rec/enroll.hpp"

#include <algorithm>
#include <map>

#include "fv/common/error.hpp"

namespace fv::rec {

VeinTemplate extract_template(const Image& raw, const std::string& id,
                              const ExtractOptions& opt,
                              resfpn::Model* enhancer) {
  const Image* src = &raw;
  Image enhanced;
  if (enhancer != nullptr) {
    enhanced = resfpn::enhance_fit(*enhancer, raw);
    src = &enhanced;
  }
  const Image pre = preprocess_finger(*src, opt.pre);
  VeinTemplate tpl = mc_extract(pre, opt.mc);
  tpl.source_id = id;
  return tpl;
}

std::vector<EnrollmentModel> enroll(const std::vector<EnrollInput>& samples,
                                    const ExtractOptions& opt,
                                    resfpn::Model* enhancer,
                                    std::vector<ExtractFailure>* failures) {
  std::vector<EnrollmentModel> models;
  std::map<std::string, std::size_t> index;
  for (const EnrollInput& s : samples) {
    VeinTemplate tpl;
    try {
      tpl = extract_template(s.image, s.id, opt, enhancer);
    } catch (const SegmentationError& e) {
      if (failures != nullptr) failures->push_back({s.id, e.what()});
      continue;
    }
    auto [it, fresh] = index.try_emplace(s.identity, models.size());
    if (fresh) models.push_back(EnrollmentModel{s.identity, {}});
    models[it->second].templates.push_back(std::move(tpl));
  }
  return models;
}

MatchScore score_probe(const VeinTemplate& probe, const std::string& probe_id,
                       const EnrollmentModel& model, bool is_genuine,
                       int shift_h, int shift_w, bool* undefined) {
  if (model.templates.empty())
    throw ParamError("score_probe: model " + model.model_id +
                     " has no templates");
  double best = 0.0;
  bool all_undefined = true;
  for (const VeinTemplate& t : model.templates) {
    const MiuraResult r = miura_match(probe, t, shift_h, shift_w);
    if (!r.undefined) all_undefined = false;
    best = std::max(best, r.score);
  }
  if (undefined != nullptr) *undefined = all_undefined;
  return MatchScore{best, probe_id, model.model_id, is_genuine};
}

}  // namespace fv::rec
