#pragma once

#include <string>
#include <vector>

#include "fv/rec/max_curvature.hpp"
#include "fv/rec/miura.hpp"
#include "fv/rec/preprocess.hpp"
#include "fv/resfpn/model.hpp"

namespace fv::rec {

struct ExtractOptions {
  PreprocessOptions pre;
  McOptions mc;
};

// All templates enrolled for one identity.
struct EnrollmentModel {
  std::string model_id;
  std::vector<VeinTemplate> templates;
};

struct EnrollInput {
  Image image;
  std::string id;        // sample identifier, becomes the template source_id
  std::string identity;  // grouping key for the model
};

struct ExtractFailure {
  std::string id;
  std::string message;
};

// Runs one presentation through the recognition front end: optional
// enhancement, normalisation, vein extraction. With enhancer == nullptr
// this is the plain baseline path.
VeinTemplate extract_template(const Image& raw, const std::string& id,
                              const ExtractOptions& opt,
                              resfpn::Model* enhancer = nullptr);

// Builds one model per identity, in first-seen order. Samples that fail
// segmentation are recorded in `failures` and skipped; identities whose
// samples all fail are dropped entirely.
std::vector<EnrollmentModel> enroll(const std::vector<EnrollInput>& samples,
                                    const ExtractOptions& opt,
                                    resfpn::Model* enhancer,
                                    std::vector<ExtractFailure>* failures);

// Probe-vs-model score: the maximum match score over the model's
// templates. `undefined` is set when every pairing was empty-vs-empty.
// Throws ParamError on a model with no templates.
MatchScore score_probe(const VeinTemplate& probe, const std::string& probe_id,
                       const EnrollmentModel& model, bool is_genuine,
                       int shift_h, int shift_w, bool* undefined = nullptr);

}  // namespace fv::rec
