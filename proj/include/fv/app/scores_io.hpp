#pragma once

#include <string>
#include <vector>

#include "fv/rec/miura.hpp"

namespace fv::app {

// Score CSV layout:
//   # config_hash=<16 hex digits>
//   probe_id,model_id,score,is_genuine
//   c011_f1_s4,c011_f1,0.267311,1
// Scores carry six decimals; is_genuine is 0 or 1.
void save_scores(const std::string& path,
                 const std::vector<rec::MatchScore>& rows,
                 const std::string& config_hash);

struct ScoresFile {
  std::string config_hash;  // empty when the comment line is absent
  std::vector<rec::MatchScore> rows;
};

ScoresFile load_scores(const std::string& path);

}  // namespace fv::app
