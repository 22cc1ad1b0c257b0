#include "fv/app/scores_io.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "fv/common/error.hpp"

namespace fv::app {

namespace {
constexpr const char* kHeader = "probe_id,model_id,score,is_genuine";
}

void save_scores(const std::string& path,
                 const std::vector<rec::MatchScore>& rows,
                 const std::string& config_hash) {
  std::string out = "# config_hash=" + config_hash + "\n";
  out += kHeader;
  out += '\n';
  char buf[32];
  for (const rec::MatchScore& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.6f", r.value);
    out += r.probe_id + "," + r.model_id + "," + buf + "," +
           (r.is_genuine ? "1" : "0") + "\n";
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("save_scores: cannot open " + tmp);
    f << out;
    if (!f) throw DataError("save_scores: write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw DataError("save_scores: cannot rename " + tmp + " to " + path);
}

ScoresFile load_scores(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("load_scores: cannot open " + path);
  ScoresFile out;
  std::string line;
  bool header_seen = false;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string tag = "# config_hash=";
      if (line.rfind(tag, 0) == 0) out.config_hash = line.substr(tag.size());
      continue;
    }
    if (!header_seen) {
      if (line != kHeader)
        throw DataError("load_scores: " + path + " line " +
                        std::to_string(line_no) + ": expected header '" +
                        kHeader + "'");
      header_seen = true;
      continue;
    }
    std::array<std::string, 4> fields;
    std::size_t start = 0;
    for (int i = 0; i < 4; ++i) {
      const std::size_t comma = line.find(',', start);
      if ((comma == std::string::npos) != (i == 3))
        throw DataError("load_scores: " + path + " line " +
                        std::to_string(line_no) + ": expected 4 columns");
      fields[static_cast<std::size_t>(i)] =
          line.substr(start, comma - start);
      start = comma + 1;
    }
    rec::MatchScore row;
    row.probe_id = fields[0];
    row.model_id = fields[1];
    try {
      std::size_t pos = 0;
      row.value = std::stod(fields[2], &pos);
      if (pos != fields[2].size()) throw std::invalid_argument(fields[2]);
    } catch (const std::exception&) {
      throw DataError("load_scores: " + path + " line " +
                      std::to_string(line_no) + ": bad score");
    }
    if (fields[3] == "1")
      row.is_genuine = true;
    else if (fields[3] == "0")
      row.is_genuine = false;
    else
      throw DataError("load_scores: " + path + " line " +
                      std::to_string(line_no) + ": is_genuine must be 0 or 1");
    out.rows.push_back(std::move(row));
  }
  if (!header_seen)
    throw DataError("load_scores: " + path + " has no header line");
  return out;
}

}  // namespace fv::app
