#include "fv/eval/protocol.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <tuple>

#include "fv/common/error.hpp"

namespace fv::eval {
namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

int parse_int(const std::string& s, const std::string& what, int line_no) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError("manifest line " + std::to_string(line_no) + ": bad " +
                    what + " '" + s + "'");
  }
}

// Value of the first digit run in the client string, if any.
std::optional<std::int64_t> client_number(const std::string& client) {
  std::size_t i = 0;
  while (i < client.size() && !std::isdigit(static_cast<unsigned char>(client[i])))
    ++i;
  if (i == client.size()) return std::nullopt;
  std::int64_t v = 0;
  while (i < client.size() && std::isdigit(static_cast<unsigned char>(client[i]))) {
    v = v * 10 + (client[i] - '0');
    ++i;
  }
  return v;
}

std::vector<int> normalized(std::vector<int> sessions) {
  std::sort(sessions.begin(), sessions.end());
  sessions.erase(std::unique(sessions.begin(), sessions.end()),
                 sessions.end());
  return sessions;
}

bool contains(const std::vector<int>& sorted, int v) {
  return std::binary_search(sorted.begin(), sorted.end(), v);
}

}  // namespace

std::vector<ManifestRow> parse_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("parse_manifest: cannot open " + path);
  std::vector<ManifestRow> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = t.find(',', start);
      fields.push_back(trim(t.substr(start, comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 4)
      throw DataError("manifest line " + std::to_string(line_no) +
                      ": expected file,client,finger,session");
    ManifestRow row;
    row.file = fields[0];
    row.id = std::filesystem::path(fields[0]).stem().string();
    row.client = fields[1];
    row.finger = parse_int(fields[2], "finger", line_no);
    row.session = parse_int(fields[3], "session", line_no);
    if (row.file.empty() || row.client.empty())
      throw DataError("manifest line " + std::to_string(line_no) +
                      ": empty file or client");
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string identity_of_row(const ManifestRow& row) {
  return row.client + "_f" + std::to_string(row.finger);
}

ProtocolSplit build_nom_protocol(const std::vector<ManifestRow>& rows,
                                 const SplitSpec& spec,
                                 const SessionRoles& roles) {
  if (rows.empty()) throw ProtocolError("build_nom_protocol: empty manifest");

  const std::vector<int> s_train = normalized(roles.train);
  const std::vector<int> s_enroll = normalized(roles.enroll);
  const std::vector<int> s_probe = normalized(roles.probe);
  if (s_enroll.empty() || s_probe.empty())
    throw ProtocolError("build_nom_protocol: enroll and probe sessions required");
  if (s_enroll.back() >= s_probe.front())
    throw ProtocolError(
        "build_nom_protocol: enrollment sessions must precede probe sessions");

  std::set<int> present;
  std::set<std::string> seen_files;
  for (const ManifestRow& r : rows) {
    present.insert(r.session);
    if (!seen_files.insert(r.file).second)
      throw ProtocolError("build_nom_protocol: duplicate file " + r.file);
  }
  for (const std::vector<int>* list : {&s_train, &s_enroll, &s_probe})
    for (int s : *list)
      if (present.count(s) == 0)
        throw ProtocolError("build_nom_protocol: session " +
                            std::to_string(s) + " missing from manifest");

  // Deterministic identity order: numeric client id when available, then
  // the client string, then the finger number.
  using Key = std::tuple<std::int64_t, std::string, int>;
  std::map<Key, std::vector<const ManifestRow*>> ids;
  for (const ManifestRow& r : rows) {
    const std::int64_t num =
        client_number(r.client).value_or(std::numeric_limits<std::int64_t>::max());
    ids[Key{num, r.client, r.finger}].push_back(&r);
  }

  std::vector<std::vector<const ManifestRow*>> members;
  std::vector<std::string> identities;
  std::vector<std::int64_t> client_nums;
  for (auto& [key, list] : ids) {
    identities.push_back(identity_of_row(*list.front()));
    client_nums.push_back(std::get<0>(key));
    members.push_back(std::move(list));
  }
  const std::int64_t n = static_cast<std::int64_t>(identities.size());

  // Partition identities into the three subsets.
  std::vector<int> subset_of(static_cast<std::size_t>(n), -1);
  if (spec.client_ranges.has_value()) {
    const auto& cr = *spec.client_ranges;
    for (int a = 0; a < 3; ++a) {
      if (cr[static_cast<std::size_t>(a)][0] > cr[static_cast<std::size_t>(a)][1])
        throw ProtocolError("build_nom_protocol: empty client range");
      for (int b = a + 1; b < 3; ++b)
        if (cr[static_cast<std::size_t>(a)][0] <= cr[static_cast<std::size_t>(b)][1] &&
            cr[static_cast<std::size_t>(b)][0] <= cr[static_cast<std::size_t>(a)][1])
          throw ProtocolError("build_nom_protocol: overlapping client ranges");
    }
    for (std::int64_t i = 0; i < n; ++i) {
      if (client_nums[static_cast<std::size_t>(i)] ==
          std::numeric_limits<std::int64_t>::max())
        throw ProtocolError("build_nom_protocol: client ranges need numeric "
                            "client ids (got '" +
                            members[static_cast<std::size_t>(i)].front()->client +
                            "')");
      for (int s = 0; s < 3; ++s)
        if (client_nums[static_cast<std::size_t>(i)] >= cr[static_cast<std::size_t>(s)][0] &&
            client_nums[static_cast<std::size_t>(i)] <= cr[static_cast<std::size_t>(s)][1])
          subset_of[static_cast<std::size_t>(i)] = s;
    }
  } else {
    double cum = 0.0;
    std::int64_t prev = 0;
    for (int s = 0; s < 3; ++s) {
      cum += spec.fractions[static_cast<std::size_t>(s)];
      if (spec.fractions[static_cast<std::size_t>(s)] < 0.0)
        throw ProtocolError("build_nom_protocol: negative fraction");
      if (cum > 1.0 + 1e-9)
        throw ProtocolError("build_nom_protocol: fractions exceed 1");
      const std::int64_t upto = std::min<std::int64_t>(
          n, static_cast<std::int64_t>(std::floor(cum * static_cast<double>(n))));
      for (std::int64_t i = prev; i < upto; ++i)
        subset_of[static_cast<std::size_t>(i)] = s;
      prev = upto;
    }
  }

  ProtocolSplit out;
  std::vector<std::vector<std::int64_t>> subset_ids(3);
  for (std::int64_t i = 0; i < n; ++i)
    if (subset_of[static_cast<std::size_t>(i)] >= 0)
      subset_ids[static_cast<std::size_t>(subset_of[static_cast<std::size_t>(i)])]
          .push_back(i);
  for (std::int64_t i : subset_ids[0])
    out.train_identities.push_back(identities[static_cast<std::size_t>(i)]);
  for (std::int64_t i : subset_ids[1])
    out.dev_identities.push_back(identities[static_cast<std::size_t>(i)]);
  for (std::int64_t i : subset_ids[2])
    out.eval_identities.push_back(identities[static_cast<std::size_t>(i)]);
  if (out.dev_identities.empty() || out.eval_identities.empty())
    throw ProtocolError("build_nom_protocol: dev or eval subset is empty");

  auto collect = [&](const std::vector<std::int64_t>& idx,
                     const std::vector<int>& sessions,
                     std::vector<ManifestRow>& dst, const char* what) {
    for (std::int64_t i : idx) {
      std::vector<const ManifestRow*> picked;
      for (const ManifestRow* r : members[static_cast<std::size_t>(i)])
        if (contains(sessions, r->session)) picked.push_back(r);
      std::sort(picked.begin(), picked.end(),
                [](const ManifestRow* a, const ManifestRow* b) {
                  return std::tie(a->session, a->id) < std::tie(b->session, b->id);
                });
      if (picked.empty() && what != nullptr)
        throw ProtocolError("build_nom_protocol: identity " +
                            identities[static_cast<std::size_t>(i)] + " has no " +
                            what + " files");
      for (const ManifestRow* r : picked) dst.push_back(*r);
    }
  };

  collect(subset_ids[0], s_train, out.train_files, nullptr);
  collect(subset_ids[1], s_enroll, out.dev_enroll, "enrollment");
  collect(subset_ids[1], s_probe, out.dev_probe, "probe");
  collect(subset_ids[2], s_enroll, out.eval_enroll, "enrollment");
  collect(subset_ids[2], s_probe, out.eval_probe, "probe");

  auto cross = [](const std::vector<ManifestRow>& probes,
                  const std::vector<std::string>& models,
                  std::vector<Comparison>& dst) {
    for (const ManifestRow& p : probes) {
      const std::string pid = identity_of_row(p);
      for (const std::string& m : models)
        dst.push_back(Comparison{p.id, p.file, m, pid == m});
    }
  };
  cross(out.dev_probe, out.dev_identities, out.dev_comparisons);
  cross(out.eval_probe, out.eval_identities, out.eval_comparisons);
  return out;
}

}  // namespace fv::eval
