#include "fv/rec/template_io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <vector>

#include "fv/common/error.hpp"

namespace fv::rec {
namespace {

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(const std::string& buf, std::size_t off) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[off + i]))
         << (8 * i);
  return v;
}

}  // namespace

void save_template(const std::string& path, const VeinTemplate& tpl) {
  if (tpl.h < 1 || tpl.w < 1)
    throw ParamError("save_template: empty template geometry");
  for (std::uint8_t v : tpl.map)
    if (v > 1) throw ParamError("save_template: map values must be 0 or 1");

  std::string out;
  out.append(kTemplateMagic, sizeof(kTemplateMagic));
  out.push_back(static_cast<char>(kTemplateVersion));
  put_u64(out, static_cast<std::uint64_t>(tpl.h));
  put_u64(out, static_cast<std::uint64_t>(tpl.w));
  const std::int64_t row_bytes = (tpl.w + 7) / 8;
  for (std::int64_t y = 0; y < tpl.h; ++y) {
    std::vector<unsigned char> row(static_cast<std::size_t>(row_bytes), 0);
    for (std::int64_t x = 0; x < tpl.w; ++x)
      if (tpl.at(y, x))
        row[static_cast<std::size_t>(x >> 3)] |=
            static_cast<unsigned char>(0x80u >> (x & 7));
    out.append(reinterpret_cast<const char*>(row.data()), row.size());
  }

  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("save_template: cannot open " + tmp);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw DataError("save_template: write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw DataError("save_template: cannot rename " + tmp + " to " + path);
}

VeinTemplate load_template(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("load_template: cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(f)),
                  std::istreambuf_iterator<char>());

  constexpr std::size_t kHeader = sizeof(kTemplateMagic) + 1 + 16;
  if (buf.size() < sizeof(kTemplateMagic))
    throw FormatError("load_template: truncated magic", 0);
  if (std::memcmp(buf.data(), kTemplateMagic, sizeof(kTemplateMagic)) != 0)
    throw FormatError("load_template: bad magic", 0);
  if (buf.size() < kHeader)
    throw FormatError("load_template: truncated header", sizeof(kTemplateMagic));
  const auto version = static_cast<std::uint8_t>(buf[sizeof(kTemplateMagic)]);
  if (version != kTemplateVersion)
    throw VersionError("load_template: unsupported version " +
                       std::to_string(version));
  const std::uint64_t h = get_u64(buf, sizeof(kTemplateMagic) + 1);
  const std::uint64_t w = get_u64(buf, sizeof(kTemplateMagic) + 9);
  if (h == 0 || w == 0 || h > (1u << 20) || w > (1u << 20) ||
      h * w > (std::uint64_t{1} << 32))
    throw FormatError("load_template: implausible dimensions", sizeof(kTemplateMagic) + 1);

  const std::uint64_t row_bytes = (w + 7) / 8;
  const std::uint64_t want = kHeader + h * row_bytes;
  if (buf.size() < want)
    throw FormatError("load_template: truncated pixel data", buf.size());
  if (buf.size() > want)
    throw FormatError("load_template: trailing bytes", want);

  VeinTemplate tpl = make_template(static_cast<std::int64_t>(h),
                                   static_cast<std::int64_t>(w));
  for (std::uint64_t y = 0; y < h; ++y) {
    const char* row = buf.data() + kHeader + y * row_bytes;
    for (std::uint64_t x = 0; x < w; ++x) {
      const auto byte = static_cast<unsigned char>(row[x >> 3]);
      tpl.map[static_cast<std::size_t>(y * w + x)] =
          (byte >> (7 - (x & 7))) & 1u;
    }
  }
  return tpl;
}

}  // namespace fv::rec
