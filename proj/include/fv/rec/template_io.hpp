#pragma once

#include <string>

#include "fv/rec/max_curvature.hpp"

namespace fv::rec {

inline constexpr char kTemplateMagic[8] = {'F', 'V', 'E', 'I',
                                           'N', 'T', 'P', 'L'};
inline constexpr std::uint8_t kTemplateVersion = 1;

// Templates are stored 1-bit-packed: magic, a version byte, height and
// width as little-endian u64, then each row padded to whole bytes with the
// leftmost pixel in the most significant bit. The source_id is not part of
// the file; loaders derive it from the file name.
void save_template(const std::string& path, const VeinTemplate& tpl);
VeinTemplate load_template(const std::string& path);

}  // namespace fv::rec
