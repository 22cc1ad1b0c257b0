#include "fv/app/image_io.hpp"

#include <png.h>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "fv/common/error.hpp"

namespace fv::app {
namespace {

struct FileHandle {
  std::FILE* fp = nullptr;
  explicit FileHandle(const std::string& path, const char* mode)
      : fp(std::fopen(path.c_str(), mode)) {}
  ~FileHandle() {
    if (fp != nullptr) std::fclose(fp);
  }
  FileHandle(const FileHandle&) = delete;
  FileHandle& operator=(const FileHandle&) = delete;
};

// All C++ objects live before the setjmp point; after it only C calls and
// mutations of existing objects happen, so the longjmp error path can
// clean up with ordinary unwinding.
Image load_png_file(const std::string& path) {
  FileHandle file(path, "rb");
  if (file.fp == nullptr) throw DataError("load_image: cannot open " + path);

  std::vector<unsigned char> raw;
  std::vector<png_bytep> row_ptrs;
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) throw DataError("load_image: libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw DataError("load_image: libpng init failed");
  }

  png_uint_32 width = 0, height = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("load_image: corrupt PNG " + path);
  }

  png_init_io(png, file.fp);
  png_read_info(png, info);
  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);

  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (depth == 16) png_set_strip_16(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
      color == PNG_COLOR_TYPE_PALETTE)
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  png_read_update_info(png, info);

  if (png_get_rowbytes(png, info) != width) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("load_image: unsupported PNG layout in " + path);
  }

  raw.resize(static_cast<std::size_t>(width) * height);
  row_ptrs.resize(height);
  for (png_uint_32 y = 0; y < height; ++y)
    row_ptrs[y] = raw.data() + static_cast<std::size_t>(y) * width;
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  Image img(static_cast<std::int64_t>(height), static_cast<std::int64_t>(width));
  for (std::size_t i = 0; i < raw.size(); ++i)
    img.pix[i] = static_cast<float>(raw[i]) / 255.0f;
  return img;
}

// P5 (binary) and P2 (ascii), 8-bit maxval only.
Image load_pgm_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("load_image: cannot open " + path);

  auto next_token = [&]() -> std::string {
    std::string tok;
    int c;
    while ((c = f.get()) != EOF) {
      if (c == '#') {
        while ((c = f.get()) != EOF && c != '\n') {
        }
        continue;
      }
      if (std::isspace(c)) {
        if (!tok.empty()) break;
        continue;
      }
      tok.push_back(static_cast<char>(c));
    }
    if (tok.empty()) throw DataError("load_image: truncated PGM header in " + path);
    return tok;
  };

  const std::string magic = next_token();
  if (magic != "P5" && magic != "P2")
    throw DataError("load_image: not a PGM file: " + path);
  long w = 0, h = 0, maxval = 0;
  try {
    w = std::stol(next_token());
    h = std::stol(next_token());
    maxval = std::stol(next_token());
  } catch (const std::exception&) {
    throw DataError("load_image: bad PGM header in " + path);
  }
  if (w < 1 || h < 1) throw DataError("load_image: bad PGM size in " + path);
  if (maxval < 1 || maxval > 255)
    throw DataError("load_image: only 8-bit PGM supported: " + path);

  Image img(h, w);
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (magic == "P5") {
    std::vector<unsigned char> raw(n);
    f.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(f.gcount()) != n)
      throw DataError("load_image: truncated PGM data in " + path);
    for (std::size_t i = 0; i < n; ++i)
      img.pix[i] = static_cast<float>(raw[i]) / static_cast<float>(maxval);
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      long v = 0;
      try {
        v = std::stol(next_token());
      } catch (const std::exception&) {
        throw DataError("load_image: bad PGM value in " + path);
      }
      if (v < 0 || v > maxval)
        throw DataError("load_image: PGM value out of range in " + path);
      img.pix[i] = static_cast<float>(v) / static_cast<float>(maxval);
    }
  }
  return img;
}

}  // namespace

Image load_image(const std::string& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw DataError("load_image: cannot open " + path);
  unsigned char sig[8] = {};
  probe.read(reinterpret_cast<char*>(sig), 8);
  probe.close();
  if (png_sig_cmp(sig, 0, static_cast<std::size_t>(probe.gcount() < 8
                                                       ? probe.gcount()
                                                       : 8)) == 0)
    return load_png_file(path);
  if (sig[0] == 'P' && (sig[1] == '5' || sig[1] == '2'))
    return load_pgm_file(path);
  throw DataError("load_image: unrecognized image format: " + path);
}

void save_png(const std::string& path, const Image& img) {
  std::vector<unsigned char> raw(img.pix.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const float v = std::min(1.0f, std::max(0.0f, img.pix[i]));
    raw[i] = static_cast<unsigned char>(std::lround(v * 255.0f));
  }
  std::vector<png_bytep> row_ptrs(static_cast<std::size_t>(img.h));
  for (std::int64_t y = 0; y < img.h; ++y)
    row_ptrs[static_cast<std::size_t>(y)] =
        raw.data() + static_cast<std::size_t>(y * img.w);

  const std::string tmp = path + ".tmp";
  {
    FileHandle file(tmp, "wb");
    if (file.fp == nullptr) throw DataError("save_png: cannot open " + tmp);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                              nullptr, nullptr);
    if (png == nullptr) throw DataError("save_png: libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (info == nullptr) {
      png_destroy_write_struct(&png, nullptr);
      throw DataError("save_png: libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
      png_destroy_write_struct(&png, &info);
      throw DataError("save_png: write failed for " + tmp);
    }
    png_init_io(png, file.fp);
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.w),
                 static_cast<png_uint_32>(img.h), 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, row_ptrs.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw DataError("save_png: cannot rename " + tmp + " to " + path);
}

Image load_mask(const std::string& path) {
  Image img = load_image(path);
  for (float& v : img.pix) {
    if (v == 0.0f) continue;
    if (v == 1.0f) continue;
    throw DataError("load_mask: " + path + " has values other than 0 and 255");
  }
  return img;
}

}  // namespace fv::app
