#include "panoflow/image.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <sstream>

#include "panoflow/errors.hpp"
#include "panoflow/util.hpp"

namespace panoflow {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.string().c_str(), mode));
  if (!f) throw DataError("cannot open " + path.string());
  return f;
}

}  // namespace

Image read_png(const std::filesystem::path& path) {
  FilePtr f = open_file(path, "rb");
  png_byte header[8];
  if (std::fread(header, 1, 8, f.get()) != 8 || png_sig_cmp(header, 0, 8))
    throw DataError("not a PNG file: " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("PNG decode failed: " + path.string());
  }
  png_init_io(png, f.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const int bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (bit_depth == 16) png_set_swap(png);  // stream is big-endian
  png_read_update_info(png, info);

  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  const int channels = png_get_channels(png, info);
  const int depth = png_get_bit_depth(png, info);
  const size_t row_bytes = png_get_rowbytes(png, info);

  std::vector<png_byte> raw(row_bytes * h);
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) rows[y] = raw.data() + row_bytes * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  Image img(w, h, channels);
  if (depth == 8) {
    const float s = 1.0f / 255.0f;
    for (size_t i = 0; i < img.data.size(); ++i) img.data[i] = raw[i] * s;
  } else {
    const float s = 1.0f / 65535.0f;
    const uint16_t* p = reinterpret_cast<const uint16_t*>(raw.data());
    for (size_t i = 0; i < img.data.size(); ++i) img.data[i] = p[i] * s;
  }
  return img;
}

void write_png(const Image& img, const std::filesystem::path& path, int bit_depth) {
  if (img.empty()) throw DataError("write_png: empty image");
  if (bit_depth != 8 && bit_depth != 16) throw ConfigError("PNG bit depth must be 8 or 16");
  int color_type;
  switch (img.channels) {
    case 1: color_type = PNG_COLOR_TYPE_GRAY; break;
    case 3: color_type = PNG_COLOR_TYPE_RGB; break;
    case 4: color_type = PNG_COLOR_TYPE_RGBA; break;
    default: throw ConfigError("PNG channels must be 1, 3 or 4");
  }

  FilePtr f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw DataError("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw DataError("PNG encode failed: " + path.string());
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, img.width, img.height, bit_depth, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  png_write_info(png, info);
  if (bit_depth == 16) png_set_swap(png);

  const size_t row_elems = static_cast<size_t>(img.width) * img.channels;
  if (bit_depth == 8) {
    std::vector<png_byte> row(row_elems);
    for (int y = 0; y < img.height; ++y) {
      const float* src = img.data.data() + row_elems * y;
      for (size_t i = 0; i < row_elems; ++i)
        row[i] = static_cast<png_byte>(std::lround(clamp01(src[i]) * 255.0f));
      png_write_row(png, row.data());
    }
  } else {
    std::vector<uint16_t> row(row_elems);
    for (int y = 0; y < img.height; ++y) {
      const float* src = img.data.data() + row_elems * y;
      for (size_t i = 0; i < row_elems; ++i)
        row[i] = static_cast<uint16_t>(std::lround(clamp01(src[i]) * 65535.0f));
      png_write_row(png, reinterpret_cast<png_bytep>(row.data()));
    }
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image read_pfm(const std::filesystem::path& path) {
  FilePtr f = open_file(path, "rb");
  char magic[3] = {0, 0, 0};
  if (std::fscanf(f.get(), "%2s", magic) != 1) throw DataError("PFM: bad header");
  int channels;
  if (std::strcmp(magic, "Pf") == 0) channels = 1;
  else if (std::strcmp(magic, "PF") == 0) channels = 3;
  else throw DataError("PFM: bad magic in " + path.string());

  int w = 0, h = 0;
  double scale = 0.0;
  if (std::fscanf(f.get(), "%d %d %lf", &w, &h, &scale) != 3 || w <= 0 || h <= 0 || scale == 0.0)
    throw DataError("PFM: bad dimensions/scale in " + path.string());
  std::fgetc(f.get());  // single whitespace before the raster

  const size_t n = static_cast<size_t>(w) * h * channels;
  std::vector<float> raw(n);
  if (std::fread(raw.data(), sizeof(float), n, f.get()) != n)
    throw DataError("PFM: truncated payload in " + path.string());
  if (scale > 0.0) {  // big-endian file
    for (auto& v : raw) {
      uint32_t b;
      std::memcpy(&b, &v, 4);
      b = __builtin_bswap32(b);
      std::memcpy(&v, &b, 4);
    }
  }

  Image img(w, h, channels);
  const size_t row_elems = static_cast<size_t>(w) * channels;
  for (int y = 0; y < h; ++y)  // PFM rows are bottom-to-top
    std::memcpy(img.data.data() + row_elems * y, raw.data() + row_elems * (h - 1 - y),
                row_elems * sizeof(float));
  const float mag = std::abs(static_cast<float>(scale));
  if (mag != 1.0f)
    for (auto& v : img.data) v *= mag;
  return img;
}

void write_pfm(const Image& img, const std::filesystem::path& path) {
  if (img.channels != 1 && img.channels != 3)
    throw ConfigError("PFM supports 1 or 3 channels");
  FilePtr f = open_file(path, "wb");
  std::ostringstream header;
  header << (img.channels == 1 ? "Pf" : "PF") << "\n"
         << img.width << " " << img.height << "\n" << "-1.0" << "\n";
  const std::string hs = header.str();
  if (std::fwrite(hs.data(), 1, hs.size(), f.get()) != hs.size())
    throw DataError("PFM: write failed");
  const size_t row_elems = static_cast<size_t>(img.width) * img.channels;
  for (int y = img.height - 1; y >= 0; --y)
    if (std::fwrite(img.data.data() + row_elems * y, sizeof(float), row_elems, f.get()) != row_elems)
      throw DataError("PFM: write failed");
}

Image to_gray(const Image& img) {
  if (img.channels == 1) return img;
  Image g(img.width, img.height, 1);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const float r = img.at(x, y, 0), gg = img.at(x, y, 1), b = img.at(x, y, 2);
      g.at(x, y) = 0.299f * r + 0.587f * gg + 0.114f * b;
    }
  return g;
}

double psnr(const Image& a, const Image& b, const Image* mask) {
  if (a.width != b.width || a.height != b.height || a.channels != b.channels)
    throw DataError("psnr: dimension mismatch");
  KahanSum se;
  long n = 0;
  for (int y = 0; y < a.height; ++y)
    for (int x = 0; x < a.width; ++x) {
      if (mask && mask->at(x, y) <= 0.5f) continue;
      for (int c = 0; c < a.channels; ++c) {
        const double d = a.at(x, y, c) - b.at(x, y, c);
        se.add(d * d);
      }
      ++n;
    }
  if (n == 0) return 0.0;
  const double mse = se.value() / (static_cast<double>(n) * a.channels);
  if (mse <= 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

Image downsample2(const Image& img, bool wrap_x) {
  const int w = std::max(1, img.width / 2), h = std::max(1, img.height / 2);
  Image out(w, h, img.channels);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int x0 = 2 * x, y0 = 2 * y;
      int x1 = x0 + 1, y1 = std::min(y0 + 1, img.height - 1);
      if (x1 >= img.width) x1 = wrap_x ? 0 : img.width - 1;
      for (int c = 0; c < img.channels; ++c)
        out.at(x, y, c) = 0.25f * (img.at(x0, y0, c) + img.at(x1, y0, c) +
                                   img.at(x0, y1, c) + img.at(x1, y1, c));
    }
  return out;
}

}  // namespace panoflow
