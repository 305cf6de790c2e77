#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace panoflow {

/// Dense interleaved float image, row-major, linear values (no gamma).
struct Image {
  int width = 0, height = 0, channels = 0;
  std::vector<float> data;

  Image() = default;
  Image(int w, int h, int c) : width(w), height(h), channels(c),
                               data(static_cast<size_t>(w) * h * c, 0.0f) {}

  float& at(int x, int y, int c = 0) {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  float at(int x, int y, int c = 0) const {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  size_t pixel_count() const { return static_cast<size_t>(width) * height; }
  bool empty() const { return data.empty(); }
};

/// Reads an 8- or 16-bit PNG into linear floats in [0, 1].
Image read_png(const std::filesystem::path& path);

/// Writes PNG with the given bit depth (8 or 16); 1, 3 or 4 channels.
void write_png(const Image& img, const std::filesystem::path& path, int bit_depth = 8);

/// PFM: "Pf" single channel or "PF" 3-channel, little-endian (scale -1.0),
/// rows stored bottom-to-top.
Image read_pfm(const std::filesystem::path& path);
void write_pfm(const Image& img, const std::filesystem::path& path);

/// Luminance (Rec.601) of an RGB(A) image; grayscale images pass through.
Image to_gray(const Image& img);

/// Peak signal-to-noise ratio over unit-range images; mask (optional, single
/// channel, >0.5 = include) selects the compared pixels.
double psnr(const Image& a, const Image& b, const Image* mask = nullptr);

/// Box-filtered 2x downsample; if wrap_x, the row is treated as periodic.
Image downsample2(const Image& img, bool wrap_x);

}  // namespace panoflow
