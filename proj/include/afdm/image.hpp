#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "afdm/tensor.hpp"

namespace afdm {

// 8-bit-range RGB image held as three planar float channels. Pixel values
// live in [0, 255]; decoded and compressed images hold whole numbers.
struct ImageRgb {
  int width = 0, height = 0;
  std::vector<float> data;  // planar: r plane, g plane, b plane

  ImageRgb() = default;
  ImageRgb(int w, int h, float fill = 0.0f);

  float& at(int ch, int y, int x) {
    return data[(static_cast<std::size_t>(ch) * height + y) * width + x];
  }
  float at(int ch, int y, int x) const {
    return data[(static_cast<std::size_t>(ch) * height + y) * width + x];
  }

  // (1, 3, h, w) tensor scaled to [0, 1]; the backbone's input convention.
  Tensor to_tensor() const;

  // Edge-replicated copy with dims rounded up to multiples of `align`.
  ImageRgb padded_to_multiple(int align) const;
  ImageRgb cropped(int x0, int y0, int w, int h) const;
};

// Peak signal-to-noise ratio over all three channels, 255 peak. Returns
// +inf for identical images.
double psnr(const ImageRgb& a, const ImageRgb& b);

// Reads PNG, PPM (P6) or PGM (P5, replicated to three channels); the format
// is sniffed from the file's magic bytes.
ImageRgb load_image(const std::string& path);

// Writes PNG or binary PPM depending on the file extension. Values are
// rounded and clamped to [0, 255].
void save_image(const ImageRgb& img, const std::string& path);

void save_pgm(const std::string& path, int width, int height,
              const std::vector<std::uint8_t>& gray);

}  // namespace afdm
