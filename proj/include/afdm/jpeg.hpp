#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "afdm/image.hpp"
#include "afdm/tensor.hpp"

namespace afdm {

// Full-range BT.601 luma/chroma planes, kept in double for codec math.
struct PlanesYcc {
  int width = 0, height = 0;
  std::array<std::vector<double>, 3> p;  // y, cb, cr
};

PlanesYcc rgb_to_ycbcr(const ImageRgb& img);
// Inverse transform, clamped to [0, 255] but not rounded.
ImageRgb ycbcr_to_rgb(const PlanesYcc& planes);

// Annex-K base tables scaled by the IJG quality law:
//   scale = 5000/qf (qf < 50) else 200 - 2*qf
//   entry' = clamp(floor((base*scale + 50) / 100), 1, 255)
struct QuantTable {
  int qf = 50;
  std::array<int, 64> luma{};
  std::array<int, 64> chroma{};
};

QuantTable quant_table_for(int qf);

// Orthonormal 2-D DCT-II on an 8x8 block:
//   D(i,j) = 1/sqrt(2N) C(i) C(j) sum_xy p(x,y) cos((2x+1)i pi/2N) cos((2y+1)j pi/2N)
// with N = 8 and C(0) = 1/sqrt(2), C(k>0) = 1. idct8x8 is its exact inverse.
// Blocks are row-major arrays of 64 doubles; in == out is allowed.
void dct8x8(const double* in, double* out);
void idct8x8(const double* in, double* out);

// One simulated JPEG round trip: level shift, per-block DCT, quantize
// (round to nearest), dequantize, inverse DCT, 4:4:4 throughout. Output
// pixels are whole numbers in [0, 255]. Non-multiple-of-8 images are
// edge-replicated, processed, and cropped back.
ImageRgb jpeg_compress(const ImageRgb& img, int qf);

// Quality factors the multi-pass simulation draws from.
inline constexpr std::array<int, 5> kMultiQfSet = {25, 18, 15, 10, 7};

// `times` passes of jpeg_compress, each at a qf drawn uniformly from
// kMultiQfSet with the seeded generator. 1 <= times <= 5.
ImageRgb jpeg_compress_multi(const ImageRgb& img, int times, std::uint64_t seed);

// Per-image grid of 8x8-block DCT coefficients with every frequency of every
// color plane gathered into its own channel: channel = plane*64 + (u*8 + v).
struct DctBlockGrid {
  static constexpr int kChannels = 192;

  int blocks_h = 0, blocks_w = 0;
  std::vector<float> v;  // channel-major: [channel][by][bx]

  DctBlockGrid() = default;
  DctBlockGrid(int bh, int bw);

  float& at(int ch, int by, int bx) {
    return v[(static_cast<std::size_t>(ch) * blocks_h + by) * blocks_w + bx];
  }
  float at(int ch, int by, int bx) const {
    return v[(static_cast<std::size_t>(ch) * blocks_h + by) * blocks_w + bx];
  }

  Tensor to_tensor() const;  // (1, 192, blocks_h, blocks_w)

  // Flat binary format: magic "DCTG", u32 version, u32 blocksH, u32 blocksW,
  // u32 channels, then little-endian f32 in channel-major order.
  void save(const std::string& path) const;
  static DctBlockGrid load(const std::string& path);
};

// YCbCr conversion, -128 level shift, per-block DCT, rearranged as above.
// Non-multiple-of-8 images are edge-replicated first.
DctBlockGrid gather_rearrange_dct(const ImageRgb& img);

// Inverse of the gather: per-block inverse DCT back to the level-shifted
// luma/chroma planes.
PlanesYcc ungather_dct(const DctBlockGrid& grid);

// DCT coefficient vector of a single block image (all three planes of its
// top-left 8x8 block), the per-block form of the gather.
std::array<double, 192> block_dct_vector(const ImageRgb& block);

}  // namespace afdm
