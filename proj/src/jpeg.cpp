#include "afdm/jpeg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "afdm/error.hpp"
#include "afdm/rng.hpp"
#include "binio.hpp"

namespace afdm {

namespace {

// BT.601 full-range coefficients.
constexpr double kYr = 0.299, kYg = 0.587, kYb = 0.114;
constexpr double kCbR = -0.168736, kCbG = -0.331264, kCbB = 0.5;
constexpr double kCrR = 0.5, kCrG = -0.418688, kCrB = -0.081312;

// ISO/IEC 10918-1 Annex K base tables, row-major.
constexpr int kBaseLuma[64] = {
    16, 11, 10, 16,  24,  40,  51,  61,   //
    12, 12, 14, 19,  26,  58,  60,  55,   //
    14, 13, 16, 24,  40,  57,  69,  56,   //
    14, 17, 22, 29,  51,  87,  80,  62,   //
    18, 22, 37, 56,  68,  109, 103, 77,   //
    24, 35, 55, 64,  81,  104, 113, 92,   //
    49, 64, 78, 87,  103, 121, 120, 101,  //
    72, 92, 95, 98,  112, 100, 103, 99};
constexpr int kBaseChroma[64] = {
    17, 18, 24, 47, 99, 99, 99, 99,  //
    18, 21, 26, 66, 99, 99, 99, 99,  //
    24, 26, 56, 99, 99, 99, 99, 99,  //
    47, 66, 99, 99, 99, 99, 99, 99,  //
    99, 99, 99, 99, 99, 99, 99, 99,  //
    99, 99, 99, 99, 99, 99, 99, 99,  //
    99, 99, 99, 99, 99, 99, 99, 99,  //
    99, 99, 99, 99, 99, 99, 99, 99};

// Orthonormal 1-D DCT-II matrix: m[k][n] = sqrt(2/N) c(k) cos((2n+1)k pi / 2N).
struct DctBasis {
  double m[8][8];
  DctBasis() {
    const double pi = 3.14159265358979323846;
    for (int k = 0; k < 8; ++k) {
      const double ck = k == 0 ? 1.0 / std::sqrt(2.0) : 1.0;
      for (int n = 0; n < 8; ++n) {
        m[k][n] = 0.5 * ck * std::cos((2.0 * n + 1.0) * k * pi / 16.0);
      }
    }
  }
};

const DctBasis& basis() {
  static const DctBasis b;
  return b;
}

}  // namespace

PlanesYcc rgb_to_ycbcr(const ImageRgb& img) {
  PlanesYcc out;
  out.width = img.width;
  out.height = img.height;
  const std::size_t count = static_cast<std::size_t>(img.width) * img.height;
  for (auto& plane : out.p) plane.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double r = img.data[i];
    const double g = img.data[count + i];
    const double b = img.data[2 * count + i];
    out.p[0][i] = kYr * r + kYg * g + kYb * b;
    out.p[1][i] = 128.0 + kCbR * r + kCbG * g + kCbB * b;
    out.p[2][i] = 128.0 + kCrR * r + kCrG * g + kCrB * b;
  }
  return out;
}

ImageRgb ycbcr_to_rgb(const PlanesYcc& planes) {
  ImageRgb out(planes.width, planes.height);
  const std::size_t count = static_cast<std::size_t>(planes.width) * planes.height;
  for (std::size_t i = 0; i < count; ++i) {
    const double y = planes.p[0][i];
    const double cb = planes.p[1][i] - 128.0;
    const double cr = planes.p[2][i] - 128.0;
    const double r = y + 1.402 * cr;
    const double g = y - 0.344136 * cb - 0.714136 * cr;
    const double b = y + 1.772 * cb;
    out.data[i] = static_cast<float>(std::clamp(r, 0.0, 255.0));
    out.data[count + i] = static_cast<float>(std::clamp(g, 0.0, 255.0));
    out.data[2 * count + i] = static_cast<float>(std::clamp(b, 0.0, 255.0));
  }
  return out;
}

QuantTable quant_table_for(int qf) {
  if (qf < 1 || qf > 100) {
    throw invalid_argument("quant_table_for: qf " + std::to_string(qf) + " outside [1, 100]");
  }
  const int scale = qf < 50 ? 5000 / qf : 200 - 2 * qf;
  QuantTable t;
  t.qf = qf;
  for (int i = 0; i < 64; ++i) {
    t.luma[i] = std::clamp((kBaseLuma[i] * scale + 50) / 100, 1, 255);
    t.chroma[i] = std::clamp((kBaseChroma[i] * scale + 50) / 100, 1, 255);
  }
  return t;
}

void dct8x8(const double* in, double* out) {
  const auto& m = basis().m;
  double tmp[64];
  // tmp = M * X
  for (int i = 0; i < 8; ++i) {
    for (int v = 0; v < 8; ++v) {
      double acc = 0.0;
      for (int u = 0; u < 8; ++u) acc += m[i][u] * in[u * 8 + v];
      tmp[i * 8 + v] = acc;
    }
  }
  // out = tmp * M^T
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) {
      double acc = 0.0;
      for (int v = 0; v < 8; ++v) acc += tmp[i * 8 + v] * m[j][v];
      out[i * 8 + j] = acc;
    }
  }
}

void idct8x8(const double* in, double* out) {
  const auto& m = basis().m;
  double tmp[64];
  // tmp = M^T * D
  for (int u = 0; u < 8; ++u) {
    for (int j = 0; j < 8; ++j) {
      double acc = 0.0;
      for (int i = 0; i < 8; ++i) acc += m[i][u] * in[i * 8 + j];
      tmp[u * 8 + j] = acc;
    }
  }
  // out = tmp * M
  for (int u = 0; u < 8; ++u) {
    for (int v = 0; v < 8; ++v) {
      double acc = 0.0;
      for (int j = 0; j < 8; ++j) acc += tmp[u * 8 + j] * m[j][v];
      out[u * 8 + v] = acc;
    }
  }
}

ImageRgb jpeg_compress(const ImageRgb& img, int qf) {
  const QuantTable qt = quant_table_for(qf);
  const ImageRgb padded = img.padded_to_multiple(8);
  PlanesYcc planes = rgb_to_ycbcr(padded);
  const int bw = padded.width / 8, bh = padded.height / 8;
  double block[64];
  for (int plane = 0; plane < 3; ++plane) {
    const std::array<int, 64>& q = plane == 0 ? qt.luma : qt.chroma;
    std::vector<double>& p = planes.p[plane];
    for (int by = 0; by < bh; ++by) {
      for (int bx = 0; bx < bw; ++bx) {
        for (int y = 0; y < 8; ++y) {
          for (int x = 0; x < 8; ++x) {
            block[y * 8 + x] = p[(by * 8 + y) * static_cast<std::size_t>(padded.width) + bx * 8 + x] - 128.0;
          }
        }
        dct8x8(block, block);
        for (int i = 0; i < 64; ++i) {
          block[i] = static_cast<double>(std::llround(block[i] / q[i])) * q[i];
        }
        idct8x8(block, block);
        for (int y = 0; y < 8; ++y) {
          for (int x = 0; x < 8; ++x) {
            p[(by * 8 + y) * static_cast<std::size_t>(padded.width) + bx * 8 + x] =
                block[y * 8 + x] + 128.0;
          }
        }
      }
    }
  }
  ImageRgb out = ycbcr_to_rgb(planes);
  for (float& f : out.data) f = static_cast<float>(std::lround(f));
  if (out.width != img.width || out.height != img.height) {
    out = out.cropped(0, 0, img.width, img.height);
  }
  return out;
}

ImageRgb jpeg_compress_multi(const ImageRgb& img, int times, std::uint64_t seed) {
  if (times < 1 || times > 5) {
    throw invalid_argument("jpeg_compress_multi: times " + std::to_string(times) +
                           " outside [1, 5]");
  }
  Rng rng(seed);
  ImageRgb out = img;
  for (int t = 0; t < times; ++t) {
    out = jpeg_compress(out, kMultiQfSet[rng.uniform_int(static_cast<int>(kMultiQfSet.size()))]);
  }
  return out;
}

DctBlockGrid::DctBlockGrid(int bh, int bw) : blocks_h(bh), blocks_w(bw) {
  if (bh <= 0 || bw <= 0) throw invalid_argument("DctBlockGrid: non-positive block dims");
  v.assign(static_cast<std::size_t>(kChannels) * bh * bw, 0.0f);
}

Tensor DctBlockGrid::to_tensor() const {
  Tensor t(1, kChannels, blocks_h, blocks_w);
  t.v = v;
  return t;
}

void DctBlockGrid::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot open " + path + " for writing");
  out.write("DCTG", 4);
  binio::write_u32(out, 1u);
  binio::write_u32(out, static_cast<std::uint32_t>(blocks_h));
  binio::write_u32(out, static_cast<std::uint32_t>(blocks_w));
  binio::write_u32(out, static_cast<std::uint32_t>(kChannels));
  binio::write_f32_array(out, v);
  if (!out) throw data_error("short write to " + path);
}

DctBlockGrid DctBlockGrid::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "DCTG") throw data_error(path + ": not a DCTG file");
  const std::uint32_t version = binio::read_u32(in);
  if (version != 1) throw data_error(path + ": unsupported DCTG version");
  const int bh = static_cast<int>(binio::read_u32(in));
  const int bw = static_cast<int>(binio::read_u32(in));
  const std::uint32_t channels = binio::read_u32(in);
  if (channels != kChannels) throw data_error(path + ": unexpected channel count");
  DctBlockGrid grid(bh, bw);
  binio::read_f32_array(in, grid.v);
  if (!in) throw data_error(path + ": truncated grid data");
  return grid;
}

DctBlockGrid gather_rearrange_dct(const ImageRgb& img) {
  const ImageRgb padded = img.padded_to_multiple(8);
  const PlanesYcc planes = rgb_to_ycbcr(padded);
  const int bw = padded.width / 8, bh = padded.height / 8;
  DctBlockGrid grid(bh, bw);
  double block[64];
  for (int plane = 0; plane < 3; ++plane) {
    const std::vector<double>& p = planes.p[plane];
    for (int by = 0; by < bh; ++by) {
      for (int bx = 0; bx < bw; ++bx) {
        for (int y = 0; y < 8; ++y) {
          for (int x = 0; x < 8; ++x) {
            block[y * 8 + x] =
                p[(by * 8 + y) * static_cast<std::size_t>(padded.width) + bx * 8 + x] - 128.0;
          }
        }
        dct8x8(block, block);
        for (int f = 0; f < 64; ++f) {
          grid.at(plane * 64 + f, by, bx) = static_cast<float>(block[f]);
        }
      }
    }
  }
  return grid;
}

PlanesYcc ungather_dct(const DctBlockGrid& grid) {
  PlanesYcc out;
  out.width = grid.blocks_w * 8;
  out.height = grid.blocks_h * 8;
  for (auto& plane : out.p) {
    plane.assign(static_cast<std::size_t>(out.width) * out.height, 0.0);
  }
  double block[64];
  for (int plane = 0; plane < 3; ++plane) {
    for (int by = 0; by < grid.blocks_h; ++by) {
      for (int bx = 0; bx < grid.blocks_w; ++bx) {
        for (int f = 0; f < 64; ++f) block[f] = grid.at(plane * 64 + f, by, bx);
        idct8x8(block, block);
        for (int y = 0; y < 8; ++y) {
          for (int x = 0; x < 8; ++x) {
            out.p[plane][(by * 8 + y) * static_cast<std::size_t>(out.width) + bx * 8 + x] =
                block[y * 8 + x];
          }
        }
      }
    }
  }
  return out;
}

std::array<double, 192> block_dct_vector(const ImageRgb& block) {
  if (block.width < 8 || block.height < 8) {
    throw invalid_argument("block_dct_vector: block smaller than 8x8");
  }
  const PlanesYcc planes = rgb_to_ycbcr(block);
  std::array<double, 192> out{};
  double buf[64];
  for (int plane = 0; plane < 3; ++plane) {
    for (int y = 0; y < 8; ++y) {
      for (int x = 0; x < 8; ++x) {
        buf[y * 8 + x] = planes.p[plane][y * static_cast<std::size_t>(block.width) + x] - 128.0;
      }
    }
    dct8x8(buf, buf);
    for (int f = 0; f < 64; ++f) out[plane * 64 + f] = buf[f];
  }
  return out;
}

}  // namespace afdm
