#include "afdm/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

#include "afdm/error.hpp"

namespace afdm {

ImageRgb::ImageRgb(int w, int h, float fill) : width(w), height(h) {
  if (w <= 0 || h <= 0) throw invalid_argument("ImageRgb: non-positive dims");
  data.assign(static_cast<std::size_t>(w) * h * 3, fill);
}

Tensor ImageRgb::to_tensor() const {
  Tensor t(1, 3, height, width);
  for (std::size_t i = 0; i < data.size(); ++i) t.v[i] = data[i] / 255.0f;
  return t;
}

ImageRgb ImageRgb::padded_to_multiple(int align) const {
  const int pw = (width + align - 1) / align * align;
  const int ph = (height + align - 1) / align * align;
  if (pw == width && ph == height) return *this;
  ImageRgb out(pw, ph);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < ph; ++y) {
      const int sy = std::min(y, height - 1);
      for (int x = 0; x < pw; ++x) out.at(c, y, x) = at(c, sy, std::min(x, width - 1));
    }
  }
  return out;
}

ImageRgb ImageRgb::cropped(int x0, int y0, int w, int h) const {
  if (x0 < 0 || y0 < 0 || x0 + w > width || y0 + h > height) {
    throw invalid_argument("ImageRgb::cropped: window outside image");
  }
  ImageRgb out(w, h);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) out.at(c, y, x) = at(c, y0 + y, x0 + x);
    }
  }
  return out;
}

double psnr(const ImageRgb& a, const ImageRgb& b) {
  if (a.width != b.width || a.height != b.height) {
    throw invalid_argument("psnr: image dims differ");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = static_cast<double>(a.data[i]) - b.data[i];
    acc += d * d;
  }
  const double mse = acc / static_cast<double>(a.data.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

namespace {

std::uint8_t to_byte(float v) {
  const long r = std::lround(v);
  return static_cast<std::uint8_t>(std::clamp(r, 0L, 255L));
}

ImageRgb from_interleaved(int w, int h, const std::vector<std::uint8_t>& rgb) {
  ImageRgb img(w, h);
  std::size_t i = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      img.at(0, y, x) = rgb[i++];
      img.at(1, y, x) = rgb[i++];
      img.at(2, y, x) = rgb[i++];
    }
  }
  return img;
}

int read_pnm_int(std::istream& in) {
  // skips whitespace and '#' comments
  int ch = in.get();
  while (ch == '#' || std::isspace(ch)) {
    if (ch == '#') {
      while (ch != '\n' && ch != EOF) ch = in.get();
    }
    ch = in.get();
  }
  int val = 0;
  bool any = false;
  while (std::isdigit(ch)) {
    val = val * 10 + (ch - '0');
    any = true;
    ch = in.get();
  }
  if (!any) throw data_error("pnm: malformed header");
  return val;
}

ImageRgb load_pnm(const std::string& path, bool gray) {
  std::ifstream in(path, std::ios::binary);
  in.get();
  in.get();  // magic already sniffed
  const int w = read_pnm_int(in);
  const int h = read_pnm_int(in);
  const int maxval = read_pnm_int(in);
  if (w <= 0 || h <= 0 || maxval != 255) {
    throw data_error("pnm: unsupported header in " + path);
  }
  const std::size_t count = static_cast<std::size_t>(w) * h * (gray ? 1 : 3);
  std::vector<std::uint8_t> buf(count);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(count));
  if (static_cast<std::size_t>(in.gcount()) != count) {
    throw data_error("pnm: truncated pixel data in " + path);
  }
  if (gray) {
    ImageRgb img(w, h);
    std::size_t i = 0;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x, ++i) {
        img.at(0, y, x) = img.at(1, y, x) = img.at(2, y, x) = buf[i];
      }
    }
    return img;
  }
  return from_interleaved(w, h, buf);
}

void save_ppm(const ImageRgb& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot open " + path + " for writing");
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width) * 3);
  for (int y = 0; y < img.height; ++y) {
    std::size_t i = 0;
    for (int x = 0; x < img.width; ++x) {
      row[i++] = to_byte(img.at(0, y, x));
      row[i++] = to_byte(img.at(1, y, x));
      row[i++] = to_byte(img.at(2, y, x));
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw data_error("short write to " + path);
}

struct PngReadCloser {
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::FILE* fp = nullptr;
  ~PngReadCloser() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    if (fp) std::fclose(fp);
  }
};

ImageRgb load_png(const std::string& path) {
  PngReadCloser ctx;
  ctx.fp = std::fopen(path.c_str(), "rb");
  if (!ctx.fp) throw data_error("cannot open " + path);
  ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!ctx.png) throw data_error("png: allocation failure");
  ctx.info = png_create_info_struct(ctx.png);
  if (!ctx.info) throw data_error("png: allocation failure");
  if (setjmp(png_jmpbuf(ctx.png))) throw data_error("png: failed to decode " + path);

  png_init_io(ctx.png, ctx.fp);
  png_read_info(ctx.png, ctx.info);

  png_set_strip_16(ctx.png);
  png_set_packing(ctx.png);
  png_set_palette_to_rgb(ctx.png);
  png_set_expand_gray_1_2_4_to_8(ctx.png);
  png_set_gray_to_rgb(ctx.png);
  png_set_strip_alpha(ctx.png);
  png_read_update_info(ctx.png, ctx.info);

  const int w = static_cast<int>(png_get_image_width(ctx.png, ctx.info));
  const int h = static_cast<int>(png_get_image_height(ctx.png, ctx.info));
  if (png_get_channels(ctx.png, ctx.info) != 3) throw data_error("png: unexpected channel count");

  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(w) * h * 3);
  std::vector<png_bytep> rows(static_cast<std::size_t>(h));
  for (int y = 0; y < h; ++y) rows[y] = pixels.data() + static_cast<std::size_t>(y) * w * 3;
  png_read_image(ctx.png, rows.data());
  png_read_end(ctx.png, nullptr);
  return from_interleaved(w, h, pixels);
}

struct PngWriteCloser {
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::FILE* fp = nullptr;
  ~PngWriteCloser() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    if (fp) std::fclose(fp);
  }
};

void save_png(const ImageRgb& img, const std::string& path) {
  PngWriteCloser ctx;
  ctx.fp = std::fopen(path.c_str(), "wb");
  if (!ctx.fp) throw data_error("cannot open " + path + " for writing");
  ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!ctx.png) throw data_error("png: allocation failure");
  ctx.info = png_create_info_struct(ctx.png);
  if (!ctx.info) throw data_error("png: allocation failure");
  if (setjmp(png_jmpbuf(ctx.png))) throw data_error("png: failed to encode " + path);

  png_init_io(ctx.png, ctx.fp);
  png_set_IHDR(ctx.png, ctx.info, static_cast<png_uint_32>(img.width),
               static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(ctx.png, ctx.info);

  std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width) * 3);
  for (int y = 0; y < img.height; ++y) {
    std::size_t i = 0;
    for (int x = 0; x < img.width; ++x) {
      row[i++] = to_byte(img.at(0, y, x));
      row[i++] = to_byte(img.at(1, y, x));
      row[i++] = to_byte(img.at(2, y, x));
    }
    png_write_row(ctx.png, row.data());
  }
  png_write_end(ctx.png, nullptr);
}

}  // namespace

ImageRgb load_image(const std::string& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw data_error("cannot open " + path);
  unsigned char magic[2] = {0, 0};
  probe.read(reinterpret_cast<char*>(magic), 2);
  probe.close();
  if (magic[0] == 0x89 && magic[1] == 'P') return load_png(path);
  if (magic[0] == 'P' && magic[1] == '6') return load_pnm(path, false);
  if (magic[0] == 'P' && magic[1] == '5') return load_pnm(path, true);
  throw data_error("unsupported image format: " + path);
}

void save_image(const ImageRgb& img, const std::string& path) {
  const auto dot = path.rfind('.');
  const std::string ext = dot == std::string::npos ? "" : path.substr(dot);
  if (ext == ".png") {
    save_png(img, path);
  } else if (ext == ".ppm") {
    save_ppm(img, path);
  } else {
    throw invalid_argument("save_image: unsupported extension '" + ext + "' (use .png or .ppm)");
  }
}

void save_pgm(const std::string& path, int width, int height,
              const std::vector<std::uint8_t>& gray) {
  if (static_cast<std::size_t>(width) * height != gray.size()) {
    throw invalid_argument("save_pgm: buffer size does not match dims");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot open " + path + " for writing");
  out << "P5\n" << width << " " << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(gray.data()), static_cast<std::streamsize>(gray.size()));
  if (!out) throw data_error("short write to " + path);
}

}  // namespace afdm
