#include "geoforge/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>

#include "geoforge/error.hpp"

namespace geoforge::io {

namespace {

std::uint8_t to_byte(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

struct Reader {
  const Bytes* src;
  std::size_t pos;
};

void read_cb(png_structp png, png_bytep out, png_size_t n) {
  auto* r = static_cast<Reader*>(png_get_io_ptr(png));
  if (r->pos + n > r->src->size()) png_error(png, "truncated");
  std::memcpy(out, r->src->data() + r->pos, n);
  r->pos += n;
}

void write_cb(png_structp png, png_bytep data, png_size_t n) {
  auto* out = static_cast<Bytes*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + n);
}

void flush_cb(png_structp) {}

void quiet(png_structp png, png_const_charp) { png_longjmp(png, 1); }

void quiet_warn(png_structp, png_const_charp) {}

ImageRaster load_png(const Bytes& bytes) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, quiet, quiet_warn);
  if (!png) throw GeoError("CorruptData", "libpng init failed");
  png_infop info = png_create_info_struct(png);
  Reader reader{&bytes, 0};
  // everything touched after setjmp lives outside this frame's locals
  std::vector<std::uint8_t> pixels;
  std::vector<png_bytep> rows;
  png_uint_32 w = 0, h = 0;
  int depth = 0, color = 0, channels = 0;
  bool sixteen = false;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw GeoError("CorruptData", "PNG stream is truncated or corrupt");
  }
  png_set_read_fn(png, &reader, read_cb);
  png_read_info(png, info);
  w = png_get_image_width(png, info);
  h = png_get_image_height(png, info);
  depth = png_get_bit_depth(png, info);
  color = png_get_color_type(png, info);
  sixteen = depth == 16;
  if (!sixteen) {
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);
    channels = png_get_channels(png, info);
    pixels.resize(static_cast<std::size_t>(w) * h * channels);
    rows.resize(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = pixels.data() + static_cast<std::size_t>(y) * w * channels;
    png_read_image(png, rows.data());
  }
  png_destroy_read_struct(&png, &info, nullptr);
  if (sixteen) throw GeoError("UnsupportedFormat", "16-bit PNG is not supported");
  if (channels != 1 && channels != 3)
    throw GeoError("UnsupportedFormat", "PNG has " + std::to_string(channels) + " channels");
  ImageRaster img(static_cast<int>(w), static_cast<int>(h), channels, SampleDepth::u8);
  for (std::size_t i = 0; i < pixels.size(); ++i) img.samples[i] = pixels[i] / 255.0f;
  return img;
}

Bytes save_png(const ImageRaster& img, const std::vector<std::uint8_t>& data) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, quiet, quiet_warn);
  if (!png) throw GeoError("CorruptData", "libpng init failed");
  png_infop info = png_create_info_struct(png);
  Bytes out;
  std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw GeoError("CorruptData", "PNG encoding failed");
  }
  png_set_write_fn(png, &out, write_cb, flush_cb);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
               img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
  for (int y = 0; y < img.height; ++y)
    rows[static_cast<std::size_t>(y)] = const_cast<png_bytep>(data.data() + y * stride);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

// whitespace and comments between header tokens
std::size_t skip_space(const Bytes& b, std::size_t i) {
  while (i < b.size()) {
    if (b[i] == '#') {
      while (i < b.size() && b[i] != '\n') ++i;
    } else if (std::isspace(b[i])) {
      ++i;
    } else {
      break;
    }
  }
  return i;
}

long header_int(const Bytes& b, std::size_t& i) {
  i = skip_space(b, i);
  if (i >= b.size() || !std::isdigit(b[i])) throw GeoError("CorruptData", "bad PNM header");
  long v = 0;
  while (i < b.size() && std::isdigit(b[i])) {
    v = v * 10 + (b[i] - '0');
    if (v > 1 << 20) throw GeoError("CorruptData", "PNM header value out of range");
    ++i;
  }
  return v;
}

ImageRaster load_pnm(const Bytes& b) {
  const int channels = b[1] == '5' ? 1 : 3;
  std::size_t i = 2;
  const long w = header_int(b, i), h = header_int(b, i), maxval = header_int(b, i);
  if (maxval != 255) throw GeoError("UnsupportedFormat", "only maxval 255 is supported");
  if (i >= b.size() || !std::isspace(b[i])) throw GeoError("CorruptData", "bad PNM header");
  ++i;
  const std::size_t n = static_cast<std::size_t>(w) * h * channels;
  if (b.size() - i < n) throw GeoError("CorruptData", "PNM pixel data is truncated");
  ImageRaster img(static_cast<int>(w), static_cast<int>(h), channels, SampleDepth::u8);
  for (std::size_t k = 0; k < n; ++k) img.samples[k] = b[i + k] / 255.0f;
  return img;
}

}  // namespace

ImageRaster load_image(const Bytes& bytes) {
  static const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= 8 && std::equal(sig, sig + 8, bytes.begin())) return load_png(bytes);
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6'))
    return load_pnm(bytes);
  if (bytes.size() < 8) throw GeoError("CorruptData", "image data is too short");
  throw GeoError("UnsupportedFormat", "not a PNG, binary PGM or binary PPM");
}

Bytes save_image(const ImageRaster& img, ImageFormat fmt) {
  std::vector<std::uint8_t> data(img.samples.size());
  std::transform(img.samples.begin(), img.samples.end(), data.begin(), to_byte);
  if (fmt == ImageFormat::png) return save_png(img, data);
  const int want = fmt == ImageFormat::pgm ? 1 : 3;
  if (img.channels != want)
    throw GeoError("UnsupportedFormat", std::string(fmt == ImageFormat::pgm ? "PGM" : "PPM") +
                                            " needs " + std::to_string(want) + " channel(s)");
  const std::string head = (want == 1 ? "P5\n" : "P6\n") + std::to_string(img.width) + " " +
                           std::to_string(img.height) + "\n255\n";
  Bytes out(head.begin(), head.end());
  out.insert(out.end(), data.begin(), data.end());
  return out;
}

Bytes save_mask(const Mask& m) {
  ImageRaster img(m.width, m.height, 1, SampleDepth::u8);
  for (std::size_t i = 0; i < m.bits.size(); ++i) img.samples[i] = m.bits[i] ? 1.0f : 0.0f;
  return save_image(img, ImageFormat::png);
}

Bytes read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw GeoError("IoError", "cannot open " + path);
  return Bytes(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const Bytes& bytes) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw GeoError("IoError", "cannot write " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw GeoError("IoError", "short write to " + path);
}

ImageFormat format_for_path(const std::string& path) {
  auto ends = [&](const char* ext) {
    const std::size_t n = std::strlen(ext);
    if (path.size() < n) return false;
    return std::equal(path.end() - static_cast<std::ptrdiff_t>(n), path.end(), ext,
                      [](char a, char b) { return std::tolower(a) == b; });
  };
  if (ends(".png")) return ImageFormat::png;
  if (ends(".pgm")) return ImageFormat::pgm;
  if (ends(".ppm")) return ImageFormat::ppm;
  throw GeoError("UnsupportedFormat", "unknown image extension: " + path);
}

ImageRaster load_image_file(const std::string& path) { return load_image(read_file(path)); }

void save_image_file(const std::string& path, const ImageRaster& img) {
  write_file(path, save_image(img, format_for_path(path)));
}

}  // namespace geoforge::io
